//! Symbolic Cholesky analysis: factor pattern, fill count, and the
//! factor-operation estimate used by the sparsity reports.

use super::csc::{CscMatrix, SparseError};
use super::ordering::Permutation;

/// Pattern of the Cholesky/LDLᵀ factor of PAPᵀ.
///
/// Column patterns always include the diagonal. The operation estimate is
/// the fixed counting rule `factor_ops = Σⱼ nnz(L·,j)²`.
#[derive(Debug, Clone)]
pub struct SymbolicFactor {
    perm: Permutation,
    l_col_ptr: Vec<usize>,
    l_rows: Vec<usize>,
    parent: Vec<usize>,
    nnz_l: usize,
    factor_ops: u64,
}

impl SymbolicFactor {
    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn n(&self) -> usize {
        self.l_col_ptr.len() - 1
    }

    /// Row pattern (permuted indices, sorted, diagonal first) of column j of L.
    pub fn col_pattern(&self, j: usize) -> &[usize] {
        &self.l_rows[self.l_col_ptr[j]..self.l_col_ptr[j + 1]]
    }

    /// Elimination-tree parent of permuted column j (usize::MAX for roots).
    pub fn parent(&self, j: usize) -> usize {
        self.parent[j]
    }

    pub fn nnz_l(&self) -> usize {
        self.nnz_l
    }

    pub fn factor_ops(&self) -> u64 {
        self.factor_ops
    }
}

/// Compute the factor pattern of PAPᵀ for a symmetric `pattern`.
///
/// Column pattern rule: pattern(L·,j) = pattern(PAPᵀ lower column j) ∪
/// union over etree children c of (pattern(L·,c) minus its first row).
pub fn symbolic_cholesky(
    pattern: &CscMatrix,
    perm: &Permutation,
) -> Result<SymbolicFactor, SparseError> {
    if pattern.nrows() != pattern.ncols() {
        return Err(SparseError::NotSquare { nrows: pattern.nrows(), ncols: pattern.ncols() });
    }
    let n = pattern.nrows();
    if perm.len() != n {
        return Err(SparseError::Dimension(format!(
            "permutation length {} does not match matrix dimension {n}",
            perm.len()
        )));
    }
    let inv = perm.inverse();

    // lower-triangular pattern of PAPᵀ, one column at a time
    let mut a_lower: Vec<Vec<usize>> = vec![Vec::new(); n];
    for oj in 0..pattern.ncols() {
        let j = inv[oj];
        let (rows, _) = pattern.col(oj);
        for &oi in rows {
            let i = inv[oi];
            if i > j {
                a_lower[j].push(i);
            }
        }
    }

    let mut patterns: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut parent = vec![usize::MAX; n];
    let mut mark = vec![usize::MAX; n];
    for j in 0..n {
        let mut set: Vec<usize> = Vec::with_capacity(a_lower[j].len() + 1);
        mark[j] = j;
        set.push(j);
        for &i in &a_lower[j] {
            if mark[i] != j {
                mark[i] = j;
                set.push(i);
            }
        }
        for &c in &children[j] {
            for &i in &patterns[c][1..] {
                if mark[i] != j {
                    mark[i] = j;
                    set.push(i);
                }
            }
        }
        set.sort_unstable();
        if set.len() > 1 {
            parent[j] = set[1];
            children[set[1]].push(j);
        }
        patterns.push(set);
    }

    let mut l_col_ptr = vec![0usize; n + 1];
    let mut nnz_l = 0usize;
    let mut factor_ops = 0u64;
    for j in 0..n {
        nnz_l += patterns[j].len();
        factor_ops += (patterns[j].len() as u64).pow(2);
        l_col_ptr[j + 1] = nnz_l;
    }
    let mut l_rows = Vec::with_capacity(nnz_l);
    for p in &patterns {
        l_rows.extend_from_slice(p);
    }

    Ok(SymbolicFactor { perm: perm.clone(), l_col_ptr, l_rows, parent, nnz_l, factor_ops })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym_from(entries: &[(usize, usize)], n: usize) -> CscMatrix {
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        for &(i, j) in entries {
            rows.push(i);
            cols.push(j);
            if i != j {
                rows.push(j);
                cols.push(i);
            }
        }
        let vals = vec![1.0; rows.len()];
        CscMatrix::from_triplets(&rows, &cols, &vals, n, n).unwrap()
    }

    #[test]
    fn identity_pattern() {
        let m = sym_from(&[(0, 0), (1, 1), (2, 2)], 3);
        let s = symbolic_cholesky(&m, &Permutation::identity(3)).unwrap();
        assert_eq!(s.nnz_l(), 3);
        assert_eq!(s.factor_ops(), 3);
    }

    #[test]
    fn dense_3x3() {
        let m = sym_from(&[(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)], 3);
        let s = symbolic_cholesky(&m, &Permutation::identity(3)).unwrap();
        assert_eq!(s.nnz_l(), 6);
        assert_eq!(s.factor_ops(), 9 + 4 + 1);
    }

    #[test]
    fn tridiagonal_4x4_no_fill() {
        let m = sym_from(&[(0, 0), (1, 1), (2, 2), (3, 3), (0, 1), (1, 2), (2, 3)], 4);
        let s = symbolic_cholesky(&m, &Permutation::identity(4)).unwrap();
        // hand elimination: columns have 2,2,2,1 entries, no fill
        assert_eq!(s.nnz_l(), 7);
        assert_eq!(s.factor_ops(), 4 + 4 + 4 + 1);
    }

    #[test]
    fn factor_ops_recomputable_from_pattern() {
        let m = sym_from(
            &[(0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (0, 2), (1, 4), (0, 4), (2, 3)],
            5,
        );
        let s = symbolic_cholesky(&m, &Permutation::identity(5)).unwrap();
        let recomputed: u64 =
            (0..s.n()).map(|j| (s.col_pattern(j).len() as u64).pow(2)).sum();
        assert_eq!(s.factor_ops(), recomputed);
        let nnz: usize = (0..s.n()).map(|j| s.col_pattern(j).len()).sum();
        assert_eq!(s.nnz_l(), nnz);
        for j in 0..s.n() {
            assert_eq!(s.col_pattern(j)[0], j, "diagonal present in every column");
        }
    }

    #[test]
    fn banded_natural_order_zero_fill() {
        // pentadiagonal 6x6: lower bandwidth 2
        let mut entries = vec![];
        for i in 0..6usize {
            entries.push((i, i));
            if i + 1 < 6 {
                entries.push((i + 1, i));
            }
            if i + 2 < 6 {
                entries.push((i + 2, i));
            }
        }
        let m = sym_from(&entries, 6);
        let s = symbolic_cholesky(&m, &Permutation::identity(6)).unwrap();
        let lower_nnz = 6 + 5 + 4;
        assert_eq!(s.nnz_l(), lower_nnz, "banded matrix must factor with zero fill");
    }
}
