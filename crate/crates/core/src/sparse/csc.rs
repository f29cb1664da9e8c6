//! Column-compressed sparse matrix storage.

use thiserror::Error;

use crate::dense::DenseMatrix;

/// Magnitudes below this are treated as structural zeros by [`CscMatrix::compress`].
/// PTDF entries that are analytically zero come out of the linear solves as
/// ~1e-16 noise; every nnz count in this crate is taken after a compress at
/// this tolerance.
pub const DROP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("index ({row}, {col}) out of bounds for {nrows}x{ncols} matrix")]
    IndexOutOfBounds { row: usize, col: usize, nrows: usize, ncols: usize },
    #[error("triplet arrays have mismatched lengths ({rows}, {cols}, {vals})")]
    TripletLengths { rows: usize, cols: usize, vals: usize },
    #[error("expected a square matrix, got {nrows}x{ncols}")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is near-singular at column {col} (pivot {pivot:e})")]
    NearSingular { col: usize, pivot: f64 },
}

/// Compressed sparse column matrix.
///
/// Invariants: `col_ptr` is non-decreasing with `col_ptr[ncols] == nnz`, and
/// row indices are strictly increasing within each column.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, col_ptr: vec![0; ncols + 1], row_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    /// Build from coordinate triplets. Duplicate entries are summed;
    /// structural zeros are retained until [`CscMatrix::compress`].
    pub fn from_triplets(
        rows: &[usize],
        cols: &[usize],
        vals: &[f64],
        nrows: usize,
        ncols: usize,
    ) -> Result<Self, SparseError> {
        if rows.len() != cols.len() || rows.len() != vals.len() {
            return Err(SparseError::TripletLengths {
                rows: rows.len(),
                cols: cols.len(),
                vals: vals.len(),
            });
        }
        for (&r, &c) in rows.iter().zip(cols) {
            if r >= nrows || c >= ncols {
                return Err(SparseError::IndexOutOfBounds { row: r, col: c, nrows, ncols });
            }
        }
        // count per column, then bucket-place, then sort and sum duplicates
        let mut count = vec![0usize; ncols + 1];
        for &c in cols {
            count[c + 1] += 1;
        }
        for j in 0..ncols {
            count[j + 1] += count[j];
        }
        let col_ptr_raw = count.clone();
        let mut ri = vec![0usize; rows.len()];
        let mut vv = vec![0.0; rows.len()];
        let mut cursor = col_ptr_raw.clone();
        for k in 0..rows.len() {
            let p = cursor[cols[k]];
            ri[p] = rows[k];
            vv[p] = vals[k];
            cursor[cols[k]] += 1;
        }
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len());
        for j in 0..ncols {
            let lo = col_ptr_raw[j];
            let hi = col_ptr_raw[j + 1];
            let mut entries: Vec<(usize, f64)> =
                (lo..hi).map(|p| (ri[p], vv[p])).collect();
            entries.sort_unstable_by_key(|e| e.0);
            for (r, v) in entries {
                if let Some(last) = row_idx.last() {
                    if row_idx.len() > col_ptr[j] && *last == r {
                        *values.last_mut().unwrap() += v;
                        continue;
                    }
                }
                row_idx.push(r);
                values.push(v);
            }
            col_ptr[j + 1] = row_idx.len();
        }
        Ok(Self { nrows, ncols, col_ptr, row_idx, values })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable view of the stored values; the pattern is fixed.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row indices and values of column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        (&self.row_idx[lo..hi], &self.values[lo..hi])
    }

    /// Entry lookup by binary search; zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.col(j);
        match rows.binary_search(&i) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Drop stored entries with |value| < tol.
    pub fn compress(&mut self, tol: f64) {
        let mut w = 0usize;
        let mut new_ptr = vec![0usize; self.ncols + 1];
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                if self.values[p].abs() >= tol {
                    self.row_idx[w] = self.row_idx[p];
                    self.values[w] = self.values[p];
                    w += 1;
                }
            }
            new_ptr[j + 1] = w;
        }
        self.row_idx.truncate(w);
        self.values.truncate(w);
        self.col_ptr = new_ptr;
    }

    pub fn compressed(mut self, tol: f64) -> Self {
        self.compress(tol);
        self
    }

    pub fn transpose(&self) -> Self {
        let mut count = vec![0usize; self.nrows + 1];
        for &r in &self.row_idx {
            count[r + 1] += 1;
        }
        for i in 0..self.nrows {
            count[i + 1] += count[i];
        }
        let col_ptr = count.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut cursor = count;
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let r = self.row_idx[p];
                let q = cursor[r];
                row_idx[q] = j;
                values[q] = self.values[p];
                cursor[r] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, col_ptr, row_idx, values }
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * xj;
            }
        }
        y
    }

    /// y = Aᵀ x
    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "matvec dimension mismatch");
        let mut y = vec![0.0; self.ncols];
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc += self.values[p] * x[self.row_idx[p]];
            }
            y[j] = acc;
        }
        y
    }

    /// C = A B (sparse-sparse product).
    pub fn matmul(&self, other: &CscMatrix) -> Result<CscMatrix, SparseError> {
        if self.ncols != other.nrows {
            return Err(SparseError::Dimension(format!(
                "matmul: {}x{} * {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut col_ptr = vec![0usize; other.ncols + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        let mut mark = vec![usize::MAX; self.nrows];
        let mut acc = vec![0.0; self.nrows];
        let mut touched: Vec<usize> = Vec::new();
        for j in 0..other.ncols {
            touched.clear();
            for p in other.col_ptr[j]..other.col_ptr[j + 1] {
                let k = other.row_idx[p];
                let bkj = other.values[p];
                for q in self.col_ptr[k]..self.col_ptr[k + 1] {
                    let i = self.row_idx[q];
                    if mark[i] != j {
                        mark[i] = j;
                        acc[i] = 0.0;
                        touched.push(i);
                    }
                    acc[i] += self.values[q] * bkj;
                }
            }
            touched.sort_unstable();
            for &i in &touched {
                row_idx.push(i);
                values.push(acc[i]);
            }
            col_ptr[j + 1] = row_idx.len();
        }
        Ok(CscMatrix { nrows: self.nrows, ncols: other.ncols, col_ptr, row_idx, values })
    }

    /// C = A + B (entry union).
    pub fn add(&self, other: &CscMatrix) -> Result<CscMatrix, SparseError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(SparseError::Dimension(format!(
                "add: {}x{} + {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut col_ptr = vec![0usize; self.ncols + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for j in 0..self.ncols {
            let (ra, va) = self.col(j);
            let (rb, vb) = other.col(j);
            let (mut ia, mut ib) = (0usize, 0usize);
            while ia < ra.len() || ib < rb.len() {
                let take_a = ib >= rb.len() || (ia < ra.len() && ra[ia] <= rb[ib]);
                let take_b = ia >= ra.len() || (ib < rb.len() && rb[ib] <= ra[ia]);
                if take_a && take_b {
                    row_idx.push(ra[ia]);
                    values.push(va[ia] + vb[ib]);
                    ia += 1;
                    ib += 1;
                } else if take_a {
                    row_idx.push(ra[ia]);
                    values.push(va[ia]);
                    ia += 1;
                } else {
                    row_idx.push(rb[ib]);
                    values.push(vb[ib]);
                    ib += 1;
                }
            }
            col_ptr[j + 1] = row_idx.len();
        }
        Ok(CscMatrix { nrows: self.nrows, ncols: self.ncols, col_ptr, row_idx, values })
    }

    /// Scale every entry in place.
    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// Structurally symmetric pattern of A ∪ Aᵀ (values discarded, unit entries).
    pub fn symmetrized_pattern(&self) -> Result<CscMatrix, SparseError> {
        if self.nrows != self.ncols {
            return Err(SparseError::NotSquare { nrows: self.nrows, ncols: self.ncols });
        }
        let t = self.transpose();
        let mut rows = Vec::with_capacity(2 * self.nnz());
        let mut cols = Vec::with_capacity(2 * self.nnz());
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                rows.push(self.row_idx[p]);
                cols.push(j);
            }
            for p in t.col_ptr[j]..t.col_ptr[j + 1] {
                rows.push(t.row_idx[p]);
                cols.push(j);
            }
        }
        let vals = vec![1.0; rows.len()];
        let mut m = CscMatrix::from_triplets(&rows, &cols, &vals, self.nrows, self.ncols)?;
        for v in &mut m.values {
            *v = 1.0;
        }
        Ok(m)
    }

    /// Max |diagonal| entry; 0 for an empty diagonal.
    pub fn max_abs_diag(&self) -> f64 {
        let n = self.nrows.min(self.ncols);
        (0..n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max)
    }

    /// Maximum column fill fraction, used to detect dense constraint rows
    /// in a transposed (rows-as-columns) view.
    pub fn max_col_fill(&self) -> f64 {
        if self.nrows == 0 {
            return 0.0;
        }
        (0..self.ncols)
            .map(|j| (self.col_ptr[j + 1] - self.col_ptr[j]) as f64 / self.nrows as f64)
            .fold(0.0, f64::max)
    }
}

/// Incremental triplet accumulator for block assembly.
#[derive(Debug, Clone)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, rows: Vec::new(), cols: Vec::new(), vals: Vec::new() }
    }

    #[inline]
    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.nrows && c < self.ncols);
        self.rows.push(r);
        self.cols.push(c);
        self.vals.push(v);
    }

    /// Copy `block` into this accumulator with its (0,0) at (r0, c0).
    pub fn push_block(&mut self, r0: usize, c0: usize, block: &CscMatrix) {
        for j in 0..block.ncols() {
            let (rows, vals) = block.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                self.push(r0 + i, c0 + j, v);
            }
        }
    }

    pub fn build(&self) -> CscMatrix {
        CscMatrix::from_triplets(&self.rows, &self.cols, &self.vals, self.nrows, self.ncols)
            .expect("triplet indices validated on push")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_triplets_give_zero_matrix() {
        let m = CscMatrix::from_triplets(&[], &[], &[], 2, 2).unwrap();
        assert_eq!(m.nnz(), 0);
        assert_eq!(m.nrows(), 2);
        assert_eq!(m.ncols(), 2);
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let m = CscMatrix::from_triplets(&[0, 0], &[0, 0], &[1.0, 2.0], 1, 1).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3.0);
    }

    #[test]
    fn identity_from_triplets() {
        let m = CscMatrix::from_triplets(&[0, 1], &[0, 1], &[1.0, 1.0], 2, 2).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let err = CscMatrix::from_triplets(&[2], &[0], &[1.0], 2, 2).unwrap_err();
        assert!(matches!(err, SparseError::IndexOutOfBounds { row: 2, .. }));
    }

    #[test]
    fn structural_zeros_survive_until_compress() {
        let mut m =
            CscMatrix::from_triplets(&[0, 1], &[0, 1], &[0.0, 1e-14], 2, 2).unwrap();
        assert_eq!(m.nnz(), 2);
        m.compress(DROP_TOLERANCE);
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn transpose_roundtrip() {
        let m = CscMatrix::from_triplets(
            &[0, 1, 2, 0],
            &[1, 0, 2, 2],
            &[5.0, -1.0, 2.0, 7.0],
            3,
            3,
        )
        .unwrap();
        assert_eq!(m.transpose().transpose(), m);
        assert_eq!(m.transpose().get(1, 0), 5.0);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CscMatrix::from_triplets(&[0, 0, 1], &[0, 1, 1], &[1.0, 2.0, 3.0], 2, 2).unwrap();
        let b = CscMatrix::from_triplets(&[0, 1, 1], &[0, 0, 1], &[4.0, 5.0, 6.0], 2, 2).unwrap();
        let c = a.matmul(&b).unwrap();
        // [[1,2],[0,3]] * [[4,0],[5,6]] = [[14,12],[15,18]]
        assert_eq!(c.get(0, 0), 14.0);
        assert_eq!(c.get(0, 1), 12.0);
        assert_eq!(c.get(1, 0), 15.0);
        assert_eq!(c.get(1, 1), 18.0);
    }

    #[test]
    fn matvec_matches_hand_value() {
        let a = CscMatrix::from_triplets(&[0, 1, 1], &[0, 0, 1], &[2.0, 1.0, -1.0], 2, 2).unwrap();
        assert_eq!(a.matvec(&[3.0, 4.0]), vec![6.0, -1.0]);
        assert_eq!(a.transpose_matvec(&[1.0, 1.0]), vec![3.0, -1.0]);
    }
}
