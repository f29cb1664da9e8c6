//! Numeric LDLᵀ factorization over a precomputed symbolic pattern.
//!
//! One up-looking routine serves both roles: a modified Cholesky for
//! (semi)definite normal equations, and a signed LDLᵀ for symmetric
//! quasi-definite augmented systems.

use super::csc::{CscMatrix, SparseError};
use super::ordering::amd_ordering;
use super::symbolic::{symbolic_cholesky, SymbolicFactor};

/// How to treat pivots during the numeric factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PivotRule {
    /// Matrix is positive semi-definite up to roundoff: pivots below
    /// `floor_rel · max|diag|` are floored there; clearly negative pivots
    /// are a near-singular failure.
    ModifiedSpd { floor_rel: f64 },
    /// Matrix is symmetric quasi-definite (already regularized): pivots keep
    /// their sign, only a vanishing pivot is a failure.
    QuasiDefinite,
}

impl PivotRule {
    pub fn modified_spd() -> Self {
        PivotRule::ModifiedSpd { floor_rel: 1e-12 }
    }
}

/// Static regularization for an augmented (quasi-definite) system:
/// +`primal` is added to the first `n_primal` diagonal entries and
/// -`dual` to the rest before factorization.
#[derive(Debug, Clone, Copy)]
pub struct Regularization {
    pub primal: f64,
    pub dual: f64,
    pub n_primal: usize,
}

impl Regularization {
    pub fn new(primal: f64, dual: f64, n_primal: usize) -> Self {
        Self { primal, dual, n_primal }
    }
}

/// Numeric LDLᵀ factor of PAPᵀ (unit lower triangular L, diagonal d).
#[derive(Debug, Clone)]
pub struct LdltFactor {
    n: usize,
    l_col_ptr: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    d: Vec<f64>,
    perm: Vec<usize>,
}

impl LdltFactor {
    /// Factor `a` (full symmetric storage) using the pattern in `sym`.
    ///
    /// `diag_shift[i]`, when provided, is added to diagonal entry i in the
    /// original index space (static regularization without copying the
    /// matrix). Quasi-definite pivots that collapse under elimination
    /// growth are bumped to ±(1e-13·max|entry|) with the sign the shift
    /// expects; unshifted quasi-definite factorizations still fail on a
    /// vanishing pivot.
    pub fn factorize(
        a: &CscMatrix,
        sym: &SymbolicFactor,
        rule: PivotRule,
        diag_shift: Option<&[f64]>,
    ) -> Result<Self, SparseError> {
        let n = sym.n();
        if a.nrows() != n || a.ncols() != n {
            return Err(SparseError::Dimension(format!(
                "factorize: matrix is {}x{}, symbolic factor has n={n}",
                a.nrows(),
                a.ncols()
            )));
        }
        let perm = sym.perm().order().to_vec();
        let inv = sym.perm().inverse();

        // structural scale: off-diagonal magnitudes only — the diagonal of
        // an IPM system carries slack scalings that swing over 1e12 and
        // must not inflate the breakdown floor
        let mut scale = 0.0f64;
        for j in 0..a.ncols() {
            let (rows, vals) = a.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                if i != j {
                    scale = scale.max(v.abs());
                }
            }
        }
        let scale = scale.max(1.0);
        let max_diag = {
            let m = a.max_abs_diag();
            if m == 0.0 {
                1.0
            } else {
                m
            }
        };
        let (floor, neg_tol) = match rule {
            PivotRule::ModifiedSpd { floor_rel } => (floor_rel * max_diag, 1e-4 * max_diag),
            PivotRule::QuasiDefinite => (1e-13 * scale, 0.0),
        };

        // column storage for L, capacities from the symbolic pattern
        // (strictly-lower entries only; the diagonal lives in d)
        let mut l_col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            l_col_ptr[j + 1] = l_col_ptr[j] + (sym.col_pattern(j).len() - 1);
        }
        let nnz = l_col_ptr[n];
        let mut l_rows = vec![0usize; nnz];
        let mut l_vals = vec![0.0; nnz];
        let mut lnz = vec![0usize; n];
        let mut d = vec![0.0; n];

        // up-looking LDL: row k at a time, pattern by elimination-tree walk
        let mut y = vec![0.0; n];
        let mut flag = vec![usize::MAX; n];
        let mut stack = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            let mut top = n;
            let mut dk = 0.0;
            let ok = perm[k];
            let (rows, vals) = a.col(ok);
            for (&oi, &v) in rows.iter().zip(vals) {
                let i = inv[oi];
                if i > k {
                    continue;
                }
                if i == k {
                    dk += v;
                    continue;
                }
                y[i] += v;
                // walk up the etree until an already-visited node
                let mut len = 0usize;
                let mut jj = i;
                while flag[jj] != k {
                    stack[len] = jj;
                    len += 1;
                    flag[jj] = k;
                    jj = sym.parent(jj);
                    if jj == usize::MAX {
                        break;
                    }
                }
                // prepend path so the final order is ascending in the tree
                for s in (0..len).rev() {
                    top -= 1;
                    stack[top] = stack[s];
                }
            }
            if let Some(shift) = diag_shift {
                dk += shift[ok];
            }
            // sparse triangular solve along the row pattern
            for t in top..n {
                let j = stack[t];
                let yj = y[j];
                y[j] = 0.0;
                let l_kj = yj / d[j];
                for p in l_col_ptr[j]..l_col_ptr[j] + lnz[j] {
                    y[l_rows[p]] -= l_vals[p] * yj;
                }
                dk -= l_kj * yj;
                let p = l_col_ptr[j] + lnz[j];
                l_rows[p] = k;
                l_vals[p] = l_kj;
                lnz[j] += 1;
            }
            match rule {
                PivotRule::ModifiedSpd { .. } => {
                    if dk < floor {
                        // clearly indefinite input is an error; roundoff-level
                        // negatives on ill-conditioned tails are floored
                        if dk < -neg_tol {
                            return Err(SparseError::NearSingular { col: ok, pivot: dk });
                        }
                        dk = floor;
                    }
                }
                PivotRule::QuasiDefinite => {
                    if !dk.is_finite() {
                        return Err(SparseError::NearSingular { col: ok, pivot: dk });
                    }
                    if dk.abs() < floor {
                        match diag_shift {
                            // regularized: bump by the sign the shift expects
                            Some(shift) => {
                                let sign = if shift[ok] < 0.0 { -1.0 } else { 1.0 };
                                dk = sign * floor;
                            }
                            None => {
                                return Err(SparseError::NearSingular { col: ok, pivot: dk })
                            }
                        }
                    }
                }
            }
            d[k] = dk;
        }
        // truncate columns to their actual fill (pattern is a superset)
        let mut w = 0usize;
        let mut ptr = vec![0usize; n + 1];
        let mut rows_c = Vec::with_capacity(nnz);
        let mut vals_c = Vec::with_capacity(nnz);
        for j in 0..n {
            for p in l_col_ptr[j]..l_col_ptr[j] + lnz[j] {
                rows_c.push(l_rows[p]);
                vals_c.push(l_vals[p]);
                w += 1;
            }
            ptr[j + 1] = w;
        }
        Ok(Self { n, l_col_ptr: ptr, l_rows: rows_c, l_vals: vals_c, d, perm })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve A x = b through the factor: permute, L, D, Lᵀ, unpermute.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "solve dimension mismatch");
        let mut x = vec![0.0; self.n];
        for k in 0..self.n {
            x[k] = b[self.perm[k]];
        }
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                    x[self.l_rows[p]] -= self.l_vals[p] * xj;
                }
            }
        }
        for k in 0..self.n {
            x[k] /= self.d[k];
        }
        for j in (0..self.n).rev() {
            let mut acc = x[j];
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                acc -= self.l_vals[p] * x[self.l_rows[p]];
            }
            x[j] = acc;
        }
        let mut out = vec![0.0; self.n];
        for k in 0..self.n {
            out[self.perm[k]] = x[k];
        }
        out
    }

    /// Solve with one residual-correction pass against `a_true` when the
    /// direct residual exceeds `refine_tol * (1 + ||b||_inf)`.
    pub fn solve_refined(&self, a_true: &CscMatrix, b: &[f64], refine_tol: f64) -> Vec<f64> {
        let mut x = self.solve(b);
        let ax = a_true.matvec(&x);
        let mut rinf = 0.0f64;
        let mut r = vec![0.0; b.len()];
        for i in 0..b.len() {
            r[i] = b[i] - ax[i];
            rinf = rinf.max(r[i].abs());
        }
        let binf = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if rinf > refine_tol * (1.0 + binf) {
            let dx = self.solve(&r);
            for i in 0..x.len() {
                x[i] += dx[i];
            }
        }
        x
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solve an SPD (or PSD up to regularization) system with AMD ordering and
/// a modified Cholesky; pivots are floored as described in [`PivotRule`].
pub fn cholesky_solve(
    a: &CscMatrix,
    sym: &SymbolicFactor,
    b: &[f64],
) -> Result<Vec<f64>, SparseError> {
    let f = LdltFactor::factorize(a, sym, PivotRule::modified_spd(), None)?;
    Ok(f.solve_refined(a, b, 1e-8))
}

/// Solve a symmetric quasi-definite system (augmented-system shape) with the
/// static regularization `reg` applied to the diagonal. Returns the solution
/// and the infinity-norm residual against the *unregularized* system.
pub fn ldlt_solve(
    k: &CscMatrix,
    rhs: &[f64],
    reg: Regularization,
) -> Result<(Vec<f64>, f64), SparseError> {
    if k.nrows() != k.ncols() {
        return Err(SparseError::NotSquare { nrows: k.nrows(), ncols: k.ncols() });
    }
    let n = k.nrows();
    if rhs.len() != n {
        return Err(SparseError::Dimension(format!(
            "rhs length {} does not match system dimension {n}",
            rhs.len()
        )));
    }
    let pattern = k.symmetrized_pattern()?;
    let perm = amd_ordering(&pattern)?;
    let sym = symbolic_cholesky(&pattern, &perm)?;
    let mut shift = vec![0.0; n];
    for (i, s) in shift.iter_mut().enumerate() {
        *s = if i < reg.n_primal { reg.primal } else { -reg.dual };
    }
    let f = LdltFactor::factorize(k, &sym, PivotRule::QuasiDefinite, Some(&shift))?;
    let x = f.solve_refined(k, rhs, 1e-8);
    let ax = k.matvec(&x);
    let resid = inf_norm(&ax.iter().zip(rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    Ok((x, resid))
}
