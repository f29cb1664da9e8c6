//! Convex QP container:
//!
//! ```text
//!   min ½ xᵀG x + cᵀx
//!   s.t. A x ≥ b        (m inequality rows, slack y ≥ 0, duals λ ≥ 0)
//!        E x = h        (p equality rows, duals ν)
//! ```

use std::ops::Range;

use thiserror::Error;

use crate::sparse::{CscMatrix, SparseError};

#[derive(Debug, Error)]
pub enum IpmError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    pub g: CscMatrix,
    pub c: Vec<f64>,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub e: CscMatrix,
    pub h: Vec<f64>,
    pub var_names: Vec<String>,
    pub ineq_names: Vec<String>,
    pub eq_names: Vec<String>,
    /// Named contiguous variable slices ("p_bus", "p_g[t3]", ...).
    pub var_blocks: Vec<(String, Range<usize>)>,
}

impl QuadraticProgram {
    pub fn new(g: CscMatrix, c: Vec<f64>, a: CscMatrix, b: Vec<f64>) -> Self {
        let n = c.len();
        let p = 0;
        Self {
            g,
            c,
            a,
            b,
            e: CscMatrix::zeros(p, n),
            h: Vec::new(),
            var_names: Vec::new(),
            ineq_names: Vec::new(),
            eq_names: Vec::new(),
            var_blocks: Vec::new(),
        }
    }

    pub fn with_equalities(
        g: CscMatrix,
        c: Vec<f64>,
        a: CscMatrix,
        b: Vec<f64>,
        e: CscMatrix,
        h: Vec<f64>,
    ) -> Self {
        Self {
            g,
            c,
            a,
            b,
            e,
            h,
            var_names: Vec::new(),
            ineq_names: Vec::new(),
            eq_names: Vec::new(),
            var_blocks: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m_ineq(&self) -> usize {
        self.b.len()
    }

    pub fn m_eq(&self) -> usize {
        self.h.len()
    }

    pub fn block(&self, name: &str) -> Option<Range<usize>> {
        self.var_blocks.iter().find(|(n, _)| n == name).map(|(_, r)| r.clone())
    }

    /// Dimension consistency plus symmetry of G to 1e-12 (relative to its
    /// largest entry).
    pub fn validate(&self) -> Result<(), IpmError> {
        let n = self.n();
        if self.g.nrows() != n || self.g.ncols() != n {
            return Err(IpmError::Contract(format!(
                "G is {}x{}, expected {n}x{n}",
                self.g.nrows(),
                self.g.ncols()
            )));
        }
        if self.a.ncols() != n || self.a.nrows() != self.m_ineq() {
            return Err(IpmError::Contract(format!(
                "A is {}x{}, expected {}x{n}",
                self.a.nrows(),
                self.a.ncols(),
                self.m_ineq()
            )));
        }
        if self.e.ncols() != n || self.e.nrows() != self.m_eq() {
            return Err(IpmError::Contract(format!(
                "E is {}x{}, expected {}x{n}",
                self.e.nrows(),
                self.e.ncols(),
                self.m_eq()
            )));
        }
        let scale = self.g.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gt = self.g.transpose();
        for j in 0..n {
            let (rows, vals) = self.g.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                if (v - gt.get(i, j)).abs() > 1e-12 * (1.0 + scale) {
                    return Err(IpmError::Contract(format!(
                        "G is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// ½xᵀGx + cᵀx
    pub fn objective(&self, x: &[f64]) -> f64 {
        let gx = self.g.matvec(x);
        let mut obj = 0.0;
        for i in 0..x.len() {
            obj += 0.5 * x[i] * gx[i] + self.c[i] * x[i];
        }
        obj
    }
}

/// KKT residuals at a primal-dual point.
#[derive(Debug, Clone)]
pub struct Residuals {
    /// Gx − Aᵀλ − Eᵀν + c
    pub dual: Vec<f64>,
    /// Ax − y − b
    pub primal: Vec<f64>,
    /// Ex − h
    pub eq: Vec<f64>,
}

impl Residuals {
    pub fn evaluate(qp: &QuadraticProgram, x: &[f64], y: &[f64], lam: &[f64], nu: &[f64]) -> Self {
        let gx = qp.g.matvec(x);
        let at_lam = qp.a.transpose_matvec(lam);
        let et_nu = if qp.m_eq() > 0 { qp.e.transpose_matvec(nu) } else { vec![0.0; qp.n()] };
        let dual: Vec<f64> =
            (0..qp.n()).map(|i| gx[i] - at_lam[i] - et_nu[i] + qp.c[i]).collect();
        let ax = qp.a.matvec(x);
        let primal: Vec<f64> = (0..qp.m_ineq()).map(|i| ax[i] - y[i] - qp.b[i]).collect();
        let ex = qp.e.matvec(x);
        let eq: Vec<f64> = (0..qp.m_eq()).map(|i| ex[i] - qp.h[i]).collect();
        Self { dual, primal, eq }
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
