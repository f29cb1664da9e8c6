//! The two reductions of the IPM Newton system, each with a symbolic
//! factorization computed once and reused across iterations.
//!
//! Augmented (quasi-definite):
//!
//! ```text
//!   [ G   Aᵀ    Eᵀ ] [ Δx  ]   [ -r_d            ]
//!   [ A  -Λ⁻¹Y  0  ] [ -Δλ ] = [ -r_p - Λ⁻¹ r_c  ]
//!   [ E   0     0  ] [ -Δν ]   [ -r_e            ]
//! ```
//!
//! Normal equations (inequality-only problems):
//!
//! ```text
//!   (G + AᵀY⁻¹ΛA) Δx = -r_d - AᵀY⁻¹(r_c + Λ r_p)
//! ```

use crate::sparse::{
    amd_ordering, symbolic_cholesky, CscMatrix, LdltFactor, PivotRule, SymbolicFactor, Triplets,
};

use super::qp::{IpmError, QuadraticProgram, Residuals};
use super::solver::IpmIterate;

/// Direction in the original variable/dual space.
#[derive(Debug, Clone)]
pub struct NewtonDirection {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dlam: Vec<f64>,
    pub dnu: Vec<f64>,
}

impl NewtonDirection {
    pub fn zeros(n: usize, m: usize, p: usize) -> Self {
        Self { dx: vec![0.0; n], dy: vec![0.0; m], dlam: vec![0.0; m], dnu: vec![0.0; p] }
    }
}

/// Right-hand-side mode of the Newton solve: the pure predictor, or the
/// combined corrector with centering target σμ and the affine direction's
/// second-order term.
pub enum NewtonRhs<'a> {
    Affine,
    Corrected { sigma_mu: f64, affine: &'a NewtonDirection },
}

impl NewtonRhs<'_> {
    /// Complementarity residual r_c for this mode.
    pub(crate) fn complementarity(&self, y: &[f64], lam: &[f64]) -> Vec<f64> {
        match self {
            NewtonRhs::Affine => y.iter().zip(lam).map(|(y, l)| y * l).collect(),
            NewtonRhs::Corrected { sigma_mu, affine } => (0..y.len())
                .map(|i| y[i] * lam[i] + affine.dy[i] * affine.dlam[i] - sigma_mu)
                .collect(),
        }
    }
}

pub(crate) struct AugmentedSystem {
    k: CscMatrix,
    /// value-slot index of each inequality diagonal entry -(y/λ)
    d_slots: Vec<usize>,
    sym: SymbolicFactor,
    shift: Vec<f64>,
    n: usize,
    m: usize,
    p: usize,
    factor: Option<LdltFactor>,
}

impl AugmentedSystem {
    pub fn build(qp: &QuadraticProgram, reg_primal: f64, reg_dual: f64) -> Result<Self, IpmError> {
        let (n, m, p) = (qp.n(), qp.m_ineq(), qp.m_eq());
        let dim = n + m + p;
        let mut t = Triplets::new(dim, dim);
        t.push_block(0, 0, &qp.g);
        t.push_block(n, 0, &qp.a);
        t.push_block(0, n, &qp.a.transpose());
        if p > 0 {
            t.push_block(n + m, 0, &qp.e);
            t.push_block(0, n + m, &qp.e.transpose());
        }
        for i in 0..m {
            t.push(n + i, n + i, -1.0); // slack-scaling slot, refreshed per iterate
        }
        let k = t.build();
        let mut d_slots = Vec::with_capacity(m);
        for i in 0..m {
            let j = n + i;
            let lo = k.col_ptr()[j];
            let hi = k.col_ptr()[j + 1];
            let rows = &k.row_indices()[lo..hi];
            let pos = rows.binary_search(&j).expect("diagonal slot was inserted");
            d_slots.push(lo + pos);
        }
        let perm = amd_ordering(&k)?;
        let sym = symbolic_cholesky(&k, &perm)?;
        let mut shift = vec![0.0; dim];
        for (i, s) in shift.iter_mut().enumerate() {
            *s = if i < n { reg_primal } else { -reg_dual };
        }
        Ok(Self { k, d_slots, sym, shift, n, m, p, factor: None })
    }

    pub fn factor_ops(&self) -> u64 {
        self.sym.factor_ops()
    }

    /// Refresh the slack scaling -y/λ and refactor. One factorization per
    /// call; subsequent solves reuse it.
    pub fn factorize(&mut self, y: &[f64], lam: &[f64]) -> Result<(), IpmError> {
        let vals = self.k.values_mut();
        for i in 0..self.m {
            vals[self.d_slots[i]] = -(y[i] / lam[i]);
        }
        let f =
            LdltFactor::factorize(&self.k, &self.sym, PivotRule::QuasiDefinite, Some(&self.shift))?;
        self.factor = Some(f);
        Ok(())
    }

    /// One direction solve against the current factorization.
    pub fn solve(
        &self,
        qp: &QuadraticProgram,
        it: &IpmIterate,
        res: &Residuals,
        r_c: &[f64],
    ) -> Result<NewtonDirection, IpmError> {
        let f = self.factor.as_ref().expect("factorize before solve");
        let (n, m, p) = (self.n, self.m, self.p);
        let mut rhs = vec![0.0; n + m + p];
        for i in 0..n {
            rhs[i] = -res.dual[i];
        }
        for i in 0..m {
            rhs[n + i] = -res.primal[i] - r_c[i] / it.lam[i];
        }
        for i in 0..p {
            rhs[n + m + i] = -res.eq[i];
        }
        let sol = f.solve_refined(&self.k, &rhs, 0.0);
        let dx = sol[..n].to_vec();
        let dlam: Vec<f64> = sol[n..n + m].iter().map(|v| -v).collect();
        let dnu: Vec<f64> = sol[n + m..].iter().map(|v| -v).collect();
        let adx = qp.a.matvec(&dx);
        let dy: Vec<f64> = (0..m).map(|i| adx[i] + res.primal[i]).collect();
        Ok(NewtonDirection { dx, dy, dlam, dnu })
    }
}

pub(crate) struct NormalSystem {
    at: CscMatrix,
    sym: SymbolicFactor,
    h: Option<CscMatrix>,
    factor: Option<LdltFactor>,
}

impl NormalSystem {
    pub fn build(qp: &QuadraticProgram) -> Result<Self, IpmError> {
        if qp.m_eq() > 0 {
            return Err(IpmError::Contract(
                "normal-equation path requires an inequality-only problem".into(),
            ));
        }
        let at = qp.a.transpose();
        // pattern of G + AᵀA is the pattern of G + AᵀDA for any positive D
        let pattern = at.matmul(&qp.a)?.add(&qp.g)?;
        let perm = amd_ordering(&pattern)?;
        let sym = symbolic_cholesky(&pattern, &perm)?;
        Ok(Self { at, sym, h: None, factor: None })
    }

    pub fn factor_ops(&self) -> u64 {
        self.sym.factor_ops()
    }

    pub fn factorize(&mut self, qp: &QuadraticProgram, y: &[f64], lam: &[f64]) -> Result<(), IpmError> {
        // H = G + AᵀDA with D = λ/y, assembled as Aᵀ·(row-scaled A)
        let mut scaled = qp.a.clone();
        {
            let rows = scaled.row_indices().to_vec();
            let vals = scaled.values_mut();
            for (p, &r) in rows.iter().enumerate() {
                vals[p] *= lam[r] / y[r];
            }
        }
        let h = self.at.matmul(&scaled)?.add(&qp.g)?;
        let f = LdltFactor::factorize(&h, &self.sym, PivotRule::modified_spd(), None)?;
        self.h = Some(h);
        self.factor = Some(f);
        Ok(())
    }

    pub fn solve(
        &self,
        qp: &QuadraticProgram,
        it: &IpmIterate,
        res: &Residuals,
        r_c: &[f64],
    ) -> Result<NewtonDirection, IpmError> {
        let f = self.factor.as_ref().expect("factorize before solve");
        let h = self.h.as_ref().expect("factorize before solve");
        let m = qp.m_ineq();
        let w: Vec<f64> =
            (0..m).map(|i| (r_c[i] + it.lam[i] * res.primal[i]) / it.y[i]).collect();
        let atw = qp.a.transpose_matvec(&w);
        let rhs: Vec<f64> = (0..qp.n()).map(|i| -res.dual[i] - atw[i]).collect();
        let dx = f.solve_refined(h, &rhs, 0.0);
        let adx = qp.a.matvec(&dx);
        let dy: Vec<f64> = (0..m).map(|i| adx[i] + res.primal[i]).collect();
        let dlam: Vec<f64> =
            (0..m).map(|i| -(r_c[i] + it.lam[i] * dy[i]) / it.y[i]).collect();
        Ok(NewtonDirection { dx, dy, dlam, dnu: Vec::new() })
    }
}
