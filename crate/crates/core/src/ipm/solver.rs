//! Infeasible-start primal-dual interior point method with Mehrotra
//! predictor-corrector steps. One factorization per iteration; the
//! corrector changes only the right-hand side.

use serde::Serialize;

use super::linsys::{AugmentedSystem, NewtonDirection, NewtonRhs, NormalSystem};
use super::qp::{inf_norm, IpmError, QuadraticProgram, Residuals};
use crate::sparse::SparseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearPath {
    Normal,
    Augmented,
    Auto,
}

#[derive(Debug, Clone)]
pub struct IpmOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub path: LinearPath,
    pub reg_primal: f64,
    pub reg_dual: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            path: LinearPath::Auto,
            reg_primal: 1e-8,
            reg_dual: 1e-8,
        }
    }
}

/// A strictly interior primal-dual point: y > 0 and λ > 0 elementwise.
#[derive(Debug, Clone)]
pub struct IpmIterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lam: Vec<f64>,
    pub nu: Vec<f64>,
}

impl IpmIterate {
    /// Complementarity measure yᵀλ/m (0 when there are no inequalities).
    pub fn mu(&self) -> f64 {
        if self.y.is_empty() {
            0.0
        } else {
            self.y.iter().zip(&self.lam).map(|(y, l)| y * l).sum::<f64>() / self.y.len() as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IpmStatus {
    Optimal,
    MaxIterations,
    NearSingular,
    InfeasibleSuspect,
}

/// Final scaled residual norms.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualNorms {
    pub dual: f64,
    pub primal: f64,
    pub eq: f64,
    pub gap: f64,
}

/// Per-iteration trace record, emitted as JSON lines by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct IterRecord {
    pub iter: usize,
    pub mu: f64,
    pub r_dual: f64,
    pub r_primal: f64,
    pub r_eq: f64,
    pub alpha_primal: f64,
    pub alpha_dual: f64,
    /// Factorizations performed this iteration (always 1).
    pub factorizations: u32,
    /// Direction solves sharing that factorization (predictor + corrector).
    pub solves: u32,
    pub factor_ops: u64,
}

#[derive(Debug, Clone)]
pub struct IpmSolution {
    pub iterate: IpmIterate,
    pub status: IpmStatus,
    pub iterations: usize,
    pub residuals: ResidualNorms,
    pub trace: Vec<IterRecord>,
    pub objective: f64,
}

pub(crate) enum NewtonContext {
    Normal(NormalSystem),
    Augmented(AugmentedSystem),
}

impl NewtonContext {
    pub fn build(qp: &QuadraticProgram, opts: &IpmOptions) -> Result<Self, IpmError> {
        let resolved = match opts.path {
            LinearPath::Normal => LinearPath::Normal,
            LinearPath::Augmented => LinearPath::Augmented,
            LinearPath::Auto => {
                // normal equations only for inequality-only problems whose
                // AᵀDA stays sparse: a row with >10% fill triggers augmented
                if qp.m_eq() == 0 && max_row_fill(qp) <= 0.10 {
                    LinearPath::Normal
                } else {
                    LinearPath::Augmented
                }
            }
        };
        Ok(match resolved {
            LinearPath::Normal => NewtonContext::Normal(NormalSystem::build(qp)?),
            _ => NewtonContext::Augmented(AugmentedSystem::build(
                qp,
                opts.reg_primal,
                opts.reg_dual,
            )?),
        })
    }

    pub fn factorize(
        &mut self,
        qp: &QuadraticProgram,
        it: &IpmIterate,
    ) -> Result<(), IpmError> {
        match self {
            NewtonContext::Normal(s) => s.factorize(qp, &it.y, &it.lam),
            NewtonContext::Augmented(s) => s.factorize(&it.y, &it.lam),
        }
    }

    pub fn solve(
        &self,
        qp: &QuadraticProgram,
        it: &IpmIterate,
        res: &Residuals,
        r_c: &[f64],
    ) -> Result<NewtonDirection, IpmError> {
        match self {
            NewtonContext::Normal(s) => s.solve(qp, it, res, r_c),
            NewtonContext::Augmented(s) => s.solve(qp, it, res, r_c),
        }
    }

    pub fn factor_ops(&self) -> u64 {
        match self {
            NewtonContext::Normal(s) => s.factor_ops(),
            NewtonContext::Augmented(s) => s.factor_ops(),
        }
    }
}

fn max_row_fill(qp: &QuadraticProgram) -> f64 {
    let n = qp.n();
    if n == 0 || qp.m_ineq() == 0 {
        return 0.0;
    }
    let mut counts = vec![0usize; qp.m_ineq()];
    for &r in qp.a.row_indices() {
        counts[r] += 1;
    }
    counts.iter().map(|&c| c as f64 / n as f64).fold(0.0, f64::max)
}

/// Largest α in (0, 1] with v + α·dv ≥ 0.
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    let mut alpha = 1.0f64;
    for (vi, di) in v.iter().zip(dv) {
        if *di < 0.0 {
            alpha = alpha.min(-vi / di);
        }
    }
    alpha
}

/// Starting point: x from a least-squares solve on the equalities (zero
/// when there are none); y = max(Ax − b, 1); λ = 1; ν = 0.
pub(crate) fn starting_point(qp: &QuadraticProgram, opts: &IpmOptions) -> Result<IpmIterate, IpmError> {
    let n = qp.n();
    let x = if qp.m_eq() > 0 {
        let p = qp.m_eq();
        let mut t = crate::sparse::Triplets::new(n + p, n + p);
        for i in 0..n {
            t.push(i, i, 1.0);
        }
        t.push_block(n, 0, &qp.e);
        t.push_block(0, n, &qp.e.transpose());
        let k = t.build();
        let mut rhs = vec![0.0; n + p];
        rhs[n..].copy_from_slice(&qp.h);
        let (sol, _resid) = crate::sparse::ldlt_solve(
            &k,
            &rhs,
            crate::sparse::Regularization::new(opts.reg_primal, opts.reg_dual, n),
        )?;
        sol[..n].to_vec()
    } else {
        vec![0.0; n]
    };
    let ax = qp.a.matvec(&x);
    let y: Vec<f64> = (0..qp.m_ineq()).map(|i| (ax[i] - qp.b[i]).max(1.0)).collect();
    let lam = vec![1.0; qp.m_ineq()];
    let nu = vec![0.0; qp.m_eq()];
    Ok(IpmIterate { x, y, lam, nu })
}

pub(crate) struct StepOutcome {
    pub alpha_primal: f64,
    pub alpha_dual: f64,
}

#[derive(Debug, Error)]
pub(crate) enum StepError {
    #[error("step length underflow ({alpha:e}): iteration stalled")]
    Stall { alpha: f64 },
    #[error(transparent)]
    Ipm(#[from] IpmError),
}

use thiserror::Error;

/// One Mehrotra predictor-corrector iteration in place. A single
/// factorization backs both the predictor and corrector solves.
pub(crate) fn mehrotra_step_inner(
    qp: &QuadraticProgram,
    ctx: &mut NewtonContext,
    it: &mut IpmIterate,
) -> Result<StepOutcome, StepError> {
    let m = qp.m_ineq();
    let res = Residuals::evaluate(qp, &it.x, &it.y, &it.lam, &it.nu);
    ctx.factorize(qp, it)?;

    // predictor
    let r_c_aff = NewtonRhs::Affine.complementarity(&it.y, &it.lam);
    let aff = ctx.solve(qp, it, &res, &r_c_aff)?;

    // centering from the affine probe
    let mu = it.mu();
    let sigma_mu = if m > 0 && mu > 0.0 {
        let ap = max_step(&it.y, &aff.dy);
        let ad = max_step(&it.lam, &aff.dlam);
        let mu_aff = (0..m)
            .map(|i| (it.y[i] + ap * aff.dy[i]) * (it.lam[i] + ad * aff.dlam[i]))
            .sum::<f64>()
            / m as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);
        sigma * mu
    } else {
        0.0
    };

    // corrector: same factorization, new right-hand side
    let r_c =
        NewtonRhs::Corrected { sigma_mu, affine: &aff }.complementarity(&it.y, &it.lam);
    let mut dir = ctx.solve(qp, it, &res, &r_c)?;

    // fraction-to-boundary, primal and dual separately
    let mut alpha_primal = (0.9995 * max_step(&it.y, &dir.dy)).min(1.0);
    let mut alpha_dual = (0.9995 * max_step(&it.lam, &dir.dlam)).min(1.0);

    // corrector safeguard: on degenerate problems the second-order term can
    // slash the step length; the plain centered direction is then better
    if m > 0 {
        let ap_aff = (0.9995 * max_step(&it.y, &aff.dy)).min(1.0);
        let ad_aff = (0.9995 * max_step(&it.lam, &aff.dlam)).min(1.0);
        if alpha_primal + alpha_dual < 0.5 * (ap_aff + ad_aff) {
            let zero = NewtonDirection::zeros(qp.n(), m, qp.m_eq());
            let r_c = NewtonRhs::Corrected { sigma_mu, affine: &zero }
                .complementarity(&it.y, &it.lam);
            let centered = ctx.solve(qp, it, &res, &r_c)?;
            let ap_c = (0.9995 * max_step(&it.y, &centered.dy)).min(1.0);
            let ad_c = (0.9995 * max_step(&it.lam, &centered.dlam)).min(1.0);
            if ap_c + ad_c > alpha_primal + alpha_dual {
                dir = centered;
                alpha_primal = ap_c;
                alpha_dual = ad_c;
            }
        }
    }
    if m > 0 && alpha_primal.max(alpha_dual) < 1e-12 {
        return Err(StepError::Stall { alpha: alpha_primal.max(alpha_dual) });
    }

    for i in 0..qp.n() {
        it.x[i] += alpha_primal * dir.dx[i];
    }
    for i in 0..m {
        it.y[i] += alpha_primal * dir.dy[i];
        it.lam[i] += alpha_dual * dir.dlam[i];
    }
    for i in 0..qp.m_eq() {
        it.nu[i] += alpha_dual * dir.dnu[i];
    }
    Ok(StepOutcome { alpha_primal, alpha_dual })
}

/// One predictor-corrector iteration from a caller-supplied strictly
/// interior iterate; returns the advanced iterate.
pub fn mehrotra_step(
    qp: &QuadraticProgram,
    iterate: &IpmIterate,
    opts: &IpmOptions,
) -> Result<IpmIterate, IpmError> {
    let mut ctx = NewtonContext::build(qp, opts)?;
    let mut it = iterate.clone();
    match mehrotra_step_inner(qp, &mut ctx, &mut it) {
        Ok(_) => Ok(it),
        Err(StepError::Stall { alpha }) => Err(IpmError::Contract(format!(
            "step length underflow ({alpha:e})"
        ))),
        Err(StepError::Ipm(e)) => Err(e),
    }
}

/// Scaled residual norms for the convergence test.
fn scaled_norms(qp: &QuadraticProgram, res: &Residuals, mu: f64) -> ResidualNorms {
    ResidualNorms {
        dual: inf_norm(&res.dual) / (1.0 + inf_norm(&qp.c)),
        primal: inf_norm(&res.primal) / (1.0 + inf_norm(&qp.b)),
        eq: inf_norm(&res.eq) / (1.0 + inf_norm(&qp.h)),
        gap: mu,
    }
}

fn worst(norms: &ResidualNorms) -> f64 {
    norms.dual.max(norms.primal).max(norms.eq).max(norms.gap)
}

/// Solve a convex QP. Factorization failures map to `NearSingular`;
/// residuals rising for 10 consecutive iterations or a stalled step map to
/// `InfeasibleSuspect`.
pub fn solve_qp(qp: &QuadraticProgram, opts: &IpmOptions) -> Result<IpmSolution, IpmError> {
    qp.validate()?;
    if qp.n() == 0 {
        // degenerate: nothing to decide, only feasibility of 0 ≥ b, 0 = h
        let feasible = qp.b.iter().all(|&bi| bi <= opts.tol)
            && qp.h.iter().all(|&hi| hi.abs() <= opts.tol);
        let it = IpmIterate {
            x: vec![],
            y: qp.b.iter().map(|&bi| (-bi).max(0.0)).collect(),
            lam: vec![0.0; qp.m_ineq()],
            nu: vec![0.0; qp.m_eq()],
        };
        let res = Residuals::evaluate(qp, &it.x, &it.y, &it.lam, &it.nu);
        let norms = scaled_norms(qp, &res, 0.0);
        let status =
            if feasible { IpmStatus::Optimal } else { IpmStatus::InfeasibleSuspect };
        return Ok(IpmSolution {
            iterate: it,
            status,
            iterations: 0,
            residuals: norms,
            trace: Vec::new(),
            objective: 0.0,
        });
    }
    let mut ctx = NewtonContext::build(qp, opts)?;
    let mut it = starting_point(qp, opts)?;
    let mut trace = Vec::new();

    let finish = |it: IpmIterate,
                  status: IpmStatus,
                  iterations: usize,
                  trace: Vec<IterRecord>,
                  norms: ResidualNorms| {
        let objective = qp.objective(&it.x);
        IpmSolution { iterate: it, status, iterations, residuals: norms, trace, objective }
    };

    let res = Residuals::evaluate(qp, &it.x, &it.y, &it.lam, &it.nu);
    let mut norms = scaled_norms(qp, &res, it.mu());
    if worst(&norms) <= opts.tol {
        return Ok(finish(it, IpmStatus::Optimal, 0, trace, norms));
    }

    // Auto-path escape hatch: the normal equations square the slack
    // scalings, which can break down near convergence on degenerate
    // problems. Fall back to the augmented system once and keep iterating.
    let mut can_fall_back =
        opts.path == LinearPath::Auto && matches!(ctx, NewtonContext::Normal(_));
    let fall_back = |ctx: &mut NewtonContext| -> Result<(), IpmError> {
        let aug_opts = IpmOptions { path: LinearPath::Augmented, ..opts.clone() };
        *ctx = NewtonContext::build(qp, &aug_opts)?;
        Ok(())
    };
    let mut best_worst = worst(&norms);
    let mut since_improvement = 0usize;

    let mut prev_worst = worst(&norms);
    let mut rising = 0usize;
    let mut iter = 0usize;
    while iter < opts.max_iter {
        iter += 1;
        let outcome = match mehrotra_step_inner(qp, &mut ctx, &mut it) {
            Ok(o) => o,
            Err(StepError::Stall { .. }) => {
                if can_fall_back {
                    can_fall_back = false;
                    fall_back(&mut ctx)?;
                    iter -= 1;
                    continue;
                }
                return Ok(finish(it, IpmStatus::InfeasibleSuspect, iter, trace, norms));
            }
            Err(StepError::Ipm(IpmError::Sparse(SparseError::NearSingular { .. }))) => {
                if can_fall_back {
                    can_fall_back = false;
                    fall_back(&mut ctx)?;
                    iter -= 1;
                    continue;
                }
                return Ok(finish(it, IpmStatus::NearSingular, iter, trace, norms));
            }
            Err(StepError::Ipm(e)) => return Err(e),
        };
        let res = Residuals::evaluate(qp, &it.x, &it.y, &it.lam, &it.nu);
        let mu = it.mu();
        norms = scaled_norms(qp, &res, mu);
        trace.push(IterRecord {
            iter,
            mu,
            r_dual: norms.dual,
            r_primal: norms.primal,
            r_eq: norms.eq,
            alpha_primal: outcome.alpha_primal,
            alpha_dual: outcome.alpha_dual,
            factorizations: 1,
            solves: 2,
            factor_ops: ctx.factor_ops(),
        });
        if worst(&norms) <= opts.tol {
            return Ok(finish(it, IpmStatus::Optimal, iter, trace, norms));
        }
        if worst(&norms) < 0.5 * best_worst {
            best_worst = worst(&norms);
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= 5 && can_fall_back {
                can_fall_back = false;
                fall_back(&mut ctx)?;
                since_improvement = 0;
            }
        }
        if worst(&norms) > prev_worst {
            rising += 1;
            if rising >= 10 {
                return Ok(finish(it, IpmStatus::InfeasibleSuspect, iter, trace, norms));
            }
        } else {
            rising = 0;
        }
        prev_worst = worst(&norms);
    }
    Ok(finish(it, IpmStatus::MaxIterations, opts.max_iter, trace, norms))
}

/// Compute one Newton direction at a caller-supplied strictly interior
/// iterate over an explicitly chosen linear-algebra path. Used by the
/// path-equivalence and transformation-equivalence checks.
pub fn newton_direction(
    qp: &QuadraticProgram,
    iterate: &IpmIterate,
    rhs: NewtonRhs,
    path: LinearPath,
    opts: &IpmOptions,
) -> Result<NewtonDirection, IpmError> {
    let mut o = opts.clone();
    o.path = path;
    let mut ctx = NewtonContext::build(qp, &o)?;
    ctx.factorize(qp, iterate)?;
    let res = Residuals::evaluate(qp, &iterate.x, &iterate.y, &iterate.lam, &iterate.nu);
    let r_c = rhs.complementarity(&iterate.y, &iterate.lam);
    ctx.solve(qp, iterate, &res, &r_c)
}
