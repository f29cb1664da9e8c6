//! The three DC security-constraint formulations (generator-power/PTDF,
//! pure voltage angle, mixed B-θ), their multi-period SCED extension,
//! outer approximations, and post-solve recovery.

mod build;
mod outer;
mod recover;

pub use build::{build_opf, build_ptdf_injection_qp, build_sced};
pub use outer::{outer_approximation, DeletionStrategy};
pub use recover::{disaggregate_nodal, recover};

use std::ops::Range;

use thiserror::Error;

use crate::case::GridCase;
use crate::ipm::{IpmError, IpmStatus, QuadraticProgram};
use crate::network::{NetworkError, PtdfMatrix};
use crate::sparse::{CscMatrix, Triplets, DROP_TOLERANCE};

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("solution status is {0:?}, refusing to recover a dispatch")]
    NotOptimal(IpmStatus),
    #[error("total {total} MW outside aggregate bounds [{lo}, {hi}]")]
    OutOfBounds { total: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Ipm(#[from] IpmError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum FormulationKind {
    Ptdf,
    PureTheta,
    Mixed,
}

impl FormulationKind {
    pub fn all() -> [FormulationKind; 3] {
        [FormulationKind::Ptdf, FormulationKind::PureTheta, FormulationKind::Mixed]
    }

    pub fn label(&self) -> &'static str {
        match self {
            FormulationKind::Ptdf => "ptdf",
            FormulationKind::PureTheta => "pure-theta",
            FormulationKind::Mixed => "mixed",
        }
    }
}

/// What each constraint row means; drives recovery, shadow prices and
/// outer-approximation deletion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    /// branch flow ≤ +rate (branch index into the bundle's case)
    FlowUpper { branch: usize, period: usize },
    /// branch flow ≥ -rate
    FlowLower { branch: usize, period: usize },
    GenUpper { gen: usize, period: usize },
    GenLower { gen: usize, period: usize },
    /// nodal injection bounds of the pure voltage angle formulation
    InjUpper { bus: usize, period: usize },
    InjLower { bus: usize, period: usize },
    /// p_t - p_{t-1} ≤ ramp
    RampUp { gen: usize, period: usize },
    /// p_t - p_{t-1} ≥ -ramp
    RampDown { gen: usize, period: usize },
    /// per-bus nodal balance equality (mixed formulation)
    Balance { bus: usize, period: usize },
    /// system-wide balance equality (generator-power formulation)
    SystemBalance { period: usize },
    /// θ_ref = 0 equality (mixed formulation)
    RefPin { period: usize },
}

/// Variable layout: per-period blocks in period order.
#[derive(Debug, Clone)]
pub struct VarMap {
    pub kind: FormulationKind,
    pub n_gen: usize,
    pub n_bus: usize,
    pub periods: usize,
}

impl VarMap {
    fn per_period(&self) -> usize {
        match self.kind {
            FormulationKind::Ptdf => self.n_gen,
            FormulationKind::PureTheta => self.n_bus - 1,
            FormulationKind::Mixed => self.n_gen + self.n_bus,
        }
    }

    /// Generator-power slice of period t (absent for the pure angle kind).
    pub fn gen_block(&self, t: usize) -> Option<Range<usize>> {
        let base = t * self.per_period();
        match self.kind {
            FormulationKind::Ptdf | FormulationKind::Mixed => Some(base..base + self.n_gen),
            FormulationKind::PureTheta => None,
        }
    }

    /// Angle slice of period t: reduced (|B|-1) for the pure kind, full |B|
    /// for the mixed kind.
    pub fn theta_block(&self, t: usize) -> Option<Range<usize>> {
        let base = t * self.per_period();
        match self.kind {
            FormulationKind::Ptdf => None,
            FormulationKind::PureTheta => Some(base..base + self.n_bus - 1),
            FormulationKind::Mixed => Some(base + self.n_gen..base + self.n_gen + self.n_bus),
        }
    }
}

/// A built optimization problem plus everything needed to interpret its
/// solution as a dispatch.
#[derive(Debug, Clone)]
pub struct FormulationBundle {
    pub qp: QuadraticProgram,
    pub kind: FormulationKind,
    pub var_map: VarMap,
    /// One tag per inequality row of `qp.a`.
    pub row_tags: Vec<RowTag>,
    /// One tag per equality row of `qp.e`.
    pub eq_tags: Vec<RowTag>,
    /// The (stripped, possibly merged) case the bundle was built from.
    pub case: GridCase,
    /// MW loads per period per internal bus index.
    pub loads: Vec<Vec<f64>>,
    /// Resolved MW/h ramp limit per generator (multi-period bundles).
    pub ramps: Vec<f64>,
    /// Constant cost terms excluded from the QP objective.
    pub objective_offset: f64,
    /// PTDF matrix (generator-power kind only), kept for flow recovery.
    pub ptdf: Option<PtdfMatrix>,
    /// Branch indices whose flow rows were removed by an outer approximation.
    pub deleted_branches: Vec<usize>,
}

impl FormulationBundle {
    pub fn periods(&self) -> usize {
        self.var_map.periods
    }

    /// Count of in-service branches carrying a thermal limit.
    pub fn limited_branches(&self) -> usize {
        self.case.branches.iter().filter(|b| b.rate_a > 0.0).count()
    }

    /// (variables, constraints) under the single-period comparison-table
    /// convention: the pure angle kind re-reports the eliminated reference
    /// angle as a variable; the mixed kind counts its nodal balance rows but
    /// not the reference pin; the generator-power kind's system balance row
    /// is not counted.
    pub fn table_counts(&self) -> (usize, usize) {
        let n = self.qp.n();
        let m = self.qp.m_ineq();
        let p = self.qp.m_eq();
        match self.kind {
            FormulationKind::Ptdf => (n, m),
            FormulationKind::PureTheta => (n + self.periods(), m),
            FormulationKind::Mixed => (n, m + p - self.periods()),
        }
    }

    /// The constraint matrix containing exactly the counted rows (flow,
    /// bound, ramp rows plus, for the mixed kind, the balance rows),
    /// compressed at the global drop tolerance.
    pub fn counted_matrix(&self) -> CscMatrix {
        let extra: Vec<usize> = self
            .eq_tags
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t, RowTag::Balance { .. }))
            .map(|(i, _)| i)
            .collect();
        let n = self.qp.n();
        let m = self.qp.m_ineq();
        let mut t = Triplets::new(m + extra.len(), n);
        t.push_block(0, 0, &self.qp.a);
        let et = self.qp.e.transpose();
        for (out_row, &ei) in extra.iter().enumerate() {
            let (cols, vals) = et.col(ei);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push(m + out_row, j, v);
            }
        }
        t.build().compressed(DROP_TOLERANCE)
    }
}

/// Multi-period SCED configuration.
#[derive(Debug, Clone)]
pub struct ScedConfig {
    pub periods: usize,
    pub load_scale_range: (f64, f64),
    pub seed: u64,
    /// Absolute MW/h ramp applied to every generator when set.
    pub ramp_override: Option<f64>,
    /// Fallback ramp as a fraction of pmax when the case has no ramp data.
    pub ramp_frac: f64,
}

impl Default for ScedConfig {
    fn default() -> Self {
        Self {
            periods: 24,
            load_scale_range: (0.95, 1.05),
            seed: 0,
            ramp_override: None,
            ramp_frac: 0.3,
        }
    }
}

/// Dispatch recovered from an optimal solution.
#[derive(Debug, Clone)]
pub struct DispatchResult {
    /// Total cost in $ (QP objective plus constant terms).
    pub objective: f64,
    /// MW per period per generator.
    pub p_g: Vec<Vec<f64>>,
    /// rad per period per bus (None for the generator-power kind).
    pub theta: Option<Vec<Vec<f64>>>,
    /// MW per period per branch.
    pub flows: Vec<Vec<f64>>,
    /// $/MW per period per branch: λ_upper − λ_lower, positive when the
    /// forward limit binds.
    pub branch_duals: Vec<Vec<f64>>,
}
