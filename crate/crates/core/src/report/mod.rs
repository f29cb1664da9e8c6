//! Sparsity analytics, benchmark orchestration, and report emission.

mod bench;
mod export;
mod sparsity;

pub use bench::{run_benchmark, run_outer_sweep, BenchConfig, BenchMode, OuterRow};
pub use export::{
    export_to_path, fmt_sig, to_csv, to_json, to_markdown, Cell, ReportFormat, TableReport,
};
pub use sparsity::{aat_lower_pattern_nnz, sparsity_report, write_spy, SPARSITY_CONVENTIONS};

use serde::{Deserialize, Serialize};

/// Structural summary of one built formulation. Counts follow the
/// documented conventions: comparison-table (vars, cons) per kind, nnz over
/// the counted rows after a 1e-10 compress, AAᵀ pattern and factor
/// operations from the symbolic analysis under the minimum-degree ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub kind: String,
    pub n_vars: usize,
    pub n_cons: usize,
    pub nnz_a: usize,
    pub density_a: f64,
    pub nnz_aat_lower: usize,
    pub factor_ops: u64,
    pub case_name: String,
}

/// A sparsity report extended with solve outcomes. Per-row failures are
/// recorded in `status` (objective 0) so a benchmark run can continue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    #[serde(flatten)]
    pub sparsity: SparsityReport,
    /// Wall-clock seconds around the solver call only.
    pub solve_time: f64,
    pub barrier_iterations: usize,
    pub objective: f64,
    pub status: String,
}
