//! Benchmark orchestration: per-(case, kind) build and solve with the
//! formulation build timed separately from the solver call.

use std::time::Instant;

use crate::case::{merge_colocated_generators, GridCase};
use crate::formulation::{
    build_opf, build_sced, outer_approximation, recover, DeletionStrategy, FormulationBundle,
    FormulationError, FormulationKind, ScedConfig,
};
use crate::ipm::{solve_qp, IpmOptions, IpmStatus};
use crate::network::{build_network, compute_ptdf};

use super::{sparsity_report, BenchRow, SparsityReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    Opf,
    Sced,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub mode: BenchMode,
    pub sced: ScedConfig,
    pub merge: bool,
    pub ipm: IpmOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            mode: BenchMode::Opf,
            sced: ScedConfig::default(),
            merge: true,
            ipm: IpmOptions::default(),
        }
    }
}

/// A benchmark row of an outer-approximation sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OuterRow {
    pub strategy: String,
    pub ratio: f64,
    #[serde(flatten)]
    pub row: BenchRow,
}

fn failed_row(case_name: &str, kind: FormulationKind, err: &str) -> BenchRow {
    BenchRow {
        sparsity: SparsityReport {
            kind: kind.label().to_string(),
            n_vars: 0,
            n_cons: 0,
            nnz_a: 0,
            density_a: 0.0,
            nnz_aat_lower: 0,
            factor_ops: 0,
            case_name: case_name.to_string(),
        },
        solve_time: 0.0,
        barrier_iterations: 0,
        objective: 0.0,
        status: format!("error: {err}"),
    }
}

/// Build, analyze and solve one bundle; wall-clock timing wraps the solver
/// call only.
fn bench_bundle(bundle: &FormulationBundle, case_name: &str, opts: &IpmOptions) -> BenchRow {
    let sparsity = sparsity_report(bundle, case_name);
    let t0 = Instant::now();
    let sol = solve_qp(&bundle.qp, opts);
    let solve_time = t0.elapsed().as_secs_f64();
    match sol {
        Ok(sol) => {
            let objective = if sol.status == IpmStatus::Optimal {
                sol.objective + bundle.objective_offset
            } else {
                0.0
            };
            BenchRow {
                sparsity,
                solve_time,
                barrier_iterations: sol.iterations,
                objective,
                status: format!("{:?}", sol.status).to_lowercase(),
            }
        }
        Err(e) => BenchRow {
            sparsity,
            solve_time,
            barrier_iterations: 0,
            objective: 0.0,
            status: format!("error: {e}"),
        },
    }
}

/// Prepare a case for building: strip out-of-service elements and
/// optionally merge colocated generators.
pub(crate) fn prepare(case: &GridCase, merge: bool) -> Result<GridCase, FormulationError> {
    let stripped = case.strip_out_of_service();
    if merge {
        merge_colocated_generators(&stripped)
            .map_err(|e| FormulationError::Contract(e.to_string()))
    } else {
        Ok(stripped)
    }
}

/// One row per (case, kind); failures are recorded in the row and the run
/// continues.
pub fn run_benchmark(
    cases: &[(String, GridCase)],
    kinds: &[FormulationKind],
    cfg: &BenchConfig,
) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for (name, raw) in cases {
        let prepared = match prepare(raw, cfg.merge) {
            Ok(c) => c,
            Err(e) => {
                for &kind in kinds {
                    rows.push(failed_row(name, kind, &e.to_string()));
                }
                continue;
            }
        };
        let net = match build_network(&prepared) {
            Ok(n) => n,
            Err(e) => {
                for &kind in kinds {
                    rows.push(failed_row(name, kind, &e.to_string()));
                }
                continue;
            }
        };
        let needs_ptdf = kinds.contains(&FormulationKind::Ptdf);
        let ptdf = if needs_ptdf {
            match compute_ptdf(&net) {
                Ok(p) => Some(p),
                Err(e) => {
                    for &kind in kinds {
                        rows.push(failed_row(name, kind, &e.to_string()));
                    }
                    continue;
                }
            }
        } else {
            None
        };
        for &kind in kinds {
            let built = match cfg.mode {
                BenchMode::Opf => build_opf(&prepared, &net, ptdf.as_ref(), kind),
                BenchMode::Sced => {
                    build_sced(&prepared, &net, ptdf.as_ref(), kind, &cfg.sced)
                }
            };
            match built {
                Ok(bundle) => rows.push(bench_bundle(&bundle, name, &cfg.ipm)),
                Err(e) => rows.push(failed_row(name, kind, &e.to_string())),
            }
        }
    }
    rows
}

/// Outer-approximation sweep: solve the full problem once per kind, then
/// one row per (kind, ratio) with the branch-deletion relaxation applied.
pub fn run_outer_sweep(
    case_name: &str,
    case: &GridCase,
    kinds: &[FormulationKind],
    strategy: DeletionStrategy,
    ratios: &[f64],
    seed: u64,
    cfg: &BenchConfig,
) -> Result<Vec<OuterRow>, FormulationError> {
    let prepared = prepare(case, cfg.merge)?;
    let net = build_network(&prepared)?;
    let ptdf = compute_ptdf(&net)?;
    let strategy_name = match strategy {
        DeletionStrategy::Random => "random",
        DeletionStrategy::MostUncongested => "most-uncongested",
    };
    let mut rows = Vec::new();
    for &kind in kinds {
        let bundle = match cfg.mode {
            BenchMode::Opf => build_opf(&prepared, &net, Some(&ptdf), kind)?,
            BenchMode::Sced => build_sced(&prepared, &net, Some(&ptdf), kind, &cfg.sced)?,
        };
        let base_sol = solve_qp(&bundle.qp, &cfg.ipm)?;
        if base_sol.status != IpmStatus::Optimal {
            return Err(FormulationError::NotOptimal(base_sol.status));
        }
        let base = recover(&bundle, &base_sol, &net)?;
        for &ratio in ratios {
            let outer = outer_approximation(&bundle, &base, strategy, ratio, seed)?;
            let row = bench_bundle(&outer, case_name, &cfg.ipm);
            rows.push(OuterRow { strategy: strategy_name.to_string(), ratio, row });
        }
    }
    Ok(rows)
}
