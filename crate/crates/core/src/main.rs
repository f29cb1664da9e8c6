//! Benchmark CLI: parse grid cases, build and solve the three DC
//! security-constraint formulations, and emit sparsity/benchmark reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use serde::Serialize;

use dcopf::case::{self, BusType, GridCase};
use dcopf::formulation::{
    build_opf, build_sced, recover, DeletionStrategy, FormulationKind, ScedConfig,
};
use dcopf::ipm::{solve_qp, IpmOptions, IpmStatus, LinearPath};
use dcopf::network::{build_network, compute_ptdf};
use dcopf::report::{
    fmt_sig, run_benchmark, run_outer_sweep, sparsity_report, to_csv, to_json, to_markdown,
    write_spy, BenchConfig, BenchMode, Cell, ReportFormat, TableReport, SPARSITY_CONVENTIONS,
};

#[derive(Parser)]
#[command(name = "dcopf", version, about = "DC OPF/SCED formulation benchmark")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,

    /// Output format: csv, json, or markdown.
    #[arg(long, global = true, default_value = "markdown")]
    format: String,

    /// Seed for SCED load scaling and random branch deletion.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Override the reference bus (external id).
    #[arg(long, global = true)]
    ref_bus: Option<usize>,

    /// Merge colocated generators before building formulations.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    merge_gens: bool,

    /// Default generator ramp as a fraction of pmax (MW/h).
    #[arg(long, global = true, default_value_t = 0.3)]
    ramp_frac: f64,

    /// Linear algebra path: normal, augmented, or auto.
    #[arg(long, global = true, default_value = "auto")]
    path: String,

    /// Interior-point convergence tolerance (scaled residuals).
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,

    /// Iteration limit.
    #[arg(long, global = true, default_value_t = 100)]
    max_iter: usize,

    /// Emit per-iteration JSON lines on stderr.
    #[arg(long, global = true)]
    trace: bool,

    /// Write output here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a case; --format json emits the JSON mirror.
    Parse { case: PathBuf },
    /// Emit the dense PTDF matrix as CSV with external bus ids as headers.
    Ptdf { case: PathBuf },
    /// Solve the single-period OPF.
    Opf {
        case: PathBuf,
        /// ptdf, pure-theta, mixed, or all.
        #[arg(long, default_value = "all")]
        kind: String,
    },
    /// Solve the multi-period SCED and emit a deterministic dispatch report.
    Sced {
        case: PathBuf,
        #[arg(long, default_value = "mixed")]
        kind: String,
        #[arg(long, default_value_t = 24)]
        periods: usize,
        /// Absolute MW/h ramp override for every generator.
        #[arg(long)]
        ramp: Option<f64>,
    },
    /// Structural sparsity report for all three formulations.
    Report {
        case: PathBuf,
        /// Also write "row,col" spy coordinates per kind to <path>.<kind>.
        #[arg(long)]
        spy: Option<PathBuf>,
    },
    /// Outer-approximation sweep over branch-deletion ratios.
    Outer {
        case: PathBuf,
        #[arg(long, default_value = "most-uncongested")]
        strategy: String,
        #[arg(long, default_value = "0,0.5,0.9,0.98")]
        ratios: String,
        #[arg(long, default_value = "ptdf,mixed")]
        kind: String,
    },
    /// Benchmark rows for one or more cases.
    Bench {
        cases: Vec<PathBuf>,
        #[arg(long, default_value = "opf")]
        mode: String,
        #[arg(long, default_value = "all")]
        kind: String,
        #[arg(long, default_value_t = 24)]
        periods: usize,
    },
}

enum CliError {
    Usage(String),
    Case(String),
    Solve(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Case(_) => 2,
            CliError::Solve(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Case(m) | CliError::Solve(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's help/version "errors" are successful exits
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn parse_format(s: &str) -> Result<ReportFormat, CliError> {
    ReportFormat::parse(s)
        .ok_or_else(|| CliError::Usage(format!("unknown format '{s}' (csv|json|markdown)")))
}

fn parse_kinds(s: &str) -> Result<Vec<FormulationKind>, CliError> {
    if s == "all" {
        return Ok(FormulationKind::all().to_vec());
    }
    s.split(',')
        .map(|k| match k.trim() {
            "ptdf" => Ok(FormulationKind::Ptdf),
            "pure-theta" | "theta" | "pure" => Ok(FormulationKind::PureTheta),
            "mixed" | "b-theta" => Ok(FormulationKind::Mixed),
            other => Err(CliError::Usage(format!(
                "unknown formulation kind '{other}' (ptdf|pure-theta|mixed|all)"
            ))),
        })
        .collect()
}

fn parse_path(s: &str) -> Result<LinearPath, CliError> {
    match s {
        "normal" => Ok(LinearPath::Normal),
        "augmented" => Ok(LinearPath::Augmented),
        "auto" => Ok(LinearPath::Auto),
        other => Err(CliError::Usage(format!(
            "unknown linear path '{other}' (normal|augmented|auto)"
        ))),
    }
}

fn load_case(path: &Path, ref_bus: Option<usize>) -> Result<GridCase, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Case(format!("cannot read {}: {e}", path.display())))?;
    let mut case = GridCase::parse(&text).map_err(|e| CliError::Case(e.to_string()))?;
    if let Some(id) = ref_bus {
        if !case.buses.iter().any(|b| b.id == id) {
            return Err(CliError::Case(format!("--ref-bus {id}: no such bus")));
        }
        for b in &mut case.buses {
            if b.bus_type == BusType::REF {
                b.bus_type = BusType::PV;
            }
            if b.id == id {
                b.bus_type = BusType::REF;
            }
        }
    }
    let diags = case::validate(&case);
    for d in &diags {
        if d.severity == case::Severity::Warning {
            eprintln!("warning: {}", d.message);
        }
    }
    if !case::is_valid(&diags) {
        let errs: Vec<&str> = diags
            .iter()
            .filter(|d| d.severity == case::Severity::Error)
            .map(|d| d.message.as_str())
            .collect();
        return Err(CliError::Case(errs.join("; ")));
    }
    Ok(case)
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SummaryRow {
    field: String,
    value: String,
}

impl TableReport for SummaryRow {
    fn headers() -> Vec<&'static str> {
        vec!["field", "value"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Str(self.field.clone()), Cell::Str(self.value.clone())]
    }
}

#[derive(Serialize)]
struct DispatchRow {
    kind: String,
    period: usize,
    gen: usize,
    bus: usize,
    p_mw: f64,
}

impl TableReport for DispatchRow {
    fn headers() -> Vec<&'static str> {
        vec!["kind", "period", "gen", "bus", "p_mw"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Str(self.kind.clone()),
            Cell::Int(self.period as u64),
            Cell::Int(self.gen as u64),
            Cell::Int(self.bus as u64),
            Cell::Float(self.p_mw),
        ]
    }
}

#[derive(Serialize)]
struct LoadRow {
    period: usize,
    bus: usize,
    mw: f64,
}

impl TableReport for LoadRow {
    fn headers() -> Vec<&'static str> {
        vec!["period", "bus", "mw"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![Cell::Int(self.period as u64), Cell::Int(self.bus as u64), Cell::Float(self.mw)]
    }
}

fn render<R: TableReport + Serialize>(rows: &[R], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => to_csv(rows),
        ReportFormat::Json => to_json(rows),
        ReportFormat::Markdown => to_markdown(rows),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let format = parse_format(&cli.format)?;
    let ipm = IpmOptions {
        tol: cli.tol,
        max_iter: cli.max_iter,
        path: parse_path(&cli.path)?,
        ..Default::default()
    };

    match &cli.cmd {
        Command::Parse { case } => {
            let parsed = load_case(case, cli.ref_bus)?;
            if format == ReportFormat::Json {
                return emit(&(parsed.to_json() + "\n"), &cli.output);
            }
            let limited = parsed.branches.iter().filter(|b| b.rate_a > 0.0).count();
            let rows = vec![
                SummaryRow { field: "base_mva".into(), value: fmt_sig(parsed.base_mva, 6) },
                SummaryRow { field: "buses".into(), value: parsed.buses.len().to_string() },
                SummaryRow {
                    field: "branches".into(),
                    value: parsed.branches.len().to_string(),
                },
                SummaryRow { field: "limited_branches".into(), value: limited.to_string() },
                SummaryRow {
                    field: "generators".into(),
                    value: parsed.generators.len().to_string(),
                },
                SummaryRow {
                    field: "total_load_mw".into(),
                    value: fmt_sig(parsed.total_load(), 6),
                },
            ];
            emit(&render(&rows, format), &cli.output)
        }

        Command::Ptdf { case } => {
            let parsed = load_case(case, cli.ref_bus)?.strip_out_of_service();
            let net = build_network(&parsed).map_err(|e| CliError::Case(e.to_string()))?;
            let ptdf = compute_ptdf(&net).map_err(|e| CliError::Solve(e.to_string()))?;
            let mut out = String::from("branch");
            for b in &parsed.buses {
                out.push_str(&format!(",bus_{}", b.id));
            }
            out.push('\n');
            for (k, br) in parsed.branches.iter().enumerate() {
                out.push_str(&format!("{}-{}", br.from_bus, br.to_bus));
                for b in 0..parsed.buses.len() {
                    out.push(',');
                    out.push_str(&fmt_sig(ptdf.data.get(k, b), 6));
                }
                out.push('\n');
            }
            emit(&out, &cli.output)
        }

        Command::Opf { case, kind } => {
            let kinds = parse_kinds(kind)?;
            let parsed = load_case(case, cli.ref_bus)?;
            let prepared = prepare_case(&parsed, cli.merge_gens)?;
            let net = build_network(&prepared).map_err(|e| CliError::Case(e.to_string()))?;
            let ptdf = compute_ptdf(&net).map_err(|e| CliError::Solve(e.to_string()))?;
            let mut dispatch_rows = Vec::new();
            let mut bench_rows = Vec::new();
            for &k in &kinds {
                let bundle = build_opf(&prepared, &net, Some(&ptdf), k)
                    .map_err(|e| CliError::Case(e.to_string()))?;
                let report = sparsity_report(&bundle, &case_name(case));
                let t0 = std::time::Instant::now();
                let sol =
                    solve_qp(&bundle.qp, &ipm).map_err(|e| CliError::Solve(e.to_string()))?;
                let dt = t0.elapsed().as_secs_f64();
                trace_solution(cli.trace, k, &sol);
                if sol.status != IpmStatus::Optimal {
                    return Err(CliError::Solve(format!(
                        "{} OPF did not reach optimality: {:?}",
                        k.label(),
                        sol.status
                    )));
                }
                let d = recover(&bundle, &sol, &net)
                    .map_err(|e| CliError::Solve(e.to_string()))?;
                for (g, gen) in prepared.generators.iter().enumerate() {
                    dispatch_rows.push(DispatchRow {
                        kind: k.label().into(),
                        period: 0,
                        gen: g,
                        bus: gen.bus,
                        p_mw: d.p_g[0][g],
                    });
                }
                bench_rows.push(dcopf::report::BenchRow {
                    sparsity: report,
                    solve_time: dt,
                    barrier_iterations: sol.iterations,
                    objective: d.objective,
                    status: "optimal".into(),
                });
            }
            let mut text = render(&bench_rows, format);
            if format != ReportFormat::Json {
                text.push('\n');
            }
            text.push_str(&render(&dispatch_rows, format));
            emit(&text, &cli.output)
        }

        Command::Sced { case, kind, periods, ramp } => {
            let kinds = parse_kinds(kind)?;
            let parsed = load_case(case, cli.ref_bus)?;
            let prepared = prepare_case(&parsed, cli.merge_gens)?;
            let net = build_network(&prepared).map_err(|e| CliError::Case(e.to_string()))?;
            let ptdf = compute_ptdf(&net).map_err(|e| CliError::Solve(e.to_string()))?;
            let cfg = ScedConfig {
                periods: *periods,
                seed: cli.seed,
                ramp_override: *ramp,
                ramp_frac: cli.ramp_frac,
                ..Default::default()
            };
            let mut text = String::new();
            let mut objective_rows = Vec::new();
            let mut dispatch_rows = Vec::new();
            let mut load_rows = Vec::new();
            for &k in &kinds {
                let bundle = build_sced(&prepared, &net, Some(&ptdf), k, &cfg)
                    .map_err(|e| CliError::Case(e.to_string()))?;
                let sol =
                    solve_qp(&bundle.qp, &ipm).map_err(|e| CliError::Solve(e.to_string()))?;
                trace_solution(cli.trace, k, &sol);
                if sol.status != IpmStatus::Optimal {
                    return Err(CliError::Solve(format!(
                        "{} SCED did not reach optimality: {:?}",
                        k.label(),
                        sol.status
                    )));
                }
                let d = recover(&bundle, &sol, &net)
                    .map_err(|e| CliError::Solve(e.to_string()))?;
                objective_rows.push(SummaryRow {
                    field: format!("objective[{}]", k.label()),
                    value: fmt_sig(d.objective, 6),
                });
                for t in 0..*periods {
                    for (g, gen) in prepared.generators.iter().enumerate() {
                        dispatch_rows.push(DispatchRow {
                            kind: k.label().into(),
                            period: t,
                            gen: g,
                            bus: gen.bus,
                            p_mw: d.p_g[t][g],
                        });
                    }
                }
                if load_rows.is_empty() {
                    for (t, row) in bundle.loads.iter().enumerate() {
                        for (b, mw) in row.iter().enumerate() {
                            load_rows.push(LoadRow {
                                period: t,
                                bus: prepared.buses[b].id,
                                mw: *mw,
                            });
                        }
                    }
                }
            }
            text.push_str(&render(&objective_rows, format));
            if format != ReportFormat::Json {
                text.push('\n');
            }
            text.push_str(&render(&dispatch_rows, format));
            if format != ReportFormat::Json {
                text.push('\n');
            }
            text.push_str(&render(&load_rows, format));
            emit(&text, &cli.output)
        }

        Command::Report { case, spy } => {
            let parsed = load_case(case, cli.ref_bus)?;
            let prepared = prepare_case(&parsed, cli.merge_gens)?;
            let net = build_network(&prepared).map_err(|e| CliError::Case(e.to_string()))?;
            let ptdf = compute_ptdf(&net).map_err(|e| CliError::Solve(e.to_string()))?;
            let mut rows = Vec::new();
            for k in FormulationKind::all() {
                let bundle = build_opf(&prepared, &net, Some(&ptdf), k)
                    .map_err(|e| CliError::Case(e.to_string()))?;
                rows.push(sparsity_report(&bundle, &case_name(case)));
                if let Some(spy_path) = spy {
                    let path = spy_path.with_extension(format!("{}.spy", k.label()));
                    let mut f = std::fs::File::create(&path).map_err(|e| {
                        CliError::Usage(format!("cannot write {}: {e}", path.display()))
                    })?;
                    write_spy(&bundle, &mut f).map_err(|e| {
                        CliError::Usage(format!("cannot write {}: {e}", path.display()))
                    })?;
                }
            }
            let mut text = render(&rows, format);
            if format == ReportFormat::Markdown {
                text.push_str("\nnote: ");
                text.push_str(SPARSITY_CONVENTIONS);
                text.push('\n');
            }
            emit(&text, &cli.output)
        }

        Command::Outer { case, strategy, ratios, kind } => {
            let kinds = parse_kinds(kind)?;
            let strategy = match strategy.as_str() {
                "random" => DeletionStrategy::Random,
                "most-uncongested" => DeletionStrategy::MostUncongested,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown strategy '{other}' (random|most-uncongested)"
                    )))
                }
            };
            let ratios: Vec<f64> = ratios
                .split(',')
                .map(|r| {
                    r.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Usage(format!("bad ratio '{r}'")))
                })
                .collect::<Result<_, _>>()?;
            let parsed = load_case(case, cli.ref_bus)?;
            let cfg = BenchConfig { merge: cli.merge_gens, ipm: ipm.clone(), ..Default::default() };
            let rows = run_outer_sweep(
                &case_name(case),
                &parsed,
                &kinds,
                strategy,
                &ratios,
                cli.seed,
                &cfg,
            )
            .map_err(|e| CliError::Solve(e.to_string()))?;
            emit(&render(&rows, format), &cli.output)
        }

        Command::Bench { cases, mode, kind, periods } => {
            if cases.is_empty() {
                // empty case list: empty report, exit 0
                let rows: Vec<dcopf::report::BenchRow> = Vec::new();
                return emit(&render(&rows, format), &cli.output);
            }
            let kinds = parse_kinds(kind)?;
            let mode = match mode.as_str() {
                "opf" => BenchMode::Opf,
                "sced" => BenchMode::Sced,
                other => {
                    return Err(CliError::Usage(format!("unknown mode '{other}' (opf|sced)")))
                }
            };
            let mut loaded = Vec::new();
            for path in cases {
                loaded.push((case_name(path), load_case(path, cli.ref_bus)?));
            }
            let cfg = BenchConfig {
                mode,
                sced: ScedConfig {
                    periods: *periods,
                    seed: cli.seed,
                    ramp_frac: cli.ramp_frac,
                    ..Default::default()
                },
                merge: cli.merge_gens,
                ipm: ipm.clone(),
            };
            let rows = run_benchmark(&loaded, &kinds, &cfg);
            emit(&render(&rows, format), &cli.output)
        }
    }
}

fn prepare_case(case: &GridCase, merge: bool) -> Result<GridCase, CliError> {
    let stripped = case.strip_out_of_service();
    if merge {
        case::merge_colocated_generators(&stripped).map_err(|e| CliError::Case(e.to_string()))
    } else {
        Ok(stripped)
    }
}

fn case_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn trace_solution(enabled: bool, kind: FormulationKind, sol: &dcopf::ipm::IpmSolution) {
    if !enabled {
        return;
    }
    #[derive(Serialize)]
    struct TraceLine<'a> {
        kind: &'a str,
        #[serde(flatten)]
        rec: &'a dcopf::ipm::IterRecord,
    }
    for rec in &sol.trace {
        if let Ok(line) = serde_json::to_string(&TraceLine { kind: kind.label(), rec }) {
            eprintln!("{line}");
        }
    }
}
