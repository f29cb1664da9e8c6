use dcopf::case::{merge_colocated_generators, parse_matpower};
use dcopf::formulation::{build_opf, recover, FormulationKind};
use dcopf::ipm::{solve_qp, IpmOptions};
use dcopf::network::{build_network, compute_ptdf};
use dcopf::sparse::DROP_TOLERANCE;

fn main() {
    for name in ["case39", "case118", "case300"] {
        let text = std::fs::read_to_string(format!("data/{name}.m")).unwrap();
        let case = parse_matpower(&text).unwrap().strip_out_of_service();
        let case = merge_colocated_generators(&case).unwrap();
        let net = build_network(&case).unwrap();
        let t0 = std::time::Instant::now();
        let ptdf = compute_ptdf(&net).unwrap();
        let t_ptdf = t0.elapsed();
        println!("== {name}: |B|={} |L|={} |G|={} ptdf {:?}", case.buses.len(), case.branches.len(), case.generators.len(), t_ptdf);
        for kind in FormulationKind::all() {
            let t0 = std::time::Instant::now();
            let b = build_opf(&case, &net, Some(&ptdf), kind).unwrap();
            let t_build = t0.elapsed();
            let counted = b.counted_matrix();
            let t0 = std::time::Instant::now();
            let sol = solve_qp(&b.qp, &IpmOptions::default()).unwrap();
            let t_solve = t0.elapsed();
            let (v, c) = b.table_counts();
            match recover(&b, &sol, &net) {
                Ok(d) => println!(
                    "  {:>10}: vars={v} cons={c} nnz={} status={:?} iters={} obj={:.4} build {:?} solve {:?}",
                    kind.label(), counted.nnz(), sol.status, sol.iterations, d.objective, t_build, t_solve
                ),
                Err(e) => println!("  {:>10}: vars={v} cons={c} nnz={} status={:?} iters={} RECOVER ERR {e} (res {:?})",
                    kind.label(), counted.nnz(), sol.status, sol.iterations, sol.residuals),
            }
        }
        let _ = DROP_TOLERANCE;
    }
}
