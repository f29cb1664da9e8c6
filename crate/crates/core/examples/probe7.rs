use dcopf::case::{merge_colocated_generators, parse_matpower};
use dcopf::formulation::{build_sced, FormulationKind, ScedConfig};
use dcopf::ipm::{solve_qp, IpmOptions};
use dcopf::network::{build_network, compute_ptdf};

fn main() {
    let text = std::fs::read_to_string("data/case39.m").unwrap();
    let case = parse_matpower(&text).unwrap().strip_out_of_service();
    let case = merge_colocated_generators(&case).unwrap();
    let net = build_network(&case).unwrap();
    let ptdf = compute_ptdf(&net).unwrap();
    let cfg = ScedConfig { periods: 24, seed: 7, ..Default::default() };
    for kind in FormulationKind::all() {
        let b = build_sced(&case, &net, Some(&ptdf), kind, &cfg).unwrap();
        let t0 = std::time::Instant::now();
        let sol = solve_qp(&b.qp, &IpmOptions::default()).unwrap();
        println!(
            "{:>10}: n={} m={} p={} status={:?} iters={} obj={:.4} res={:?} {:?}",
            kind.label(), b.qp.n(), b.qp.m_ineq(), b.qp.m_eq(),
            sol.status, sol.iterations, sol.objective + b.objective_offset,
            sol.residuals, t0.elapsed()
        );
        if !sol.trace.is_empty() {
            for rec in sol.trace.iter().rev().take(4).rev() {
                println!("   it {} mu={:.2e} rd={:.2e} rp={:.2e} re={:.2e} ap={:.3} ad={:.3}",
                    rec.iter, rec.mu, rec.r_dual, rec.r_primal, rec.r_eq, rec.alpha_primal, rec.alpha_dual);
            }
        }
    }
}
