use dcopf::case::{merge_colocated_generators, parse_matpower};
use dcopf::formulation::{build_opf, FormulationKind};
use dcopf::ipm::*;
use dcopf::network::{build_network, compute_ptdf};

fn main() {
    let text = std::fs::read_to_string("data/case300.m").unwrap();
    let case = parse_matpower(&text).unwrap().strip_out_of_service();
    let case = merge_colocated_generators(&case).unwrap();
    let net = build_network(&case).unwrap();
    let ptdf = compute_ptdf(&net).unwrap();
    let b = build_opf(&case, &net, Some(&ptdf), FormulationKind::Mixed).unwrap();
    // reproduce the first iteration manually
    let qp = &b.qp;
    let it = {
        // replicate starting point: solve_qp internals not public; emulate
        let opts = IpmOptions::default();
        match solve_qp(qp, &IpmOptions { max_iter: 0, ..opts }) {
            Ok(s) => s.iterate,
            Err(e) => { println!("start err {e}"); return; }
        }
    };
    println!("start: |x|={} y_min={:?} lam_min={:?}", it.x.len(),
        it.y.iter().cloned().fold(f64::INFINITY, f64::min),
        it.lam.iter().cloned().fold(f64::INFINITY, f64::min));
    match mehrotra_step(qp, &it, &IpmOptions::default()) {
        Ok(_) => println!("step ok"),
        Err(e) => println!("step err: {e}"),
    }
}
