use dcopf::case::{merge_colocated_generators, parse_matpower};
use dcopf::formulation::{build_opf, FormulationKind};
use dcopf::network::{build_network, compute_ptdf};
use dcopf::sparse::*;

fn main() {
    let text = std::fs::read_to_string("data/case300.m").unwrap();
    let case = parse_matpower(&text).unwrap().strip_out_of_service();
    let case = merge_colocated_generators(&case).unwrap();
    let net = build_network(&case).unwrap();
    let ptdf = compute_ptdf(&net).unwrap();
    let b = build_opf(&case, &net, Some(&ptdf), FormulationKind::Mixed).unwrap();
    let qp = &b.qp;
    let (n, m, p) = (qp.n(), qp.m_ineq(), qp.m_eq());
    println!("n={n} m={m} p={p} dim={}", n + m + p);
    let col = 1495usize;
    if col >= n + m {
        let ei = col - n - m;
        let et = qp.e.transpose();
        let (cols, vals) = et.col(ei);
        println!("eq row {ei}: {} entries", cols.len());
        for (c, v) in cols.iter().zip(vals).take(12) {
            println!("  var {c} ({}) = {v:.6}", qp.var_names.get(*c).cloned().unwrap_or_default());
        }
        println!("  h = {}", qp.h[ei]);
        // check for an identical other row
        for other in 0..p {
            if other == ei { continue; }
            let (c2, v2) = et.col(other);
            if c2 == cols && v2.iter().zip(vals).all(|(a, b)| (a - b).abs() < 1e-15) {
                println!("  IDENTICAL to eq row {other}");
            }
        }
    }
}
