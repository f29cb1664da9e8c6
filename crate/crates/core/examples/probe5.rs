use dcopf::case::{merge_colocated_generators, parse_matpower};
use dcopf::formulation::{build_opf, FormulationKind};
use dcopf::network::{build_network, compute_ptdf};
use dcopf::sparse::*;
use std::collections::HashMap;

fn main() {
    let text = std::fs::read_to_string("data/case300.m").unwrap();
    let case = parse_matpower(&text).unwrap().strip_out_of_service();
    let case = merge_colocated_generators(&case).unwrap();
    let net = build_network(&case).unwrap();
    let ptdf = compute_ptdf(&net).unwrap();
    let b = build_opf(&case, &net, Some(&ptdf), FormulationKind::Mixed).unwrap();
    let qp = &b.qp;
    let (n, m, p) = (qp.n(), qp.m_ineq(), qp.m_eq());
    // assemble K as the augmented system does (y=λ=1)
    let dim = n + m + p;
    let mut t = Triplets::new(dim, dim);
    t.push_block(0, 0, &qp.g);
    t.push_block(n, 0, &qp.a);
    t.push_block(0, n, &qp.a.transpose());
    t.push_block(n + m, 0, &qp.e);
    t.push_block(0, n + m, &qp.e.transpose());
    for i in 0..m { t.push(n + i, n + i, -1.0); }
    let k = t.build();
    // find bitwise-identical columns
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut dups = 0;
    for j in 0..dim {
        let (rows, vals) = k.col(j);
        let key = format!("{rows:?}|{vals:?}");
        if let Some(&prev) = seen.get(&key) {
            if dups < 6 {
                println!("col {j} identical to col {prev} ({} entries)", rows.len());
            }
            dups += 1;
        } else {
            seen.insert(key, j);
        }
    }
    println!("total duplicate columns: {dups}");
    match ldlt_solve(&k, &vec![1.0; dim], Regularization::new(1e-8, 1e-8, n)) {
        Ok((_, r)) => println!("ldlt ok resid {r:.2e}"),
        Err(e) => println!("ldlt err: {e}"),
    }
}
