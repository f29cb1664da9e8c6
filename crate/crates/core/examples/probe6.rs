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
    let dim = n + m + p;
    let mut t = Triplets::new(dim, dim);
    t.push_block(0, 0, &qp.g);
    t.push_block(n, 0, &qp.a);
    t.push_block(0, n, &qp.a.transpose());
    t.push_block(n + m, 0, &qp.e);
    t.push_block(0, n + m, &qp.e.transpose());
    for i in 0..m { t.push(n + i, n + i, -1.0); }
    let k = t.build();
    let mut shift = vec![0.0; dim];
    for (i, s) in shift.iter_mut().enumerate() { *s = if i < n { 1e-8 } else { -1e-8 }; }
    let rhs = vec![1.0; dim];

    for (name, perm) in [
        ("identity", Permutation::identity(dim)),
        ("amd", amd_ordering(&k).unwrap()),
    ] {
        let sym = symbolic_cholesky(&k, &perm).unwrap();
        match LdltFactor::factorize(&k, &sym, PivotRule::QuasiDefinite, Some(&shift)) {
            Ok(f) => {
                let x = f.solve_refined(&k, &rhs, 1e-10);
                let ax = k.matvec(&x);
                let err = ax.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
                println!("{name}: nnz_l={} ok, resid={err:.2e}", sym.nnz_l());
            }
            Err(e) => println!("{name}: nnz_l={} ERR {e}", sym.nnz_l()),
        }
    }
}
