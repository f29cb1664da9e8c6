//! Sparsity-restoring matrix transformation of the Newton system.
//!
//! For a QP whose variable vector contains a nodal-injection block p_bus
//! (dense PTDF columns in A), substituting Δp_bus = B_bus·Δθ and scaling
//! the corresponding dual rows by B_busᵀ turns every dense block into a
//! sparse one: PTDF rows become B_f rows, injection-bound rows become
//! B_bus rows, and the Hessian block becomes B_busᵀG_pp B_bus. The solved
//! direction maps back exactly to the untransformed one.

use crate::network::DcNetwork;
use crate::sparse::{
    amd_ordering, symbolic_cholesky, CscMatrix, LdltFactor, PivotRule, Triplets, DROP_TOLERANCE,
};

use super::linsys::{NewtonDirection, NewtonRhs};
use super::qp::{IpmError, QuadraticProgram, Residuals};
use super::solver::IpmIterate;

/// Direction of the transformed system together with the sparsity evidence.
#[derive(Debug, Clone)]
pub struct TransformedDirection {
    /// Δθ, the transformed primal block.
    pub theta: Vec<f64>,
    /// Recovered direction in the original space; `dx` carries
    /// Δp_bus = B_bus_red·Δθ in the p_bus block.
    pub direction: NewtonDirection,
    /// nnz of the transformed augmented coefficient (after compress).
    pub transformed_nnz: usize,
    /// nnz of the untransformed augmented coefficient (after compress).
    pub dense_nnz: usize,
}

/// Split the columns of `m` into (p_bus block, remaining columns).
fn split_cols(m: &CscMatrix, lo: usize, hi: usize) -> (CscMatrix, CscMatrix) {
    let mut left = Triplets::new(m.nrows(), hi - lo);
    let mut right = Triplets::new(m.nrows(), m.ncols() - (hi - lo));
    for j in 0..m.ncols() {
        let (rows, vals) = m.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            if (lo..hi).contains(&j) {
                left.push(i, j - lo, v);
            } else {
                let jj = if j < lo { j } else { j - (hi - lo) };
                right.push(i, jj, v);
            }
        }
    }
    (left.build(), right.build())
}

/// Scatter a p_bus-block vector and an aux-block vector back into original
/// variable order.
fn join_vars(lo: usize, hi: usize, n: usize, pb: &[f64], aux: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (k, v) in pb.iter().enumerate() {
        out[lo + k] = *v;
    }
    let mut a = aux.iter();
    for (j, slot) in out.iter_mut().enumerate() {
        if !(lo..hi).contains(&j) {
            *slot = *a.next().expect("aux length matches");
        }
    }
    out
}

/// Solve the transformed sparse Newton system at `iterate` and recover the
/// untransformed direction. The QP must label its injection block "p_bus"
/// (length |B|−1, matching the reduced network).
pub fn transformed_newton_direction(
    qp_ptdf: &QuadraticProgram,
    net: &DcNetwork,
    iterate: &IpmIterate,
    rhs: NewtonRhs,
    reg: (f64, f64),
) -> Result<TransformedDirection, IpmError> {
    let block = qp_ptdf
        .block("p_bus")
        .ok_or_else(|| IpmError::Contract("name map lacks a p_bus block".into()))?;
    let nb_red = net.n_bus() - 1;
    if block.len() != nb_red {
        return Err(IpmError::Contract(format!(
            "p_bus block has {} variables, network expects {nb_red}",
            block.len()
        )));
    }
    let (lo, hi) = (block.start, block.end);
    let n = qp_ptdf.n();
    let m = qp_ptdf.m_ineq();
    let p = qp_ptdf.m_eq();
    let bmat = &net.b_bus_red;

    // constraint blocks: A = [A_p | A_x] columnwise; A_p·B restores sparsity
    let (a_p, a_x) = split_cols(&qp_ptdf.a, lo, hi);
    let a_p_theta = a_p.matmul(bmat)?.compressed(DROP_TOLERANCE);
    let (e_p, e_x) = split_cols(&qp_ptdf.e, lo, hi);
    let e_p_theta = e_p.matmul(bmat)?.compressed(DROP_TOLERANCE);

    // Hessian blocks under the congruence [Δp_bus; Δx_aux] = [BΔθ; Δx_aux]
    let (g_pcols, g_xcols) = split_cols(&qp_ptdf.g, lo, hi);
    let (g_pp, g_xp) = split_rows(&g_pcols, lo, hi);
    let (g_px, g_xx) = split_rows(&g_xcols, lo, hi);
    let bt = bmat.transpose();
    let g_tt = bt.matmul(&g_pp)?.matmul(bmat)?.compressed(DROP_TOLERANCE);
    let g_tx = bt.matmul(&g_px)?.compressed(DROP_TOLERANCE);
    let g_xt = g_xp.matmul(bmat)?.compressed(DROP_TOLERANCE);

    // residuals at the original iterate
    let res = Residuals::evaluate(qp_ptdf, &iterate.x, &iterate.y, &iterate.lam, &iterate.nu);
    let r_c = rhs.complementarity(&iterate.y, &iterate.lam);

    // transformed augmented system over [Δθ; Δx_aux; -Δλ; -Δν]
    let dim = n + m + p;
    let mut t = Triplets::new(dim, dim);
    t.push_block(0, 0, &g_tt);
    t.push_block(0, nb_red, &g_tx);
    t.push_block(nb_red, 0, &g_xt);
    t.push_block(nb_red, nb_red, &g_xx);
    t.push_block(n, 0, &a_p_theta);
    t.push_block(0, n, &a_p_theta.transpose());
    t.push_block(n, nb_red, &a_x);
    t.push_block(nb_red, n, &a_x.transpose());
    if p > 0 {
        t.push_block(n + m, 0, &e_p_theta);
        t.push_block(0, n + m, &e_p_theta.transpose());
        t.push_block(n + m, nb_red, &e_x);
        t.push_block(nb_red, n + m, &e_x.transpose());
    }
    for i in 0..m {
        t.push(n + i, n + i, -(iterate.y[i] / iterate.lam[i]));
    }
    let k_theta = t.build().compressed(DROP_TOLERANCE);

    // right-hand side: the p_bus rows of r_d are premultiplied by B_busᵀ
    let r_d_p: Vec<f64> = res.dual[lo..hi].to_vec();
    let r_d_theta = bt.matvec(&r_d_p);
    let mut rhs_vec = vec![0.0; dim];
    for i in 0..nb_red {
        rhs_vec[i] = -r_d_theta[i];
    }
    {
        let mut a = 0usize;
        for j in 0..n {
            if !(lo..hi).contains(&j) {
                rhs_vec[nb_red + a] = -res.dual[j];
                a += 1;
            }
        }
    }
    for i in 0..m {
        rhs_vec[n + i] = -res.primal[i] - r_c[i] / iterate.lam[i];
    }
    for i in 0..p {
        rhs_vec[n + m + i] = -res.eq[i];
    }

    let perm = amd_ordering(&k_theta)?;
    let sym = symbolic_cholesky(&k_theta, &perm)?;
    let mut shift = vec![0.0; dim];
    for (i, s) in shift.iter_mut().enumerate() {
        *s = if i < n { reg.0 } else { -reg.1 };
    }
    let f = LdltFactor::factorize(&k_theta, &sym, PivotRule::QuasiDefinite, Some(&shift))?;
    let sol = f.solve_refined(&k_theta, &rhs_vec, 1e-10);

    let theta = sol[..nb_red].to_vec();
    let dp_bus = bmat.matvec(&theta);
    let daux = sol[nb_red..n].to_vec();
    let dx = join_vars(lo, hi, n, &dp_bus, &daux);
    let dlam: Vec<f64> = sol[n..n + m].iter().map(|v| -v).collect();
    let dnu: Vec<f64> = sol[n + m..].iter().map(|v| -v).collect();
    let adx = qp_ptdf.a.matvec(&dx);
    let dy: Vec<f64> = (0..m).map(|i| adx[i] + res.primal[i]).collect();

    // untransformed coefficient nnz, same assembly and compress rule
    let dense_nnz = {
        let mut t = Triplets::new(dim, dim);
        t.push_block(0, 0, &qp_ptdf.g);
        t.push_block(n, 0, &qp_ptdf.a);
        t.push_block(0, n, &qp_ptdf.a.transpose());
        if p > 0 {
            t.push_block(n + m, 0, &qp_ptdf.e);
            t.push_block(0, n + m, &qp_ptdf.e.transpose());
        }
        for i in 0..m {
            t.push(n + i, n + i, -(iterate.y[i] / iterate.lam[i]));
        }
        t.build().compressed(DROP_TOLERANCE).nnz()
    };

    Ok(TransformedDirection {
        theta,
        direction: NewtonDirection { dx, dy, dlam, dnu },
        transformed_nnz: k_theta.nnz(),
        dense_nnz,
    })
}

/// Split the rows of `m` into (p_bus rows, remaining rows).
fn split_rows(m: &CscMatrix, lo: usize, hi: usize) -> (CscMatrix, CscMatrix) {
    let top = {
        let mut t = Triplets::new(hi - lo, m.ncols());
        for j in 0..m.ncols() {
            let (rows, vals) = m.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                if (lo..hi).contains(&i) {
                    t.push(i - lo, j, v);
                }
            }
        }
        t.build()
    };
    let bottom = {
        let mut t = Triplets::new(m.nrows() - (hi - lo), m.ncols());
        for j in 0..m.ncols() {
            let (rows, vals) = m.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                if !(lo..hi).contains(&i) {
                    let ii = if i < lo { i } else { i - (hi - lo) };
                    t.push(ii, j, v);
                }
            }
        }
        t.build()
    };
    (top, bottom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::parse_matpower;
    use crate::formulation::build_ptdf_injection_qp;
    use crate::ipm::{newton_direction, IpmIterate, IpmOptions, LinearPath};
    use crate::network::{build_network, compute_ptdf};
    use crate::sparse::Triplets as T2;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max) / scale
    }

    #[test]
    fn case39_transformed_matches_dense_direction() {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/case39.m"
        ))
        .unwrap();
        let case = parse_matpower(&text).unwrap().strip_out_of_service();
        let net = build_network(&case).unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        let qp = build_ptdf_injection_qp(&case, &net, &ptdf).unwrap();
        let (n, m) = (qp.n(), qp.m_ineq());

        let mut state = 0xC0FFEEu64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        let opts = IpmOptions::default();
        for trial in 0..5 {
            let it = IpmIterate {
                x: (0..n).map(|_| 200.0 * (next() - 0.5)).collect(),
                y: (0..m).map(|_| 0.1 + 10.0 * next()).collect(),
                lam: (0..m).map(|_| 0.1 + 10.0 * next()).collect(),
                nu: vec![],
            };
            let dense =
                newton_direction(&qp, &it, NewtonRhs::Affine, LinearPath::Augmented, &opts)
                    .unwrap();
            let trans = transformed_newton_direction(
                &qp,
                &net,
                &it,
                NewtonRhs::Affine,
                (opts.reg_primal, opts.reg_dual),
            )
            .unwrap();
            let err = rel_err(&trans.direction.dx, &dense.dx);
            assert!(err <= 1e-8, "trial {trial}: Δp_bus relative error {err:e}");
            let err_lam = rel_err(&trans.direction.dlam, &dense.dlam);
            assert!(err_lam <= 1e-8, "trial {trial}: Δλ relative error {err_lam:e}");
            assert!(
                trans.transformed_nnz * 2 <= trans.dense_nnz,
                "transformed nnz {} vs dense nnz {}",
                trans.transformed_nnz,
                trans.dense_nnz
            );
        }
    }

    #[test]
    fn miniature_two_bus_equivalence() {
        // 2-bus network (B_bus_red = [2]), variables [p_bus; one aux]:
        // exercises every transformed block including J/K/L/M coupling
        use crate::case::two_bus_case;
        let mut case = two_bus_case();
        case.base_mva = 1.0;
        let net = build_network(&case).unwrap();

        let mut g = T2::new(2, 2);
        g.push(0, 0, 1.0);
        g.push(1, 1, 1.0);
        let mut a = T2::new(3, 2);
        a.push(0, 0, -1.0); // "PTDF" row on p_bus with J on aux
        a.push(0, 1, 0.4);
        a.push(1, 0, 1.0); // opposite direction with K on aux
        a.push(1, 1, -0.2);
        a.push(2, 0, 0.7); // M row + L on aux
        a.push(2, 1, 1.1);
        let mut qp = QuadraticProgram::new(
            g.build(),
            vec![0.3, -0.8],
            a.build(),
            vec![-2.0, -3.0, -1.0],
        );
        qp.var_blocks.push(("p_bus".into(), 0..1));

        let it = IpmIterate {
            x: vec![0.5, -0.25],
            y: vec![1.5, 2.0, 0.8],
            lam: vec![0.9, 0.3, 1.7],
            nu: vec![],
        };
        let opts = IpmOptions::default();
        let dense =
            newton_direction(&qp, &it, NewtonRhs::Affine, LinearPath::Augmented, &opts).unwrap();
        let trans = transformed_newton_direction(
            &qp,
            &net,
            &it,
            NewtonRhs::Affine,
            (opts.reg_primal, opts.reg_dual),
        )
        .unwrap();
        for i in 0..2 {
            assert!(
                (trans.direction.dx[i] - dense.dx[i]).abs() <= 1e-12,
                "dx[{i}]: {} vs {}",
                trans.direction.dx[i],
                dense.dx[i]
            );
        }
        for i in 0..3 {
            assert!((trans.direction.dlam[i] - dense.dlam[i]).abs() <= 1e-12);
            assert!((trans.direction.dy[i] - dense.dy[i]).abs() <= 1e-12);
        }
        // recovered Δp_bus is exactly B_bus_red·Δθ
        assert!((trans.direction.dx[0] - 2.0 * trans.theta[0]).abs() <= 1e-14);
    }

    #[test]
    fn missing_p_bus_block_is_contract_error() {
        use crate::case::two_bus_case;
        let mut case = two_bus_case();
        case.base_mva = 1.0;
        let net = build_network(&case).unwrap();
        let qp = QuadraticProgram::new(
            crate::sparse::CscMatrix::identity(1),
            vec![0.0],
            crate::sparse::CscMatrix::identity(1),
            vec![-1.0],
        );
        let it = IpmIterate { x: vec![0.0], y: vec![1.0], lam: vec![1.0], nu: vec![] };
        let err =
            transformed_newton_direction(&qp, &net, &it, NewtonRhs::Affine, (1e-8, 1e-8))
                .unwrap_err();
        assert!(matches!(err, IpmError::Contract(ref m) if m.contains("p_bus")));
    }
}
