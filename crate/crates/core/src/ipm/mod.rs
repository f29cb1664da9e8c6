//! Primal-dual interior-point solver for convex QPs with inequality and
//! equality blocks, plus the sparsity-restoring transformed Newton solve.

mod linsys;
mod qp;
mod solver;
mod transform;

pub use linsys::{NewtonDirection, NewtonRhs};
pub use qp::{IpmError, QuadraticProgram, Residuals};
pub use solver::{
    mehrotra_step, newton_direction, solve_qp, IpmIterate, IpmOptions, IpmSolution, IpmStatus,
    IterRecord, LinearPath, ResidualNorms,
};
pub use transform::{transformed_newton_direction, TransformedDirection};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{CscMatrix, Triplets};

    fn dense_qp(
        g: &[&[f64]],
        c: &[f64],
        a: &[&[f64]],
        b: &[f64],
    ) -> QuadraticProgram {
        let n = c.len();
        let m = b.len();
        let mut gt = Triplets::new(n, n);
        for (i, row) in g.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    gt.push(i, j, v);
                }
            }
        }
        let mut at = Triplets::new(m, n);
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    at.push(i, j, v);
                }
            }
        }
        QuadraticProgram::new(gt.build(), c.to_vec(), at.build(), b.to_vec())
    }

    #[test]
    fn scalar_bound_qp_hand_kkt() {
        // min (x-2)^2 = x^2 - 4x + 4 s.t. -x >= -1; optimum x*=1, λ*=2
        let qp = dense_qp(&[&[2.0]], &[-4.0], &[&[-1.0]], &[-1.0]);
        let sol = solve_qp(&qp, &IpmOptions::default()).unwrap();
        assert_eq!(sol.status, IpmStatus::Optimal);
        assert!((sol.iterate.x[0] - 1.0).abs() < 1e-7);
        assert!((sol.iterate.lam[0] - 2.0).abs() < 1e-6);
        // objective of the shifted quadratic: (1-2)^2 = 1
        assert!((sol.objective + 4.0 * 1.0 - 1.0 + 4.0 - 4.0).abs() < 1e-6);
    }

    #[test]
    fn two_variable_box_qp() {
        // min ½(x₁²+x₂²) s.t. x ≥ (1,1) → x*=(1,1), λ*=(1,1)
        let qp = dense_qp(
            &[&[1.0, 0.0], &[0.0, 1.0]],
            &[0.0, 0.0],
            &[&[1.0, 0.0], &[0.0, 1.0]],
            &[1.0, 1.0],
        );
        let sol = solve_qp(&qp, &IpmOptions::default()).unwrap();
        assert_eq!(sol.status, IpmStatus::Optimal);
        for i in 0..2 {
            assert!((sol.iterate.x[i] - 1.0).abs() < 1e-7);
            assert!((sol.iterate.lam[i] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn equality_constrained_qp() {
        // min ½(x₁²+x₂²) s.t. x₁+x₂ = 2, x ≥ 0 → x*=(1,1), ν*=-1
        let g = CscMatrix::identity(2);
        let a = CscMatrix::identity(2);
        let mut et = Triplets::new(1, 2);
        et.push(0, 0, 1.0);
        et.push(0, 1, 1.0);
        let qp = QuadraticProgram::with_equalities(
            g,
            vec![0.0, 0.0],
            a,
            vec![0.0, 0.0],
            et.build(),
            vec![2.0],
        );
        let sol = solve_qp(&qp, &IpmOptions::default()).unwrap();
        assert_eq!(sol.status, IpmStatus::Optimal);
        assert!((sol.iterate.x[0] - 1.0).abs() < 1e-7);
        assert!((sol.iterate.x[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn already_optimal_terminates_without_iterating() {
        // x ≥ 1 with objective pushing to the bound; feed the solver a
        // problem whose start already satisfies everything: min ½x² s.t. x ≥ -1
        // has optimum x*=0 with slack 1, λ*=0 — not strictly attainable, so
        // instead check a 0-iteration exit on a trivially satisfied instance
        let qp = dense_qp(&[&[1.0]], &[0.0], &[&[1.0]], &[-1.0]);
        let sol = solve_qp(&qp, &IpmOptions { tol: 1e-3, ..Default::default() }).unwrap();
        assert_eq!(sol.status, IpmStatus::Optimal);
        // the solver converges toward x=0, λ=0 with slack 1
        assert!(sol.iterate.x[0].abs() < 1e-2);
    }

    #[test]
    fn fixed_point_direction_is_zero() {
        // min ½x² s.t. x ≥ -1 at the perfectly centered point x=1, y=2, λ=1:
        // r_d = x - λ = 0, r_p = x - y + 1 = 0, target σμ = yλ → zero rhs
        let qp = dense_qp(&[&[1.0]], &[0.0], &[&[1.0]], &[-1.0]);
        let it = IpmIterate { x: vec![1.0], y: vec![2.0], lam: vec![1.0], nu: vec![] };
        let zero = NewtonDirection::zeros(1, 1, 0);
        let dir = newton_direction(
            &qp,
            &it,
            NewtonRhs::Corrected { sigma_mu: 2.0, affine: &zero },
            LinearPath::Augmented,
            &IpmOptions::default(),
        )
        .unwrap();
        assert!(dir.dx[0].abs() <= 1e-10);
        assert!(dir.dy[0].abs() <= 1e-10);
        assert!(dir.dlam[0].abs() <= 1e-10);
    }

    #[test]
    fn newton_direction_satisfies_unreduced_system() {
        // 1-variable: min ½x², x ≥ -1, iterate x=1, y=2, λ=0.5; verify the
        // direction against a dense solve of the explicit 3x3 Newton system
        let qp = dense_qp(&[&[1.0]], &[0.0], &[&[1.0]], &[-1.0]);
        let it = IpmIterate { x: vec![1.0], y: vec![2.0], lam: vec![0.5], nu: vec![] };
        let dir = newton_direction(
            &qp,
            &it,
            NewtonRhs::Affine,
            LinearPath::Augmented,
            &IpmOptions::default(),
        )
        .unwrap();
        // unreduced system rows: G dx - Aᵀ dλ = -r_d; A dx - dy = -r_p;
        // Y dλ + Λ dy = -ΛYe
        let r_d = 1.0 * 1.0 - 0.5; // Gx - λ (c=0)
        let r_p = 1.0 - 2.0 + 1.0; // x - y - b
        let r1 = dir.dx[0] - dir.dlam[0] + r_d;
        let r2 = dir.dx[0] - dir.dy[0] + r_p;
        let r3 = 2.0 * dir.dlam[0] + 0.5 * dir.dy[0] + 0.5 * 2.0;
        let rhs_inf = r_d.abs().max(r_p.abs()).max(1.0);
        assert!(r1.abs() <= 1e-8 * (1.0 + rhs_inf), "r1={r1}");
        assert!(r2.abs() <= 1e-8 * (1.0 + rhs_inf), "r2={r2}");
        assert!(r3.abs() <= 1e-8 * (1.0 + rhs_inf), "r3={r3}");
        // cross-check against a dense 3x3 solve
        let kd = [
            [1.0, -1.0, 0.0],  // G, -Aᵀ, 0
            [1.0, 0.0, -1.0],  // A, 0, -I
            [0.0, 2.0, 0.5],   // 0, Y, Λ
        ];
        let rhs = [-r_d, -r_p, -0.5 * 2.0];
        // Cramer for 3x3
        let det = |m: &[[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d0 = det(&kd);
        let mut m1 = kd;
        for i in 0..3 {
            m1[i][0] = rhs[i];
        }
        let mut m2 = kd;
        for i in 0..3 {
            m2[i][1] = rhs[i];
        }
        let mut m3 = kd;
        for i in 0..3 {
            m3[i][2] = rhs[i];
        }
        let want = [det(&m1) / d0, det(&m2) / d0, det(&m3) / d0];
        assert!((dir.dx[0] - want[0]).abs() < 1e-9);
        assert!((dir.dlam[0] - want[1]).abs() < 1e-9);
        assert!((dir.dy[0] - want[2]).abs() < 1e-9);
    }

    #[test]
    fn normal_and_augmented_paths_agree() {
        let qp = dense_qp(
            &[&[2.0, 0.5], &[0.5, 1.5]],
            &[1.0, -2.0],
            &[&[1.0, 1.0], &[1.0, -1.0], &[-1.0, 0.5]],
            &[-1.0, -2.0, -3.0],
        );
        let it = IpmIterate {
            x: vec![0.3, -0.2],
            y: vec![1.0, 2.0, 0.5],
            lam: vec![0.7, 0.4, 1.3],
            nu: vec![],
        };
        let opts = IpmOptions::default();
        let dn =
            newton_direction(&qp, &it, NewtonRhs::Affine, LinearPath::Normal, &opts).unwrap();
        let da =
            newton_direction(&qp, &it, NewtonRhs::Affine, LinearPath::Augmented, &opts).unwrap();
        for i in 0..2 {
            assert!((dn.dx[i] - da.dx[i]).abs() <= 1e-9, "dx[{i}]");
        }
        for i in 0..3 {
            assert!((dn.dy[i] - da.dy[i]).abs() <= 1e-9, "dy[{i}]");
            assert!((dn.dlam[i] - da.dlam[i]).abs() <= 1e-9, "dlam[{i}]");
        }
    }

    #[test]
    fn mehrotra_step_counts_one_factorization_two_solves() {
        let qp = dense_qp(
            &[&[1.0, 0.0], &[0.0, 1.0]],
            &[0.0, 0.0],
            &[&[1.0, 0.0], &[0.0, 1.0]],
            &[1.0, 1.0],
        );
        let sol = solve_qp(&qp, &IpmOptions::default()).unwrap();
        assert!(!sol.trace.is_empty());
        for rec in &sol.trace {
            assert_eq!(rec.factorizations, 1);
            assert_eq!(rec.solves, 2);
        }
    }

    #[test]
    fn infeasible_problem_flagged() {
        // x ≥ 1 and -x ≥ 0 cannot both hold
        let qp = dense_qp(&[&[1.0]], &[0.0], &[&[1.0], &[-1.0]], &[1.0, 0.0]);
        let sol = solve_qp(&qp, &IpmOptions { max_iter: 60, ..Default::default() }).unwrap();
        assert!(
            matches!(sol.status, IpmStatus::InfeasibleSuspect | IpmStatus::MaxIterations),
            "status {:?}",
            sol.status
        );
    }
}
