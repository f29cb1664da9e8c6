use dcopf::sparse::*;

fn main() {
    // random sparse quasi-definite K = [[H, Bᵀ],[B, -D]] at growing sizes
    let mut state = 12345u64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
    };
    for &(np, m) in &[(50usize, 30usize), (200, 150), (400, 380), (800, 700)] {
        let n = np + m;
        let mut t = Triplets::new(n, n);
        // H: SPD-ish sparse
        for i in 0..np {
            t.push(i, i, 4.0);
            for _ in 0..3 {
                let j = ((next().abs() * np as f64) as usize).min(np - 1);
                if j != i {
                    let v = 0.3 * next();
                    t.push(i, j, v);
                    t.push(j, i, v);
                }
            }
        }
        // B coupling: ~4 entries per row
        for r in 0..m {
            for _ in 0..4 {
                let j = ((next().abs() * np as f64) as usize).min(np - 1);
                let v = next();
                t.push(np + r, j, v);
                t.push(j, np + r, v);
            }
            if r % 3 != 0 {
                t.push(np + r, np + r, -(0.5 + next().abs()));
            } // every 3rd row: zero diag (like equality rows)
        }
        let k = t.build();
        let rhs: Vec<f64> = (0..n).map(|i| next() * (1.0 + i as f64 % 7.0)).collect();
        match ldlt_solve(&k, &rhs, Regularization::new(1e-8, 1e-8, np)) {
            Ok((x, resid)) => {
                let ax = k.matvec(&x);
                let err = ax.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
                println!("n={n}: resid={resid:.3e} true_err={err:.3e}");
            }
            Err(e) => println!("n={n}: ERR {e}"),
        }
    }
}
