//! DC network matrices: incidence, branch-flow map B_f, nodal susceptance
//! B_bus (full and reference-reduced), and the dense PTDF matrix.
//!
//! Matrices are per-unit: B_f = X⁻¹C maps angles (rad) to p.u. flows and
//! B_bus = CᵀX⁻¹C to p.u. injections. MW flows are baseMVA·B_f·θ; the
//! formulation builders own that conversion. PTDF is dimensionless either
//! way.

use thiserror::Error;

use crate::case::GridCase;
use crate::dense::DenseMatrix;
use crate::sparse::{
    amd_ordering, symbolic_cholesky, CscMatrix, LdltFactor, PivotRule, SparseError, Triplets,
};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("case is not ready for matrix construction: {0}")]
    InvalidCase(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Sign convention: incidence row k has +1 at the from-bus and -1 at the
/// to-bus; flow is positive from→to.
#[derive(Debug, Clone)]
pub struct DcNetwork {
    /// System MVA base carried along for MW conversions downstream.
    pub base_mva: f64,
    /// |L|×|B| incidence matrix C.
    pub incidence_full: CscMatrix,
    /// |L|×|B| branch-flow map B_f = X⁻¹C (p.u. per rad).
    pub b_f_full: CscMatrix,
    /// |B|×|B| nodal matrix B_bus = CᵀX⁻¹C; row sums are zero.
    pub b_bus_full: CscMatrix,
    /// |L|×(|B|-1): B_f with the reference column deleted.
    pub b_f_red: CscMatrix,
    /// (|B|-1)×(|B|-1): B_bus with the reference row and column deleted; SPD
    /// for a connected network.
    pub b_bus_red: CscMatrix,
    /// Internal index of the reference bus.
    pub ref_bus: usize,
    /// Internal bus index -> position in the reduced system (ref bus absent).
    pub reduced_of_bus: Vec<Option<usize>>,
}

/// Dense PTDF matrix (|L|×|B|); the reference-bus column is identically zero.
#[derive(Debug, Clone)]
pub struct PtdfMatrix {
    pub data: DenseMatrix,
    pub ref_bus: usize,
}

/// Build every DC matrix for a validated, connected case. Out-of-service
/// elements must already be stripped.
pub fn build_network(case: &GridCase) -> Result<DcNetwork, NetworkError> {
    let diags = crate::case::validate(case);
    if !crate::case::is_valid(&diags) {
        let msgs: Vec<String> = diags
            .iter()
            .filter(|d| d.severity == crate::case::Severity::Error)
            .map(|d| d.message.clone())
            .collect();
        return Err(NetworkError::InvalidCase(msgs.join("; ")));
    }
    let (ref_bus, _warned) =
        case.reference_bus().map_err(|e| NetworkError::InvalidCase(e.to_string()))?;
    let index = case.bus_index();
    let n_bus = case.buses.len();
    let n_br = case.branches.len();

    let mut c_t = Triplets::new(n_br, n_bus);
    let mut bf_t = Triplets::new(n_br, n_bus);
    let mut bbus_t = Triplets::new(n_bus, n_bus);
    for (k, br) in case.branches.iter().enumerate() {
        let f = index.internal(br.from_bus).expect("validated endpoint");
        let t = index.internal(br.to_bus).expect("validated endpoint");
        let y = 1.0 / br.x;
        c_t.push(k, f, 1.0);
        c_t.push(k, t, -1.0);
        bf_t.push(k, f, y);
        bf_t.push(k, t, -y);
        bbus_t.push(f, f, y);
        bbus_t.push(t, t, y);
        bbus_t.push(f, t, -y);
        bbus_t.push(t, f, -y);
    }
    let incidence_full = c_t.build();
    let b_f_full = bf_t.build();
    let b_bus_full = bbus_t.build();

    let mut reduced_of_bus = vec![None; n_bus];
    let mut r = 0usize;
    for (b, slot) in reduced_of_bus.iter_mut().enumerate() {
        if b != ref_bus {
            *slot = Some(r);
            r += 1;
        }
    }
    let b_f_red = delete_column(&b_f_full, ref_bus);
    let b_bus_red = delete_row_col(&b_bus_full, ref_bus);

    Ok(DcNetwork {
        base_mva: case.base_mva,
        incidence_full,
        b_f_full,
        b_bus_full,
        b_f_red,
        b_bus_red,
        ref_bus,
        reduced_of_bus,
    })
}

fn delete_column(m: &CscMatrix, col: usize) -> CscMatrix {
    let mut t = Triplets::new(m.nrows(), m.ncols() - 1);
    for j in 0..m.ncols() {
        if j == col {
            continue;
        }
        let jj = if j < col { j } else { j - 1 };
        let (rows, vals) = m.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            t.push(i, jj, v);
        }
    }
    t.build()
}

fn delete_row_col(m: &CscMatrix, k: usize) -> CscMatrix {
    let mut t = Triplets::new(m.nrows() - 1, m.ncols() - 1);
    for j in 0..m.ncols() {
        if j == k {
            continue;
        }
        let jj = if j < k { j } else { j - 1 };
        let (rows, vals) = m.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            if i == k {
                continue;
            }
            let ii = if i < k { i } else { i - 1 };
            t.push(ii, jj, v);
        }
    }
    t.build()
}

impl DcNetwork {
    pub fn n_bus(&self) -> usize {
        self.b_bus_full.ncols()
    }

    pub fn n_branch(&self) -> usize {
        self.b_f_full.nrows()
    }

    /// Factor of the reduced nodal matrix, reusable across many solves.
    pub fn b_bus_factor(&self) -> Result<LdltFactor, SparseError> {
        let perm = amd_ordering(&self.b_bus_red)?;
        let sym = symbolic_cholesky(&self.b_bus_red, &perm)?;
        LdltFactor::factorize(&self.b_bus_red, &sym, PivotRule::modified_spd(), None)
    }

    /// Solve B_bus_red θ_red = p_red.
    pub fn solve_reduced_angles(&self, p_red: &[f64]) -> Result<Vec<f64>, SparseError> {
        let f = self.b_bus_factor()?;
        Ok(f.solve_refined(&self.b_bus_red, p_red, 1e-10))
    }

    /// Reduced injection vector (ref entry dropped) from a full one.
    pub fn reduce_injection(&self, p_full: &[f64]) -> Vec<f64> {
        assert_eq!(p_full.len(), self.n_bus());
        (0..self.n_bus()).filter(|&b| b != self.ref_bus).map(|b| p_full[b]).collect()
    }

    /// Expand reduced angles to a full vector with θ_ref = 0.
    pub fn expand_angles(&self, theta_red: &[f64]) -> Vec<f64> {
        assert_eq!(theta_red.len(), self.n_bus() - 1);
        let mut full = vec![0.0; self.n_bus()];
        for b in 0..self.n_bus() {
            if let Some(r) = self.reduced_of_bus[b] {
                full[b] = theta_red[r];
            }
        }
        full
    }
}

/// f = B_f θ in p.u.; accepts either a full angle vector (θ[ref] pinned to
/// 0) or a reduced one.
pub fn branch_flows(net: &DcNetwork, theta: &[f64]) -> Vec<f64> {
    if theta.len() == net.n_bus() {
        net.b_f_full.matvec(theta)
    } else if theta.len() == net.n_bus() - 1 {
        net.b_f_red.matvec(theta)
    } else {
        panic!(
            "theta has {} entries, expected {} or {}",
            theta.len(),
            net.n_bus(),
            net.n_bus() - 1
        );
    }
}

/// PTDF = B_f·B_bus⁻¹ on the reduced system, solved column-block-wise
/// against a single factorization (no explicit inverse), then widened with
/// a zero reference column.
pub fn compute_ptdf(net: &DcNetwork) -> Result<PtdfMatrix, NetworkError> {
    let n_bus = net.n_bus();
    let n_br = net.n_branch();
    let factor = net.b_bus_factor()?;
    let mut data = DenseMatrix::zeros(n_br, n_bus);
    // row k of PTDF_red solves B_bus_red x = (B_f_red row k)ᵀ; B_bus is
    // symmetric so no transpose juggling is needed
    let bf_t = net.b_f_red.transpose();
    for k in 0..n_br {
        let (rows, vals) = bf_t.col(k);
        let mut rhs = vec![0.0; n_bus - 1];
        for (&r, &v) in rows.iter().zip(vals) {
            rhs[r] = v;
        }
        let x = factor.solve_refined(&net.b_bus_red, &rhs, 1e-10);
        let row = data.row_mut(k);
        for b in 0..n_bus {
            if let Some(r) = net.reduced_of_bus[b] {
                row[b] = x[r];
            }
        }
    }
    Ok(PtdfMatrix { data, ref_bus: net.ref_bus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{two_bus_case, GridCase};
    use crate::sparse::DROP_TOLERANCE;

    fn triangle_case() -> GridCase {
        use crate::case::{Branch, Bus, BusType, Generator, QuadraticCost};
        GridCase {
            base_mva: 1.0,
            buses: vec![
                Bus { id: 1, bus_type: BusType::REF, pd: 0.0 },
                Bus { id: 2, bus_type: BusType::PQ, pd: 0.0 },
                Bus { id: 3, bus_type: BusType::PQ, pd: 0.0 },
            ],
            branches: vec![
                Branch { from_bus: 1, to_bus: 2, x: 1.0, rate_a: 10.0, status: true },
                Branch { from_bus: 2, to_bus: 3, x: 1.0, rate_a: 10.0, status: true },
                Branch { from_bus: 1, to_bus: 3, x: 1.0, rate_a: 10.0, status: true },
            ],
            generators: vec![Generator {
                bus: 1,
                pmin: 0.0,
                pmax: 10.0,
                cost: QuadraticCost { a: 0.1, b: 1.0, c: 0.0 },
                ramp: None,
                status: true,
            }],
        }
    }

    fn load_case39() -> GridCase {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/case39.m"
        ))
        .unwrap();
        crate::case::parse_matpower(&text).unwrap().strip_out_of_service()
    }

    #[test]
    fn two_bus_matrices() {
        let mut case = two_bus_case();
        case.base_mva = 1.0; // keep hand algebra in per-unit
        let net = build_network(&case).unwrap();
        assert_eq!(net.incidence_full.get(0, 0), 1.0);
        assert_eq!(net.incidence_full.get(0, 1), -1.0);
        assert_eq!(net.b_f_full.get(0, 0), 2.0);
        assert_eq!(net.b_f_full.get(0, 1), -2.0);
        assert_eq!(net.b_bus_full.get(0, 0), 2.0);
        assert_eq!(net.b_bus_full.get(0, 1), -2.0);
        assert_eq!(net.b_bus_full.get(1, 1), 2.0);
        assert_eq!(net.ref_bus, 0);
        assert_eq!(net.b_bus_red.nrows(), 1);
        assert_eq!(net.b_bus_red.get(0, 0), 2.0);
    }

    #[test]
    fn triangle_b_bus_against_dense_oracle() {
        let case = triangle_case();
        let net = build_network(&case).unwrap();
        // dense CᵀX⁻¹C oracle
        let c = net.incidence_full.to_dense();
        let mut oracle = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += c.get(k, i) * c.get(k, j); // X = I
                }
                oracle[i][j] = acc;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((net.b_bus_full.get(i, j) - oracle[i][j]).abs() < 1e-14);
            }
        }
        assert_eq!(net.b_bus_full.get(0, 0), 2.0);
        assert_eq!(net.b_bus_full.get(0, 1), -1.0);
    }

    #[test]
    fn two_bus_ptdf_single_path() {
        let mut case = two_bus_case();
        case.base_mva = 1.0;
        let net = build_network(&case).unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        assert_eq!(ptdf.data.get(0, 0), 0.0, "reference column is zero");
        assert!((ptdf.data.get(0, 1) - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn triangle_ptdf_against_dense_inverse_oracle() {
        let case = triangle_case();
        let net = build_network(&case).unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        // reduced system is 2x2: [[2,-1],[-1,2]]; injection at bus 2 (reduced 0)
        // θ_red = B⁻¹ e0 = (2/3, 1/3); flows: b1: θ1-θ2 = -2/3, b2: θ2-θ3 = 1/3, b3: θ1-θ3 = -1/3
        assert!((ptdf.data.get(0, 1) - (-2.0 / 3.0)).abs() < 1e-12);
        assert!((ptdf.data.get(1, 1) - (1.0 / 3.0)).abs() < 1e-12);
        assert!((ptdf.data.get(2, 1) - (-1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn flows_zero_for_zero_angles_and_hand_value() {
        let mut case = two_bus_case();
        case.base_mva = 1.0;
        let net = build_network(&case).unwrap();
        assert_eq!(branch_flows(&net, &[0.0, 0.0]), vec![0.0]);
        let f = branch_flows(&net, &[0.0, -0.5]);
        assert!((f[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ptdf_flow_identity_random_balanced_injections() {
        let case = load_case39();
        let net = build_network(&case).unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        let n = net.n_bus();
        let mut state = 42u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for _ in 0..5 {
            let mut p: Vec<f64> = (0..n).map(|_| 100.0 * next()).collect();
            let sum: f64 = p.iter().sum();
            for v in &mut p {
                *v -= sum / n as f64; // balance
            }
            let f_ptdf = ptdf.data.matvec(&p);
            let p_pu: Vec<f64> = p.iter().map(|v| v / case.base_mva).collect();
            let p_red = net.reduce_injection(&p_pu);
            let theta_red = net.solve_reduced_angles(&p_red).unwrap();
            let f_theta: Vec<f64> =
                branch_flows(&net, &theta_red).iter().map(|f| f * case.base_mva).collect();
            for k in 0..net.n_branch() {
                assert!(
                    (f_ptdf[k] - f_theta[k]).abs() < 1e-9 * (1.0 + f_theta[k].abs()),
                    "branch {k}: {} vs {}",
                    f_ptdf[k],
                    f_theta[k]
                );
            }
        }
    }

    #[test]
    fn case39_reduced_b_bus_is_spd() {
        let case = load_case39();
        let net = build_network(&case).unwrap();
        assert_eq!(net.b_bus_red.nrows(), 38);
        // Cholesky succeeding with a clearly positive smallest pivot is the
        // SPD certificate
        net.b_bus_factor().expect("factorization succeeds");
    }

    #[test]
    fn b_bus_row_sums_vanish() {
        let case = load_case39();
        let net = build_network(&case).unwrap();
        let ones = vec![1.0; net.n_bus()];
        for v in net.b_bus_full.matvec(&ones) {
            assert!(v.abs() <= 1e-12);
        }
    }

    #[test]
    fn ptdf_times_b_bus_recovers_b_f() {
        let case = load_case39();
        let net = build_network(&case).unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        // PTDF_red · B_bus_red = B_f_red, column by column
        let nb = net.n_bus();
        for jr in 0..nb - 1 {
            let mut e = vec![0.0; nb - 1];
            e[jr] = 1.0;
            let col = net.b_bus_red.matvec(&e); // column jr of symmetric B
            // ptdf_red row k · col
            for k in 0..net.n_branch() {
                let mut acc = 0.0;
                for b in 0..nb {
                    if let Some(r) = net.reduced_of_bus[b] {
                        acc += ptdf.data.get(k, b) * col[r];
                    }
                }
                let want = net.b_f_red.get(k, jr);
                assert!((acc - want).abs() < 1e-10 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn case39_ptdf_density_dominates_b_bus() {
        let case = load_case39();
        let net = build_network(&case).unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        let ptdf_density = ptdf.data.count_above(DROP_TOLERANCE) as f64
            / (ptdf.data.nrows() * ptdf.data.ncols()) as f64;
        let b = net.b_bus_red.clone().compressed(DROP_TOLERANCE);
        let b_density = b.nnz() as f64 / (b.nrows() * b.ncols()) as f64;
        assert!(
            ptdf_density >= 5.0 * b_density,
            "ptdf density {ptdf_density} vs b_bus density {b_density}"
        );
    }

    #[test]
    fn disconnected_case_rejected() {
        let mut case = two_bus_case();
        case.branches[0].status = false;
        let case = case.strip_out_of_service();
        let err = build_network(&case).unwrap_err();
        assert!(matches!(err, NetworkError::InvalidCase(ref m) if m.contains("disconnected")));
    }
}
