//! Map an optimal QP solution back to a dispatch, and split nodal totals
//! across colocated generators.

use crate::case::Generator;
use crate::ipm::{IpmSolution, IpmStatus};
use crate::network::DcNetwork;

use super::{DispatchResult, FormulationBundle, FormulationError, FormulationKind, RowTag};

/// Recover dispatch, flows and branch shadow prices from an optimal
/// solution of the bundle's QP.
pub fn recover(
    bundle: &FormulationBundle,
    sol: &IpmSolution,
    net: &DcNetwork,
) -> Result<DispatchResult, FormulationError> {
    if sol.status != IpmStatus::Optimal {
        return Err(FormulationError::NotOptimal(sol.status));
    }
    let vm = &bundle.var_map;
    let periods = bundle.periods();
    let base = bundle.case.base_mva;
    let x = &sol.iterate.x;

    let mut p_g = Vec::with_capacity(periods);
    let mut theta_out: Vec<Vec<f64>> = Vec::with_capacity(periods);
    let mut flows = Vec::with_capacity(periods);
    let index = bundle.case.bus_index();
    let gen_bus: Vec<usize> = bundle
        .case
        .generators
        .iter()
        .map(|g| index.internal(g.bus).expect("bundle case is consistent"))
        .collect();

    for t in 0..periods {
        // angle variables are MW-scaled (θ̂ = baseMVA·θ); unscale here
        let theta_full: Option<Vec<f64>> = match bundle.kind {
            FormulationKind::Ptdf => None,
            FormulationKind::PureTheta => {
                let tb = vm.theta_block(t).unwrap();
                let red: Vec<f64> = x[tb].iter().map(|v| v / base).collect();
                Some(net.expand_angles(&red))
            }
            FormulationKind::Mixed => {
                let tb = vm.theta_block(t).unwrap();
                let mut th: Vec<f64> = x[tb].iter().map(|v| v / base).collect();
                let shift = th[net.ref_bus];
                for v in &mut th {
                    *v -= shift; // pin row leaves ~reg-level residue; normalize
                }
                Some(th)
            }
        };

        let pg_t: Vec<f64> = match bundle.kind {
            FormulationKind::Ptdf | FormulationKind::Mixed => {
                let gb = vm.gen_block(t).unwrap();
                x[gb].to_vec()
            }
            FormulationKind::PureTheta => {
                let th = theta_full.as_ref().unwrap();
                let inj = net.b_bus_full.matvec(th);
                (0..gen_bus.len())
                    .map(|g| base * inj[gen_bus[g]] + bundle.loads[t][gen_bus[g]])
                    .collect()
            }
        };

        let flows_t: Vec<f64> = match bundle.kind {
            FormulationKind::Ptdf => {
                let ptdf = bundle
                    .ptdf
                    .as_ref()
                    .ok_or_else(|| {
                        FormulationError::Contract("bundle lacks its PTDF matrix".into())
                    })?;
                let mut p_bus: Vec<f64> = bundle.loads[t].iter().map(|d| -d).collect();
                for (g, &b) in gen_bus.iter().enumerate() {
                    p_bus[b] += pg_t[g];
                }
                ptdf.data.matvec(&p_bus)
            }
            _ => {
                let th = theta_full.as_ref().unwrap();
                net.b_f_full.matvec(th).iter().map(|f| base * f).collect()
            }
        };

        if let Some(th) = theta_full {
            theta_out.push(th);
        }
        p_g.push(pg_t);
        flows.push(flows_t);
    }

    let mut branch_duals = vec![vec![0.0; net.n_branch()]; periods];
    for (i, tag) in bundle.row_tags.iter().enumerate() {
        match *tag {
            RowTag::FlowUpper { branch, period } => {
                branch_duals[period][branch] += sol.iterate.lam[i];
            }
            RowTag::FlowLower { branch, period } => {
                branch_duals[period][branch] -= sol.iterate.lam[i];
            }
            _ => {}
        }
    }

    Ok(DispatchResult {
        objective: sol.objective + bundle.objective_offset,
        p_g,
        theta: if theta_out.is_empty() { None } else { Some(theta_out) },
        flows,
        branch_duals,
    })
}

/// Split a nodal net injection `p_b` (with local load `p_d`) across the
/// bus's generators: equal marginal cost, clipped to bounds (water-filling
/// on 2aᵢpᵢ+bᵢ).
pub fn disaggregate_nodal(
    p_b: f64,
    p_d: f64,
    gens: &[Generator],
) -> Result<Vec<f64>, FormulationError> {
    let total = p_b + p_d;
    let lo: f64 = gens.iter().map(|g| g.pmin).sum();
    let hi: f64 = gens.iter().map(|g| g.pmax).sum();
    if total < lo - 1e-9 || total > hi + 1e-9 {
        return Err(FormulationError::OutOfBounds { total, lo, hi });
    }
    if gens.len() == 1 {
        return Ok(vec![total.clamp(lo, hi)]);
    }
    if gens.iter().any(|g| g.cost.a <= 0.0) {
        return Err(FormulationError::Contract(
            "water-filling split needs strictly convex member costs".into(),
        ));
    }
    let share = |pi: f64| -> Vec<f64> {
        gens.iter()
            .map(|g| ((pi - g.cost.b) / (2.0 * g.cost.a)).clamp(g.pmin, g.pmax))
            .collect()
    };
    let mut pi_lo = gens
        .iter()
        .map(|g| g.cost.marginal(g.pmin))
        .fold(f64::INFINITY, f64::min);
    let mut pi_hi = gens
        .iter()
        .map(|g| g.cost.marginal(g.pmax))
        .fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let pi = 0.5 * (pi_lo + pi_hi);
        let s: f64 = share(pi).iter().sum();
        if s < total {
            pi_lo = pi;
        } else {
            pi_hi = pi;
        }
    }
    let mut out = share(0.5 * (pi_lo + pi_hi));
    // absorb the bisection residue in members with slack, largest first
    let mut residual = total - out.iter().sum::<f64>();
    for (i, g) in gens.iter().enumerate() {
        if residual.abs() < 1e-12 {
            break;
        }
        let room = if residual > 0.0 { g.pmax - out[i] } else { g.pmin - out[i] };
        let take = if residual > 0.0 { residual.min(room) } else { residual.max(room) };
        out[i] += take;
        residual -= take;
    }
    Ok(out)
}
