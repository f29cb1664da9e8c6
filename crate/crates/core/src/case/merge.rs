//! Colocated-generator merging.
//!
//! Generators sharing a bus are replaced by one aggregate whose cost is the
//! equal-marginal-cost combination: with member marginals 2aᵢp+bᵢ, the
//! aggregate has a = 1/Σ(1/aᵢ), b = a·Σ(bᵢ/aᵢ), c = Σcᵢ. Exact while every
//! member's optimal share is strictly inside its bounds.

use std::collections::BTreeMap;

use super::{CaseError, Generator, GridCase, QuadraticCost};

pub fn merge_colocated_generators(case: &GridCase) -> Result<GridCase, CaseError> {
    let mut by_bus: BTreeMap<usize, Vec<&Generator>> = BTreeMap::new();
    for g in case.generators.iter().filter(|g| g.status) {
        by_bus.entry(g.bus).or_default().push(g);
    }

    let mut merged = Vec::with_capacity(by_bus.len());
    for (&bus, members) in &by_bus {
        if members.len() == 1 {
            merged.push(members[0].clone());
            continue;
        }
        if members.iter().any(|g| g.cost.a <= 0.0) {
            return Err(CaseError::MergeUnsupported { bus });
        }
        let inv_a: f64 = members.iter().map(|g| 1.0 / g.cost.a).sum();
        let b_over_a: f64 = members.iter().map(|g| g.cost.b / g.cost.a).sum();
        let b2_over_a: f64 = members.iter().map(|g| g.cost.b * g.cost.b / g.cost.a).sum();
        let a = 1.0 / inv_a;
        let b = a * b_over_a;
        // constant term of the infimal convolution on the interior region:
        // Σcᵢ alone would shift the aggregate away from the true split cost
        // whenever the members' linear coefficients differ
        let c = members.iter().map(|g| g.cost.c).sum::<f64>()
            + 0.25 * (b_over_a * b_over_a / inv_a - b2_over_a);
        let ramp = members
            .iter()
            .map(|g| g.ramp)
            .try_fold(0.0, |acc, r| r.map(|r| acc + r));
        merged.push(Generator {
            bus,
            pmin: members.iter().map(|g| g.pmin).sum(),
            pmax: members.iter().map(|g| g.pmax).sum(),
            cost: QuadraticCost { a, b, c },
            ramp,
            status: true,
        });
    }

    Ok(GridCase {
        base_mva: case.base_mva,
        buses: case.buses.clone(),
        branches: case.branches.clone(),
        generators: merged,
    })
}
