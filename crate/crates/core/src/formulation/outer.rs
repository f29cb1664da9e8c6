//! Outer approximations: relaxations obtained by deleting branch-limit
//! constraint pairs. The generator-power formulation loses dense rows with
//! every deletion; the mixed formulation keeps its nodal balance rows.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ipm::QuadraticProgram;
use crate::sparse::Triplets;

use super::{DispatchResult, FormulationBundle, FormulationError, RowTag};


#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeletionStrategy {
    /// Uniformly random among branches NOT binding in the base solution.
    Random,
    /// Largest slack margin first; may reach binding branches at high ratios.
    MostUncongested,
}

/// Slack margin of every limited branch: min over periods of
/// min(rate − f, f + rate).
fn slack_margins(bundle: &FormulationBundle, base: &DispatchResult) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for (k, br) in bundle.case.branches.iter().enumerate() {
        if br.rate_a <= 0.0 || bundle.deleted_branches.contains(&k) {
            continue;
        }
        let mut slack = f64::INFINITY;
        for flows_t in &base.flows {
            let f = flows_t[k];
            slack = slack.min(br.rate_a - f).min(f + br.rate_a);
        }
        out.push((k, slack));
    }
    out
}

/// Remove ⌊ratio·|limited branches|⌋ branch-limit constraint pairs.
pub fn outer_approximation(
    bundle: &FormulationBundle,
    base: &DispatchResult,
    strategy: DeletionStrategy,
    ratio: f64,
    seed: u64,
) -> Result<FormulationBundle, FormulationError> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(FormulationError::BadConfig(format!(
            "deletion ratio {ratio} outside [0, 1]"
        )));
    }
    let margins = slack_margins(bundle, base);
    let count = (ratio * margins.len() as f64).floor() as usize;
    if count == 0 {
        return Ok(bundle.clone());
    }

    let mut chosen: Vec<usize> = match strategy {
        DeletionStrategy::Random => {
            let binding_tol = |k: usize| 1e-6 * (1.0 + bundle.case.branches[k].rate_a);
            let mut candidates: Vec<usize> = margins
                .iter()
                .filter(|&&(k, s)| s > binding_tol(k))
                .map(|&(k, _)| k)
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            candidates.shuffle(&mut rng);
            candidates.truncate(count);
            candidates
        }
        DeletionStrategy::MostUncongested => {
            let mut sorted = margins.clone();
            sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            sorted.into_iter().take(count).map(|(k, _)| k).collect()
        }
    };
    chosen.sort_unstable();

    let is_deleted = |tag: &RowTag| match tag {
        RowTag::FlowUpper { branch, .. } | RowTag::FlowLower { branch, .. } => {
            chosen.binary_search(branch).is_ok()
        }
        _ => false,
    };

    let qp = &bundle.qp;
    let keep: Vec<usize> =
        (0..qp.m_ineq()).filter(|&i| !is_deleted(&bundle.row_tags[i])).collect();
    let at = qp.a.transpose();
    let mut a_t = Triplets::new(keep.len(), qp.n());
    let mut b = Vec::with_capacity(keep.len());
    let mut tags = Vec::with_capacity(keep.len());
    let mut names = Vec::with_capacity(keep.len());
    for (new_i, &old_i) in keep.iter().enumerate() {
        let (cols, vals) = at.col(old_i);
        for (&j, &v) in cols.iter().zip(vals) {
            a_t.push(new_i, j, v);
        }
        b.push(qp.b[old_i]);
        tags.push(bundle.row_tags[old_i]);
        names.push(qp.ineq_names.get(old_i).cloned().unwrap_or_default());
    }

    let mut new_qp = QuadraticProgram::with_equalities(
        qp.g.clone(),
        qp.c.clone(),
        a_t.build(),
        b,
        qp.e.clone(),
        qp.h.clone(),
    );
    new_qp.var_names = qp.var_names.clone();
    new_qp.ineq_names = names;
    new_qp.eq_names = qp.eq_names.clone();
    new_qp.var_blocks = qp.var_blocks.clone();

    let mut deleted = bundle.deleted_branches.clone();
    deleted.extend(&chosen);
    deleted.sort_unstable();
    deleted.dedup();

    Ok(FormulationBundle {
        qp: new_qp,
        kind: bundle.kind,
        var_map: bundle.var_map.clone(),
        row_tags: tags,
        eq_tags: bundle.eq_tags.clone(),
        case: bundle.case.clone(),
        loads: bundle.loads.clone(),
        ramps: bundle.ramps.clone(),
        objective_offset: bundle.objective_offset,
        ptdf: bundle.ptdf.clone(),
        deleted_branches: deleted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::parse_matpower;
    use crate::formulation::{build_opf, recover, FormulationKind};
    use crate::ipm::{solve_qp, IpmOptions, IpmStatus};
    use crate::network::{build_network, compute_ptdf};

    fn case39_bundles() -> (FormulationBundle, DispatchResult) {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/case39.m"
        ))
        .unwrap();
        let case = parse_matpower(&text).unwrap().strip_out_of_service();
        let net = build_network(&case).unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        let bundle = build_opf(&case, &net, Some(&ptdf), FormulationKind::Mixed).unwrap();
        let sol = solve_qp(&bundle.qp, &IpmOptions::default()).unwrap();
        assert_eq!(sol.status, IpmStatus::Optimal);
        let base = recover(&bundle, &sol, &net).unwrap();
        (bundle, base)
    }

    #[test]
    fn ratio_zero_is_identity() {
        let (bundle, base) = case39_bundles();
        let outer =
            outer_approximation(&bundle, &base, DeletionStrategy::Random, 0.0, 1).unwrap();
        assert_eq!(outer.qp.m_ineq(), bundle.qp.m_ineq());
        assert!(outer.deleted_branches.is_empty());
    }

    #[test]
    fn ratio_out_of_range_rejected() {
        let (bundle, base) = case39_bundles();
        assert!(matches!(
            outer_approximation(&bundle, &base, DeletionStrategy::Random, 1.5, 1),
            Err(FormulationError::BadConfig(_))
        ));
    }

    #[test]
    fn full_deletion_keeps_balance_rows() {
        let (bundle, base) = case39_bundles();
        let outer =
            outer_approximation(&bundle, &base, DeletionStrategy::MostUncongested, 1.0, 1)
                .unwrap();
        // all flow rows gone, generator bounds remain
        assert!(outer
            .row_tags
            .iter()
            .all(|t| !matches!(t, RowTag::FlowUpper { .. } | RowTag::FlowLower { .. })));
        // the mixed formulation keeps its |B| nodal balance rows
        assert_eq!(outer.qp.m_eq(), bundle.qp.m_eq());
        assert_eq!(
            outer
                .eq_tags
                .iter()
                .filter(|t| matches!(t, RowTag::Balance { .. }))
                .count(),
            39
        );
    }

    #[test]
    fn relaxation_never_increases_objective() {
        let (bundle, base) = case39_bundles();
        let net = {
            let case = bundle.case.clone();
            crate::network::build_network(&case).unwrap()
        };
        let full_obj = base.objective;
        for &ratio in &[0.25, 0.5, 0.9] {
            let outer =
                outer_approximation(&bundle, &base, DeletionStrategy::Random, ratio, 7).unwrap();
            let sol = solve_qp(&outer.qp, &IpmOptions::default()).unwrap();
            assert_eq!(sol.status, IpmStatus::Optimal);
            let d = recover(&outer, &sol, &net).unwrap();
            assert!(
                d.objective <= full_obj + 1e-8 * (1.0 + full_obj.abs()),
                "ratio {ratio}: {} vs {full_obj}",
                d.objective
            );
        }
    }

    #[test]
    fn deleting_inactive_constraints_preserves_objective() {
        let (bundle, base) = case39_bundles();
        let net = crate::network::build_network(&bundle.case).unwrap();
        // random strategy only deletes branches away from their limits
        let outer =
            outer_approximation(&bundle, &base, DeletionStrategy::Random, 0.5, 3).unwrap();
        let sol = solve_qp(&outer.qp, &IpmOptions::default()).unwrap();
        let d = recover(&outer, &sol, &net).unwrap();
        assert!(
            (d.objective - base.objective).abs() <= 1e-6 * (1.0 + base.objective.abs()),
            "{} vs {}",
            d.objective,
            base.objective
        );
    }

    #[test]
    fn deletion_is_seed_deterministic() {
        let (bundle, base) = case39_bundles();
        let a = outer_approximation(&bundle, &base, DeletionStrategy::Random, 0.5, 42).unwrap();
        let b = outer_approximation(&bundle, &base, DeletionStrategy::Random, 0.5, 42).unwrap();
        assert_eq!(a.deleted_branches, b.deleted_branches);
        let c = outer_approximation(&bundle, &base, DeletionStrategy::Random, 0.5, 43).unwrap();
        assert_ne!(a.deleted_branches, c.deleted_branches);
    }
}
