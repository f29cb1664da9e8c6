//! Formulation builders: single-period OPF, multi-period SCED, and the
//! nodal-injection QP used by the transformed-Newton verification.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::case::GridCase;
use crate::ipm::QuadraticProgram;
use crate::network::{DcNetwork, PtdfMatrix};
use crate::sparse::{CscMatrix, Triplets, DROP_TOLERANCE};

use super::{
    FormulationBundle, FormulationError, FormulationKind, RowTag, ScedConfig, VarMap,
};

/// Nodal cost mapping of the pure voltage angle formulation: with
/// generator cost a·p²+b·p+c and local load p_d, the cost in terms of the
/// injection p_b = p_g − p_d is a_b = a, b_b = b + 2a·p_d,
/// c_b = c + b·p_d + a·p_d².
pub(crate) fn nodal_cost_map(cost: &crate::case::QuadraticCost, pd: f64) -> crate::case::QuadraticCost {
    crate::case::QuadraticCost {
        a: cost.a,
        b: cost.b + 2.0 * cost.a * pd,
        c: cost.c + cost.b * pd + cost.a * pd * pd,
    }
}

/// Single-period OPF (Eqs. of the three formulation families).
pub fn build_opf(
    case: &GridCase,
    net: &DcNetwork,
    ptdf: Option<&PtdfMatrix>,
    kind: FormulationKind,
) -> Result<FormulationBundle, FormulationError> {
    let loads = vec![case.buses.iter().map(|b| b.pd).collect::<Vec<f64>>()];
    let ramps = vec![0.0; 0];
    build_multi(case, net, ptdf, kind, loads, ramps)
}

/// Multi-period SCED: per-period OPF blocks coupled by generator ramp
/// limits, with per-(bus, period) load scaling drawn from the seeded
/// generator (period-major, bus-minor draw order).
pub fn build_sced(
    case: &GridCase,
    net: &DcNetwork,
    ptdf: Option<&PtdfMatrix>,
    kind: FormulationKind,
    cfg: &ScedConfig,
) -> Result<FormulationBundle, FormulationError> {
    if cfg.periods < 1 {
        return Err(FormulationError::BadConfig("periods must be ≥ 1".into()));
    }
    let (lo, hi) = cfg.load_scale_range;
    if lo > hi {
        return Err(FormulationError::BadConfig(format!(
            "load scale range ({lo}, {hi}) has low > high"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut loads = Vec::with_capacity(cfg.periods);
    for _t in 0..cfg.periods {
        let mut row = Vec::with_capacity(case.buses.len());
        for bus in &case.buses {
            let scale = if lo == hi { lo } else { rng.random_range(lo..hi) };
            row.push(bus.pd * scale);
        }
        loads.push(row);
    }
    let ramps: Vec<f64> = case
        .generators
        .iter()
        .map(|g| cfg.ramp_override.unwrap_or_else(|| g.ramp.unwrap_or(cfg.ramp_frac * g.pmax)))
        .collect();
    build_multi(case, net, ptdf, kind, loads, ramps)
}

struct Layout<'a> {
    net: &'a DcNetwork,
    kind: FormulationKind,
    periods: usize,
    n_gen: usize,
    n_bus: usize,
    /// internal bus index of each generator
    gen_bus: Vec<usize>,
    /// generator index at each bus, when unique
    gen_at_bus: Vec<Option<usize>>,
    /// limited-branch indices
    limited: Vec<usize>,
    /// B_f rows as columns (transposed once)
    bf_full_t: CscMatrix,
    bf_red_t: CscMatrix,
    bbus_full_t: CscMatrix,
}

impl<'a> Layout<'a> {
    fn new(
        case: &'a GridCase,
        net: &'a DcNetwork,
        kind: FormulationKind,
        periods: usize,
    ) -> Result<Self, FormulationError> {
        if case.branches.len() != net.n_branch() || case.buses.len() != net.n_bus() {
            return Err(FormulationError::Contract(
                "case and network disagree on element counts (was the case stripped?)".into(),
            ));
        }
        if case.generators.iter().any(|g| !g.status)
            || case.branches.iter().any(|b| !b.status)
        {
            return Err(FormulationError::Contract(
                "out-of-service elements present; strip the case before building".into(),
            ));
        }
        let index = case.bus_index();
        let gen_bus: Vec<usize> = case
            .generators
            .iter()
            .map(|g| {
                index.internal(g.bus).ok_or_else(|| {
                    FormulationError::Contract(format!("generator at unknown bus {}", g.bus))
                })
            })
            .collect::<Result<_, _>>()?;
        let mut gen_at_bus = vec![None; case.buses.len()];
        let mut multi_gen_bus = None;
        for (g, &b) in gen_bus.iter().enumerate() {
            if gen_at_bus[b].is_some() {
                multi_gen_bus = Some(case.buses[b].id);
            }
            gen_at_bus[b] = Some(g);
        }
        if kind == FormulationKind::PureTheta {
            if let Some(bus) = multi_gen_bus {
                return Err(FormulationError::Contract(format!(
                    "bus {bus} hosts multiple generators; run merge_colocated_generators first"
                )));
            }
        }
        let limited: Vec<usize> = (0..case.branches.len())
            .filter(|&k| case.branches[k].rate_a > 0.0)
            .collect();
        Ok(Self {
            net,
            kind,
            periods,
            n_gen: case.generators.len(),
            n_bus: case.buses.len(),
            gen_bus,
            gen_at_bus,
            limited,
            bf_full_t: net.b_f_full.transpose(),
            bf_red_t: net.b_f_red.transpose(),
            bbus_full_t: net.b_bus_full.transpose(),
        })
    }

    fn var_map(&self) -> VarMap {
        VarMap { kind: self.kind, n_gen: self.n_gen, n_bus: self.n_bus, periods: self.periods }
    }

    /// MW injection row of bus b over the reduced angle block of period t:
    /// entries (column, coefficient). Angle variables are MW-scaled
    /// (θ̂ = baseMVA·θ), so the per-unit B_bus row maps them to MW directly
    /// and constraint coefficients stay O(1/x).
    fn injection_row_reduced(&self, b: usize, t: usize) -> Vec<(usize, f64)> {
        let theta = self.var_map().theta_block(t).expect("theta kind");
        let (cols, vals) = self.bbus_full_t.col(b); // row b of symmetric B_bus
        let mut out = Vec::with_capacity(cols.len());
        for (&j, &v) in cols.iter().zip(vals) {
            if let Some(r) = self.net.reduced_of_bus[j] {
                out.push((theta.start + r, v));
            }
        }
        out
    }
}

fn build_multi(
    case: &GridCase,
    net: &DcNetwork,
    ptdf: Option<&PtdfMatrix>,
    kind: FormulationKind,
    loads: Vec<Vec<f64>>,
    ramps: Vec<f64>,
) -> Result<FormulationBundle, FormulationError> {
    let periods = loads.len();
    let lay = Layout::new(case, net, kind, periods)?;
    let vm = lay.var_map();
    let n = vm.per_period() * periods;

    if kind == FormulationKind::Ptdf && ptdf.is_none() {
        return Err(FormulationError::Contract(
            "the generator-power formulation requires the PTDF matrix".into(),
        ));
    }

    let mut g_t = Triplets::new(n, n);
    let mut c = vec![0.0; n];
    let mut offset = 0.0;
    let mut a_rows: Vec<(Vec<(usize, f64)>, f64, RowTag)> = Vec::new();
    let mut e_rows: Vec<(Vec<(usize, f64)>, f64, RowTag)> = Vec::new();
    let mut var_names = vec![String::new(); n];

    for t in 0..periods {
        let pd = &loads[t];

        // cost + variable names
        match kind {
            FormulationKind::Ptdf | FormulationKind::Mixed => {
                let gb = vm.gen_block(t).unwrap();
                for (g, gen) in case.generators.iter().enumerate() {
                    let col = gb.start + g;
                    g_t.push(col, col, 2.0 * gen.cost.a);
                    c[col] += gen.cost.b;
                    offset += gen.cost.c;
                    var_names[col] = format!("pg[g{g},t{t}]");
                }
                if let Some(tb) = vm.theta_block(t) {
                    for (b, col) in tb.enumerate() {
                        var_names[col] = format!("theta[b{b},t{t}]");
                    }
                }
            }
            FormulationKind::PureTheta => {
                let tb = vm.theta_block(t).unwrap();
                for (r, col) in tb.clone().enumerate() {
                    var_names[col] = format!("theta[r{r},t{t}]");
                }
                for b in 0..lay.n_bus {
                    let Some(g) = lay.gen_at_bus[b] else { continue };
                    let nodal = nodal_cost_map(&case.generators[g].cost, pd[b]);
                    let row = lay.injection_row_reduced(b, t);
                    offset += nodal.c;
                    for &(i, vi) in &row {
                        c[i] += nodal.b * vi;
                        for &(j, vj) in &row {
                            if nodal.a != 0.0 {
                                g_t.push(i, j, 2.0 * nodal.a * vi * vj);
                            }
                        }
                    }
                }
            }
        }

        // flow rows: all uppers then all lowers, limited branches only
        let flow_row = |k: usize| -> (Vec<(usize, f64)>, f64) {
            // returns (coefficients of the MW flow expression, load shift d_k)
            match kind {
                FormulationKind::Ptdf => {
                    let p = ptdf.unwrap();
                    let gb = vm.gen_block(t).unwrap();
                    let mut row = Vec::new();
                    for (g, &b) in lay.gen_bus.iter().enumerate() {
                        let w = p.data.get(k, b);
                        if w.abs() > DROP_TOLERANCE {
                            row.push((gb.start + g, w));
                        }
                    }
                    let d_k: f64 =
                        (0..lay.n_bus).map(|b| p.data.get(k, b) * pd[b]).sum();
                    (row, d_k)
                }
                FormulationKind::PureTheta => {
                    let tb = vm.theta_block(t).unwrap();
                    let (cols, vals) = lay.bf_red_t.col(k);
                    let row =
                        cols.iter().zip(vals).map(|(&j, &v)| (tb.start + j, v)).collect();
                    (row, 0.0)
                }
                FormulationKind::Mixed => {
                    let tb = vm.theta_block(t).unwrap();
                    let (cols, vals) = lay.bf_full_t.col(k);
                    let row =
                        cols.iter().zip(vals).map(|(&j, &v)| (tb.start + j, v)).collect();
                    (row, 0.0)
                }
            }
        };
        for &k in &lay.limited {
            let rate = case.branches[k].rate_a;
            let (row, d_k) = flow_row(k);
            let neg: Vec<(usize, f64)> = row.iter().map(|&(j, v)| (j, -v)).collect();
            a_rows.push((neg, -rate - d_k, RowTag::FlowUpper { branch: k, period: t }));
        }
        for &k in &lay.limited {
            let rate = case.branches[k].rate_a;
            let (row, d_k) = flow_row(k);
            a_rows.push((row, -rate + d_k, RowTag::FlowLower { branch: k, period: t }));
        }

        // bound rows
        match kind {
            FormulationKind::Ptdf | FormulationKind::Mixed => {
                let gb = vm.gen_block(t).unwrap();
                for (g, gen) in case.generators.iter().enumerate() {
                    let col = gb.start + g;
                    a_rows.push((
                        vec![(col, -1.0)],
                        -gen.pmax,
                        RowTag::GenUpper { gen: g, period: t },
                    ));
                }
                for (g, gen) in case.generators.iter().enumerate() {
                    let col = gb.start + g;
                    a_rows.push((
                        vec![(col, 1.0)],
                        gen.pmin,
                        RowTag::GenLower { gen: g, period: t },
                    ));
                }
            }
            FormulationKind::PureTheta => {
                for b in 0..lay.n_bus {
                    let row = lay.injection_row_reduced(b, t);
                    let ub = match lay.gen_at_bus[b] {
                        Some(g) => case.generators[g].pmax - pd[b],
                        None => -pd[b],
                    };
                    let neg: Vec<(usize, f64)> = row.iter().map(|&(j, v)| (j, -v)).collect();
                    a_rows.push((neg, -ub, RowTag::InjUpper { bus: b, period: t }));
                }
                for b in 0..lay.n_bus {
                    let row = lay.injection_row_reduced(b, t);
                    let lb = match lay.gen_at_bus[b] {
                        Some(g) => case.generators[g].pmin - pd[b],
                        None => -pd[b],
                    };
                    a_rows.push((row, lb, RowTag::InjLower { bus: b, period: t }));
                }
            }
        }

        // ramp coupling to the previous period
        if t > 0 {
            match kind {
                FormulationKind::Ptdf | FormulationKind::Mixed => {
                    let gb = vm.gen_block(t).unwrap();
                    let gb_prev = vm.gen_block(t - 1).unwrap();
                    for g in 0..lay.n_gen {
                        let r = ramps[g];
                        a_rows.push((
                            vec![(gb.start + g, -1.0), (gb_prev.start + g, 1.0)],
                            -r,
                            RowTag::RampUp { gen: g, period: t },
                        ));
                        a_rows.push((
                            vec![(gb.start + g, 1.0), (gb_prev.start + g, -1.0)],
                            -r,
                            RowTag::RampDown { gen: g, period: t },
                        ));
                    }
                }
                FormulationKind::PureTheta => {
                    for b in 0..lay.n_bus {
                        let Some(g) = lay.gen_at_bus[b] else { continue };
                        let r = ramps[g];
                        let dpd = loads[t][b] - loads[t - 1][b];
                        let row_t = lay.injection_row_reduced(b, t);
                        let row_p = lay.injection_row_reduced(b, t - 1);
                        let mut up: Vec<(usize, f64)> =
                            row_t.iter().map(|&(j, v)| (j, -v)).collect();
                        up.extend(row_p.iter().copied());
                        a_rows.push((up, -r + dpd, RowTag::RampUp { gen: g, period: t }));
                        let mut down = row_t.clone();
                        down.extend(row_p.iter().map(|&(j, v)| (j, -v)));
                        a_rows.push((down, -r - dpd, RowTag::RampDown { gen: g, period: t }));
                    }
                }
            }
        }

        // equality rows
        match kind {
            FormulationKind::Ptdf => {
                let gb = vm.gen_block(t).unwrap();
                let row: Vec<(usize, f64)> = (0..lay.n_gen).map(|g| (gb.start + g, 1.0)).collect();
                let total: f64 = pd.iter().sum();
                e_rows.push((row, total, RowTag::SystemBalance { period: t }));
            }
            FormulationKind::Mixed => {
                let gb = vm.gen_block(t).unwrap();
                let tb = vm.theta_block(t).unwrap();
                for b in 0..lay.n_bus {
                    let mut row: Vec<(usize, f64)> = Vec::new();
                    for (g, &gbus) in lay.gen_bus.iter().enumerate() {
                        if gbus == b {
                            row.push((gb.start + g, 1.0));
                        }
                    }
                    let (cols, vals) = lay.bbus_full_t.col(b);
                    for (&j, &v) in cols.iter().zip(vals) {
                        row.push((tb.start + j, -v));
                    }
                    e_rows.push((row, pd[b], RowTag::Balance { bus: b, period: t }));
                }
                e_rows.push((
                    vec![(tb.start + net.ref_bus, 1.0)],
                    0.0,
                    RowTag::RefPin { period: t },
                ));
            }
            FormulationKind::PureTheta => {}
        }
    }

    // assemble
    let m = a_rows.len();
    let p = e_rows.len();
    let mut a_t = Triplets::new(m, n);
    let mut b_vec = Vec::with_capacity(m);
    let mut row_tags = Vec::with_capacity(m);
    let mut ineq_names = Vec::with_capacity(m);
    for (i, (row, rhs, tag)) in a_rows.into_iter().enumerate() {
        for (j, v) in row {
            if v != 0.0 {
                a_t.push(i, j, v);
            }
        }
        b_vec.push(rhs);
        ineq_names.push(format!("{tag:?}"));
        row_tags.push(tag);
    }
    let mut e_t = Triplets::new(p, n);
    let mut h_vec = Vec::with_capacity(p);
    let mut eq_tags = Vec::with_capacity(p);
    let mut eq_names = Vec::with_capacity(p);
    for (i, (row, rhs, tag)) in e_rows.into_iter().enumerate() {
        for (j, v) in row {
            if v != 0.0 {
                e_t.push(i, j, v);
            }
        }
        h_vec.push(rhs);
        eq_names.push(format!("{tag:?}"));
        eq_tags.push(tag);
    }

    let mut qp =
        QuadraticProgram::with_equalities(g_t.build(), c, a_t.build(), b_vec, e_t.build(), h_vec);
    qp.var_names = var_names;
    qp.ineq_names = ineq_names;
    qp.eq_names = eq_names;

    Ok(FormulationBundle {
        qp,
        kind,
        var_map: vm,
        row_tags,
        eq_tags,
        case: case.clone(),
        loads,
        ramps,
        objective_offset: offset,
        ptdf: if kind == FormulationKind::Ptdf { ptdf.cloned() } else { None },
        deleted_branches: Vec::new(),
    })
}

/// The PTDF-based problem written over nodal injections (the additional
/// decision block x_aux is empty): dense PTDF flow rows, per-bus injection
/// bounds, and the nodal cost mapping a_b = a_g, b_b = b_g + 2a_g·p_d.
/// The variable block is labeled "p_bus" for the transformed-Newton solve.
pub fn build_ptdf_injection_qp(
    case: &GridCase,
    net: &DcNetwork,
    ptdf: &PtdfMatrix,
) -> Result<QuadraticProgram, FormulationError> {
    let lay = Layout::new(case, net, FormulationKind::PureTheta, 1)?; // reuse the 1-gen/bus check
    let nb = lay.n_bus;
    let n = nb - 1;
    let mut g_t = Triplets::new(n, n);
    let mut c = vec![0.0; n];
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();

    for &k in &lay.limited {
        let rate = case.branches[k].rate_a;
        let mut row = Vec::new();
        for b in 0..nb {
            if let Some(r) = net.reduced_of_bus[b] {
                let w = ptdf.data.get(k, b);
                if w.abs() > DROP_TOLERANCE {
                    row.push((r, w));
                }
            }
        }
        let neg: Vec<(usize, f64)> = row.iter().map(|&(j, v)| (j, -v)).collect();
        rows.push((neg, -rate));
        rows.push((row, -rate));
    }
    for b in 0..nb {
        let Some(r) = net.reduced_of_bus[b] else { continue };
        let pd = case.buses[b].pd;
        let (lb, ub) = match lay.gen_at_bus[b] {
            Some(g) => {
                let gen = &case.generators[g];
                let nodal = nodal_cost_map(&gen.cost, pd);
                g_t.push(r, r, 2.0 * nodal.a);
                c[r] = nodal.b;
                (gen.pmin - pd, gen.pmax - pd)
            }
            None => (-pd, -pd),
        };
        rows.push((vec![(r, -1.0)], -ub));
        rows.push((vec![(r, 1.0)], lb));
    }

    let m = rows.len();
    let mut a_t = Triplets::new(m, n);
    let mut b_vec = Vec::with_capacity(m);
    for (i, (row, rhs)) in rows.into_iter().enumerate() {
        for (j, v) in row {
            a_t.push(i, j, v);
        }
        b_vec.push(rhs);
    }
    let mut qp = QuadraticProgram::new(g_t.build(), c, a_t.build(), b_vec);
    qp.var_blocks.push(("p_bus".to_string(), 0..n));
    Ok(qp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{parse_matpower, Branch, Bus, BusType, Generator, GridCase, QuadraticCost};
    use crate::formulation::{recover, FormulationKind};
    use crate::ipm::{solve_qp, IpmOptions, IpmStatus};
    use crate::network::{build_network, compute_ptdf};

    fn load_case39() -> GridCase {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/case39.m"
        ))
        .unwrap();
        parse_matpower(&text).unwrap().strip_out_of_service()
    }

    fn one_bus_case() -> GridCase {
        GridCase {
            base_mva: 100.0,
            buses: vec![Bus { id: 1, bus_type: BusType::REF, pd: 0.0 }],
            branches: vec![],
            generators: vec![Generator {
                bus: 1,
                pmin: 0.0,
                pmax: 50.0,
                cost: QuadraticCost { a: 0.1, b: 2.0, c: 7.0 },
                ramp: None,
                status: true,
            }],
        }
    }

    #[test]
    fn eq17_coefficient_mapping() {
        let got = nodal_cost_map(&QuadraticCost { a: 0.1, b: 5.0, c: 2.0 }, 10.0);
        assert_eq!(got.a, 0.1);
        assert_eq!(got.b, 7.0);
        assert_eq!(got.c, 62.0);
    }

    #[test]
    fn case39_structural_counts() {
        let case = load_case39();
        let net = build_network(&case).unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        for kind in FormulationKind::all() {
            let b = build_opf(&case, &net, Some(&ptdf), kind).unwrap();
            let (vars, cons) = b.table_counts();
            match kind {
                FormulationKind::Ptdf => {
                    assert_eq!((vars, cons), (10, 112));
                    assert_eq!(b.qp.m_eq(), 1, "one system balance row");
                }
                FormulationKind::PureTheta => {
                    assert_eq!((vars, cons), (39, 170));
                    assert_eq!(b.qp.n(), 38, "reduced angles internally");
                    assert_eq!(b.qp.m_eq(), 0);
                }
                FormulationKind::Mixed => {
                    assert_eq!((vars, cons), (49, 151));
                    assert_eq!(b.qp.m_eq(), 40, "39 balance rows + reference pin");
                }
            }
        }
    }

    #[test]
    fn one_bus_all_kinds_reduce_to_same_scalar_qp() {
        let case = one_bus_case();
        let net = build_network(&case).unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        let mut objectives = Vec::new();
        for kind in FormulationKind::all() {
            let b = build_opf(&case, &net, Some(&ptdf), kind).unwrap();
            let sol = solve_qp(&b.qp, &IpmOptions::default()).unwrap();
            assert_eq!(sol.status, IpmStatus::Optimal, "{kind:?}");
            let d = recover(&b, &sol, &net).unwrap();
            objectives.push(d.objective);
        }
        // zero load, pmin 0, increasing cost: p = 0, objective = c = 7
        for o in &objectives {
            assert!((o - 7.0).abs() < 1e-6, "objective {o}");
        }
    }

    #[test]
    fn sced_single_period_unit_scale_matches_opf() {
        let case = load_case39();
        let net = build_network(&case).unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        let cfg = ScedConfig {
            periods: 1,
            load_scale_range: (1.0, 1.0),
            seed: 7,
            ..Default::default()
        };
        let opf = build_opf(&case, &net, Some(&ptdf), FormulationKind::Mixed).unwrap();
        let sced = build_sced(&case, &net, Some(&ptdf), FormulationKind::Mixed, &cfg).unwrap();
        let o1 = solve_qp(&opf.qp, &IpmOptions::default()).unwrap();
        let o2 = solve_qp(&sced.qp, &IpmOptions::default()).unwrap();
        let d1 = recover(&opf, &o1, &net).unwrap();
        let d2 = recover(&sced, &o2, &net).unwrap();
        assert!((d1.objective - d2.objective).abs() <= 1e-9 * (1.0 + d1.objective.abs()));
    }

    #[test]
    fn sced_two_period_ramp_bound() {
        // single bus, loads pinned by balance; ramp 5 between loads 10→30 is
        // infeasible, 25→30 is feasible and binds the ramp
        let mut case = one_bus_case();
        case.buses[0].pd = 1.0; // overwritten by explicit loads below
        let net = build_network(&case).unwrap();
        let infeasible = build_multi(
            &case,
            &net,
            None,
            FormulationKind::Mixed,
            vec![vec![10.0], vec![30.0]],
            vec![5.0],
        )
        .unwrap();
        let sol = solve_qp(&infeasible.qp, &IpmOptions::default()).unwrap();
        assert_ne!(sol.status, IpmStatus::Optimal);

        let feasible = build_multi(
            &case,
            &net,
            None,
            FormulationKind::Mixed,
            vec![vec![25.0], vec![30.0]],
            vec![5.0],
        )
        .unwrap();
        let sol = solve_qp(&feasible.qp, &IpmOptions::default()).unwrap();
        assert_eq!(sol.status, IpmStatus::Optimal);
        let d = recover(&feasible, &sol, &net).unwrap();
        assert!((d.p_g[0][0] - 25.0).abs() < 1e-6);
        assert!((d.p_g[1][0] - 30.0).abs() < 1e-6);
    }

    #[test]
    fn sced_scale_factors_inside_range_and_deterministic() {
        let case = load_case39();
        let net = build_network(&case).unwrap();
        let cfg = ScedConfig { periods: 24, seed: 11, ..Default::default() };
        let b1 = build_sced(&case, &net, None, FormulationKind::Mixed, &cfg).unwrap();
        let b2 = build_sced(&case, &net, None, FormulationKind::Mixed, &cfg).unwrap();
        assert_eq!(b1.loads, b2.loads, "same seed, same loads, bit-exact");
        for t in 0..24 {
            for (b, bus) in case.buses.iter().enumerate() {
                let l = b1.loads[t][b];
                assert!(l >= 0.95 * bus.pd - 1e-12 && l <= 1.05 * bus.pd + 1e-12);
            }
        }
        let other = build_sced(
            &case,
            &net,
            None,
            FormulationKind::Mixed,
            &ScedConfig { periods: 24, seed: 12, ..Default::default() },
        )
        .unwrap();
        assert_ne!(b1.loads, other.loads, "different seed, different loads");
    }

    #[test]
    fn pure_theta_rejects_multiple_generators_per_bus() {
        let mut case = load_case39();
        let extra = case.generators[0].clone();
        case.generators.push(extra);
        let net = build_network(&case).unwrap();
        let err = build_opf(&case, &net, None, FormulationKind::PureTheta).unwrap_err();
        assert!(matches!(err, FormulationError::Contract(ref m) if m.contains("merge")));
    }

    #[test]
    fn ptdf_kind_requires_matrix() {
        let case = load_case39();
        let net = build_network(&case).unwrap();
        let err = build_opf(&case, &net, None, FormulationKind::Ptdf).unwrap_err();
        assert!(matches!(err, FormulationError::Contract(_)));
    }

    #[test]
    fn injection_qp_has_p_bus_block() {
        let case = load_case39();
        let net = build_network(&case).unwrap();
        let ptdf = compute_ptdf(&net).unwrap();
        let qp = build_ptdf_injection_qp(&case, &net, &ptdf).unwrap();
        assert_eq!(qp.block("p_bus"), Some(0..38));
        assert_eq!(qp.m_ineq(), 2 * 46 + 2 * 38);
        qp.validate().unwrap();
    }
}
