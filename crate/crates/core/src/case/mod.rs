//! Grid case model: parsing, validation, and the preprocessing applied
//! before any matrices are built.

mod matpower;
mod merge;

pub use matpower::parse_matpower;
pub use merge::merge_colocated_generators;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing required block mpc.{0}")]
    MissingBlock(&'static str),
    #[error("json case: {0}")]
    Json(String),
    #[error("bus {bus}: colocated generator merge needs strictly convex costs (a > 0)")]
    MergeUnsupported { bus: usize },
    #[error("case validation failed: {0}")]
    Invalid(String),
    #[error("no reference bus and no in-service generator to promote")]
    NoReferenceBus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusType {
    PQ,
    PV,
    REF,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    /// External bus number as it appears in the case file.
    pub id: usize,
    pub bus_type: BusType,
    /// Active load, MW.
    pub pd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series reactance, p.u.
    pub x: f64,
    /// Thermal limit, MW; 0 means no limit data and the branch generates
    /// no security constraint rows.
    pub rate_a: f64,
    /// In service?
    pub status: bool,
}

/// cost = a·p² + b·p + c, serialized as the tuple (a, b, c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64, f64)", into = "(f64, f64, f64)")]
pub struct QuadraticCost {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl From<(f64, f64, f64)> for QuadraticCost {
    fn from(t: (f64, f64, f64)) -> Self {
        Self { a: t.0, b: t.1, c: t.2 }
    }
}

impl From<QuadraticCost> for (f64, f64, f64) {
    fn from(q: QuadraticCost) -> Self {
        (q.a, q.b, q.c)
    }
}

impl QuadraticCost {
    pub fn eval(&self, p: f64) -> f64 {
        self.a * p * p + self.b * p + self.c
    }

    pub fn marginal(&self, p: f64) -> f64 {
        2.0 * self.a * p + self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    /// MW
    pub pmin: f64,
    /// MW
    pub pmax: f64,
    pub cost: QuadraticCost,
    /// MW/h; None when the case carries no ramp data.
    pub ramp: Option<f64>,
    pub status: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

/// Bijection between external bus ids and dense internal indices.
#[derive(Debug, Clone)]
pub struct BusIndex {
    map: BTreeMap<usize, usize>,
    ids: Vec<usize>,
}

impl BusIndex {
    pub fn internal(&self, external_id: usize) -> Option<usize> {
        self.map.get(&external_id).copied()
    }

    pub fn external(&self, internal: usize) -> usize {
        self.ids[internal]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: String) -> Self {
        Self { severity: Severity::Error, message }
    }

    fn warning(message: String) -> Self {
        Self { severity: Severity::Warning, message }
    }
}

impl GridCase {
    /// Parse either the MATPOWER-subset text format or the JSON mirror,
    /// picked by the leading character.
    pub fn parse(text: &str) -> Result<GridCase, CaseError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| CaseError::Json(e.to_string()))
        } else {
            parse_matpower(text)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid case serializes")
    }

    pub fn bus_index(&self) -> BusIndex {
        let mut map = BTreeMap::new();
        let mut ids = Vec::with_capacity(self.buses.len());
        for (i, b) in self.buses.iter().enumerate() {
            map.insert(b.id, i);
            ids.push(b.id);
        }
        BusIndex { map, ids }
    }

    /// Copy with out-of-service branches and generators removed; applied
    /// before any matrix construction.
    pub fn strip_out_of_service(&self) -> GridCase {
        GridCase {
            base_mva: self.base_mva,
            buses: self.buses.clone(),
            branches: self.branches.iter().filter(|b| b.status).cloned().collect(),
            generators: self.generators.iter().filter(|g| g.status).cloned().collect(),
        }
    }

    /// Internal index of the reference bus: the unique type-REF bus, or the
    /// lowest-id generator bus as a documented fallback (returned with a
    /// warning flag).
    pub fn reference_bus(&self) -> Result<(usize, bool), CaseError> {
        let refs: Vec<usize> =
            (0..self.buses.len()).filter(|&i| self.buses[i].bus_type == BusType::REF).collect();
        match refs.len() {
            1 => Ok((refs[0], false)),
            0 => {
                let index = self.bus_index();
                let mut gen_buses: Vec<usize> = self
                    .generators
                    .iter()
                    .filter(|g| g.status)
                    .filter_map(|g| index.internal(g.bus))
                    .collect();
                gen_buses.sort_by_key(|&i| self.buses[i].id);
                gen_buses.first().copied().map(|i| (i, true)).ok_or(CaseError::NoReferenceBus)
            }
            _ => Err(CaseError::Invalid(format!(
                "multiple reference buses: {:?}",
                refs.iter().map(|&i| self.buses[i].id).collect::<Vec<_>>()
            ))),
        }
    }

    pub fn total_load(&self) -> f64 {
        self.buses.iter().map(|b| b.pd).sum()
    }
}

/// Check every GridCase invariant; an empty error list means the case is
/// ready for matrix construction.
pub fn validate(case: &GridCase) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let index = case.bus_index();

    if index.len() != case.buses.len() {
        out.push(Diagnostic::error("duplicate bus ids present".into()));
    }
    for b in &case.buses {
        if !b.pd.is_finite() {
            out.push(Diagnostic::error(format!("bus {}: non-finite load {}", b.id, b.pd)));
        }
    }
    for (k, br) in case.branches.iter().enumerate() {
        if index.internal(br.from_bus).is_none() || index.internal(br.to_bus).is_none() {
            out.push(Diagnostic::error(format!(
                "branch {} ({}-{}): endpoint names a missing bus",
                k, br.from_bus, br.to_bus
            )));
            continue;
        }
        if br.status && br.x <= 0.0 {
            out.push(Diagnostic::error(format!(
                "branch {} ({}-{}): non-positive reactance x={}",
                k, br.from_bus, br.to_bus, br.x
            )));
        }
        if br.rate_a < 0.0 {
            out.push(Diagnostic::error(format!(
                "branch {} ({}-{}): negative rating {}",
                k, br.from_bus, br.to_bus, br.rate_a
            )));
        }
    }
    for (k, g) in case.generators.iter().enumerate() {
        if index.internal(g.bus).is_none() {
            out.push(Diagnostic::error(format!("generator {} at missing bus {}", k, g.bus)));
        }
        if g.pmin > g.pmax {
            out.push(Diagnostic::error(format!(
                "generator {} at bus {}: pmin {} > pmax {}",
                k, g.bus, g.pmin, g.pmax
            )));
        }
        if g.cost.a < 0.0 {
            out.push(Diagnostic::error(format!(
                "generator {} at bus {}: concave cost (a={})",
                k, g.bus, g.cost.a
            )));
        }
    }

    let refs: Vec<usize> =
        case.buses.iter().filter(|b| b.bus_type == BusType::REF).map(|b| b.id).collect();
    if refs.len() > 1 {
        out.push(Diagnostic::error(format!("multiple reference buses: {refs:?}")));
    } else if refs.is_empty() {
        match case.reference_bus() {
            Ok((i, _)) => out.push(Diagnostic::warning(format!(
                "no reference bus; falling back to lowest-id generator bus {}",
                case.buses[i].id
            ))),
            Err(_) => out.push(Diagnostic::error(
                "no reference bus and no generator bus to promote".into(),
            )),
        }
    }

    // connectivity over in-service branches
    if !case.buses.is_empty() {
        let n = case.buses.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for br in case.branches.iter().filter(|b| b.status) {
            if let (Some(a), Some(b)) = (index.internal(br.from_bus), index.internal(br.to_bus)) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
        let mut roots: BTreeMap<usize, usize> = BTreeMap::new();
        for i in 0..n {
            *roots.entry(find(&mut parent, i)).or_insert(0) += 1;
        }
        if roots.len() > 1 {
            let sizes: Vec<usize> = roots.values().copied().collect();
            out.push(Diagnostic::error(format!(
                "network is disconnected: {} components with sizes {:?}",
                roots.len(),
                sizes
            )));
        }
    }

    out
}

/// True when the diagnostics contain no errors.
pub fn is_valid(diags: &[Diagnostic]) -> bool {
    diags.iter().all(|d| d.severity != Severity::Error)
}

#[cfg(test)]
pub(crate) fn two_bus_case() -> GridCase {
    GridCase {
        base_mva: 100.0,
        buses: vec![
            Bus { id: 1, bus_type: BusType::REF, pd: 0.0 },
            Bus { id: 2, bus_type: BusType::PQ, pd: 50.0 },
        ],
        branches: vec![Branch { from_bus: 1, to_bus: 2, x: 0.5, rate_a: 100.0, status: true }],
        generators: vec![Generator {
            bus: 1,
            pmin: 0.0,
            pmax: 200.0,
            cost: QuadraticCost { a: 0.02, b: 10.0, c: 0.0 },
            ramp: None,
            status: true,
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_two_bus_case_no_diagnostics() {
        let diags = validate(&two_bus_case());
        assert!(diags.is_empty(), "{diags:?}");
    }

    #[test]
    fn two_reference_buses_flagged() {
        let mut case = two_bus_case();
        case.buses[1].bus_type = BusType::REF;
        let diags = validate(&case);
        assert!(diags.iter().any(|d| d.severity == Severity::Error
            && d.message.contains('1')
            && d.message.contains('2')));
    }

    #[test]
    fn zero_reactance_flagged() {
        let mut case = two_bus_case();
        case.branches[0].x = 0.0;
        let diags = validate(&case);
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Error && d.message.contains("reactance")));
    }

    #[test]
    fn disconnected_graph_flagged() {
        let mut case = two_bus_case();
        case.branches[0].status = false;
        let diags = validate(&case);
        assert!(diags.iter().any(|d| d.message.contains("disconnected")));
    }

    #[test]
    fn json_roundtrip_is_field_exact() {
        let case = two_bus_case();
        let json = case.to_json();
        let back = GridCase::parse(&json).unwrap();
        assert_eq!(case, back);
    }

    #[test]
    fn fallback_reference_bus_is_lowest_gen_bus() {
        let mut case = two_bus_case();
        case.buses[0].bus_type = BusType::PV;
        let (idx, warned) = case.reference_bus().unwrap();
        assert_eq!(case.buses[idx].id, 1);
        assert!(warned);
    }
}
