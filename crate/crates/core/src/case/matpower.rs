//! Parser for the MATPOWER-subset case format.
//!
//! Recognized structure: `mpc.<name> = <scalar>;` and
//! `mpc.<name> = [ rows ];` with whitespace-separated numeric fields, rows
//! terminated by `;` or newline, `%` comments ignored. Blocks other than
//! baseMVA/bus/gen/branch/gencost are skipped. This is positional parsing,
//! not MATLAB evaluation.

use super::{Branch, Bus, BusType, CaseError, Generator, GridCase, QuadraticCost};

struct Block {
    line: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

pub fn parse_matpower(text: &str) -> Result<GridCase, CaseError> {
    // strip comments, keep line structure for error reporting
    let lines: Vec<&str> = text.lines().map(|l| l.split('%').next().unwrap_or("")).collect();
    let cleaned: String = lines.join("\n");

    let mut base_mva: Option<f64> = None;
    let mut bus: Option<Block> = None;
    let mut gen: Option<Block> = None;
    let mut branch: Option<Block> = None;
    let mut gencost: Option<Block> = None;

    let bytes = cleaned.as_bytes();
    let line_of = |pos: usize| 1 + cleaned[..pos].matches('\n').count();
    let mut i = 0usize;
    while let Some(off) = cleaned[i..].find("mpc.") {
        let start = i + off + 4;
        let name_end = cleaned[start..]
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .map(|d| start + d)
            .unwrap_or(cleaned.len());
        let name = &cleaned[start..name_end];
        let mut p = name_end;
        while p < bytes.len() && (bytes[p] as char).is_whitespace() {
            p += 1;
        }
        if p >= bytes.len() || bytes[p] != b'=' {
            i = name_end;
            continue;
        }
        p += 1;
        while p < bytes.len() && (bytes[p] as char).is_whitespace() {
            p += 1;
        }
        if p < bytes.len() && (bytes[p] == b'[' || bytes[p] == b'{') {
            let close = if bytes[p] == b'[' { "]" } else { "}" };
            let body_start = p + 1;
            let body_end = cleaned[body_start..]
                .find(close)
                .map(|d| body_start + d)
                .ok_or_else(|| CaseError::Parse {
                    line: line_of(p),
                    msg: format!("unterminated mpc.{name} block"),
                })?;
            if bytes[p] == b'[' {
                let block = parse_rows(&cleaned, body_start, body_end, line_of(body_start))?;
                match name {
                    "bus" => bus = Some(block),
                    "gen" => gen = Some(block),
                    "branch" => branch = Some(block),
                    "gencost" => gencost = Some(block),
                    _ => {}
                }
            }
            i = body_end + 1;
        } else {
            // scalar or quoted assignment up to ';'
            let end = cleaned[p..].find(';').map(|d| p + d).unwrap_or(cleaned.len());
            if name == "baseMVA" {
                let tok = cleaned[p..end].trim();
                let v = tok.parse::<f64>().map_err(|_| CaseError::Parse {
                    line: line_of(p),
                    msg: format!("non-numeric baseMVA '{tok}'"),
                })?;
                base_mva = Some(v);
            }
            i = end.min(cleaned.len() - 1) + 1;
        }
        if i >= cleaned.len() {
            break;
        }
    }

    let base_mva = base_mva.ok_or(CaseError::MissingBlock("baseMVA"))?;
    let bus = bus.ok_or(CaseError::MissingBlock("bus"))?;
    let gen = gen.ok_or(CaseError::MissingBlock("gen"))?;
    let branch = branch.ok_or(CaseError::MissingBlock("branch"))?;
    let gencost = gencost.ok_or(CaseError::MissingBlock("gencost"))?;

    let mut buses = Vec::with_capacity(bus.rows.len());
    for (line, row) in &bus.rows {
        require_cols(*line, row, 3, "bus")?;
        let bus_type = match row[1] as i64 {
            1 => BusType::PQ,
            2 => BusType::PV,
            3 => BusType::REF,
            t => {
                return Err(CaseError::Parse {
                    line: *line,
                    msg: format!("unsupported bus type {t}"),
                })
            }
        };
        buses.push(Bus { id: as_id(*line, row[0])?, bus_type, pd: row[2] });
    }

    let mut branches = Vec::with_capacity(branch.rows.len());
    for (line, row) in &branch.rows {
        require_cols(*line, row, 11, "branch")?;
        branches.push(Branch {
            from_bus: as_id(*line, row[0])?,
            to_bus: as_id(*line, row[1])?,
            x: row[3],
            rate_a: row[5],
            status: row[10] != 0.0,
        });
    }

    if gencost.rows.len() != gen.rows.len() {
        return Err(CaseError::Parse {
            line: gencost.line,
            msg: format!(
                "gencost has {} rows but gen has {}",
                gencost.rows.len(),
                gen.rows.len()
            ),
        });
    }
    let mut generators = Vec::with_capacity(gen.rows.len());
    for ((line, row), (cline, crow)) in gen.rows.iter().zip(&gencost.rows) {
        require_cols(*line, row, 10, "gen")?;
        require_cols(*cline, crow, 4, "gencost")?;
        let model = crow[0] as i64;
        if model != 2 {
            return Err(CaseError::Parse {
                line: *cline,
                msg: format!("unsupported cost model {model} (piecewise-linear not supported)"),
            });
        }
        let ncost = crow[3] as usize;
        if ncost > 3 || crow.len() < 4 + ncost {
            return Err(CaseError::Parse {
                line: *cline,
                msg: format!("polynomial cost must have 1..=3 coefficients, got {ncost}"),
            });
        }
        let coeffs = &crow[4..4 + ncost];
        let cost = match ncost {
            3 => QuadraticCost { a: coeffs[0], b: coeffs[1], c: coeffs[2] },
            2 => QuadraticCost { a: 0.0, b: coeffs[0], c: coeffs[1] },
            1 => QuadraticCost { a: 0.0, b: 0.0, c: coeffs[0] },
            _ => QuadraticCost { a: 0.0, b: 0.0, c: 0.0 },
        };
        generators.push(Generator {
            bus: as_id(*line, row[0])?,
            pmin: row[9],
            pmax: row[8],
            cost,
            ramp: None,
            status: row[7] > 0.0,
        });
    }

    Ok(GridCase { base_mva, buses, branches, generators })
}

fn parse_rows(
    text: &str,
    start: usize,
    end: usize,
    first_line: usize,
) -> Result<Block, CaseError> {
    let body = &text[start..end];
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut width: Option<usize> = None;
    let mut line = first_line;
    for raw in body.split(|c| c == ';' || c == '\n') {
        let row_line = line;
        line += raw.matches('\n').count(); // split never yields embedded newlines; kept for clarity
        if raw.trim().is_empty() {
            if raw.is_empty() {
                line += 1; // empty segment between '\n' separators
            }
            continue;
        }
        let mut vals = Vec::new();
        for tok in raw.split_whitespace() {
            let tok = tok.trim_matches(',');
            if tok.is_empty() {
                continue;
            }
            let v = tok.parse::<f64>().map_err(|_| CaseError::Parse {
                line: row_line,
                msg: format!("non-numeric token '{tok}'"),
            })?;
            vals.push(v);
        }
        if let Some(w) = width {
            if vals.len() != w {
                return Err(CaseError::Parse {
                    line: row_line,
                    msg: format!("ragged row: {} fields, expected {w}", vals.len()),
                });
            }
        } else {
            width = Some(vals.len());
        }
        rows.push((row_line, vals));
    }
    Ok(Block { line: first_line, rows })
}

fn require_cols(line: usize, row: &[f64], need: usize, what: &str) -> Result<(), CaseError> {
    if row.len() < need {
        Err(CaseError::Parse {
            line,
            msg: format!("{what} row has {} fields, needs at least {need}", row.len()),
        })
    } else {
        Ok(())
    }
}

fn as_id(line: usize, v: f64) -> Result<usize, CaseError> {
    if v < 0.0 || v.fract() != 0.0 {
        Err(CaseError::Parse { line, msg: format!("expected an integer id, got {v}") })
    } else {
        Ok(v as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::validate;

    pub const TWO_BUS: &str = "\
function mpc = two_bus
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0   0 0 0 1 1 0 345 1 1.06 0.94;
  2 1 50  0 0 0 1 1 0 345 1 1.06 0.94;
];
mpc.gen = [
  1 0 0 100 -100 1 100 1 200 0 0 0 0 0 0 0 0 0 0 0 0;
];
mpc.branch = [
  1 2 0.0 0.5 0.0 100 100 100 0 0 1 -360 360;
];
mpc.gencost = [
  2 0 0 3 0.02 10 0;
];
";

    #[test]
    fn minimal_two_bus_case() {
        let case = parse_matpower(TWO_BUS).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.branches.len(), 1);
        assert_eq!(case.generators.len(), 1);
        assert_eq!(case.base_mva, 100.0);
        assert_eq!(case.buses[1].pd, 50.0);
        assert_eq!(case.branches[0].x, 0.5);
        assert_eq!(case.generators[0].cost.a, 0.02);
        assert!(validate(&case).is_empty());
    }

    #[test]
    fn case39_counts() {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/case39.m"
        ))
        .unwrap();
        let case = parse_matpower(&text).unwrap();
        assert_eq!(case.buses.len(), 39);
        assert_eq!(case.generators.len(), 10);
        assert_eq!(case.branches.len(), 46);
        assert!(validate(&case).is_empty());
        assert!((case.total_load() - 6254.23).abs() < 1e-6);
    }

    #[test]
    fn missing_branch_block_is_named() {
        let text = TWO_BUS.replace("mpc.branch", "mpc.other");
        let err = parse_matpower(&text).unwrap_err();
        assert!(matches!(err, CaseError::MissingBlock("branch")));
    }

    #[test]
    fn non_numeric_token_reports_line() {
        let text = TWO_BUS.replace("1 2 0.0 0.5", "1 2 0.0 abc");
        let err = parse_matpower(&text).unwrap_err();
        match err {
            CaseError::Parse { line, msg } => {
                assert!(msg.contains("abc"));
                assert!(line > 0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ragged_row_rejected() {
        let text = TWO_BUS.replace("  2 1 50  0 0 0 1 1 0 345 1 1.06 0.94;", "  2 1 50;");
        let err = parse_matpower(&text).unwrap_err();
        match err {
            CaseError::Parse { msg, .. } => assert!(msg.contains("ragged")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn piecewise_linear_cost_rejected() {
        let text = TWO_BUS.replace("2 0 0 3 0.02 10 0;", "1 0 0 2 0 0 100 2000;");
        let err = parse_matpower(&text).unwrap_err();
        match err {
            CaseError::Parse { msg, .. } => assert!(msg.contains("cost model")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn two_coefficient_polynomial_gets_zero_quadratic_term() {
        let text = TWO_BUS.replace("2 0 0 3 0.02 10 0;", "2 0 0 2 10 5;");
        let case = parse_matpower(&text).unwrap();
        assert_eq!(case.generators[0].cost, QuadraticCost { a: 0.0, b: 10.0, c: 5.0 });
    }
}
