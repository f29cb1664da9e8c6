//! Report emission: CSV, JSON, and markdown with a fixed column order and
//! bit-stable formatting (6 significant digits, \n line endings).

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{BenchRow, OuterRow, SparsityReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            "markdown" | "md" => Some(ReportFormat::Markdown),
            _ => None,
        }
    }
}

/// One table cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Str(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_sig(*v, 6),
            Cell::Str(s) => s.clone(),
        }
    }
}

/// Tabular view of a report row; column order is fixed by the type's field
/// order.
pub trait TableReport {
    fn headers() -> Vec<&'static str>;
    fn cells(&self) -> Vec<Cell>;
}

impl TableReport for SparsityReport {
    fn headers() -> Vec<&'static str> {
        vec![
            "kind",
            "n_vars",
            "n_cons",
            "nnz_a",
            "density_a",
            "nnz_aat_lower",
            "factor_ops",
            "case_name",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Str(self.kind.clone()),
            Cell::Int(self.n_vars as u64),
            Cell::Int(self.n_cons as u64),
            Cell::Int(self.nnz_a as u64),
            Cell::Float(self.density_a),
            Cell::Int(self.nnz_aat_lower as u64),
            Cell::Int(self.factor_ops),
            Cell::Str(self.case_name.clone()),
        ]
    }
}

impl TableReport for BenchRow {
    fn headers() -> Vec<&'static str> {
        let mut h = SparsityReport::headers();
        h.extend(["solve_time", "barrier_iterations", "objective", "status"]);
        h
    }

    fn cells(&self) -> Vec<Cell> {
        let mut c = self.sparsity.cells();
        c.push(Cell::Float(self.solve_time));
        c.push(Cell::Int(self.barrier_iterations as u64));
        c.push(Cell::Float(self.objective));
        c.push(Cell::Str(self.status.clone()));
        c
    }
}

impl TableReport for OuterRow {
    fn headers() -> Vec<&'static str> {
        let mut h = vec!["strategy", "ratio"];
        h.extend(BenchRow::headers());
        h
    }

    fn cells(&self) -> Vec<Cell> {
        let mut c = vec![Cell::Str(self.strategy.clone()), Cell::Float(self.ratio)];
        c.extend(self.row.cells());
        c
    }
}

/// Format with `sig` significant digits, positional when reasonable,
/// scientific otherwise; deterministic for identical inputs.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -4 || exp >= 9 {
        format!("{:.*e}", sig.saturating_sub(1), x)
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

pub fn to_csv<R: TableReport>(rows: &[R]) -> String {
    let mut out = String::new();
    out.push_str(&R::headers().join(","));
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.cells().iter().map(Cell::render).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn to_markdown<R: TableReport>(rows: &[R]) -> String {
    let headers = R::headers();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    let rendered: Vec<Vec<String>> =
        rows.iter().map(|r| r.cells().iter().map(Cell::render).collect()).collect();
    for row in &rendered {
        for (i, c) in row.iter().enumerate() {
            widths[i] = widths[i].max(c.len());
        }
    }
    let mut out = String::new();
    let line = |cells: &[String], widths: &[usize], out: &mut String| {
        out.push('|');
        for (c, w) in cells.iter().zip(widths) {
            let _ = write!(out, " {c:<w$} |");
        }
        out.push('\n');
    };
    line(&headers.iter().map(|s| s.to_string()).collect::<Vec<_>>(), &widths, &mut out);
    out.push('|');
    for w in &widths {
        let _ = write!(out, "{:-<1$}|", "", w + 2);
    }
    out.push('\n');
    for row in &rendered {
        line(row, &widths, &mut out);
    }
    out
}

/// Full-precision JSON (round-trips exactly through serde).
pub fn to_json<R: Serialize>(rows: &[R]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("reports serialize");
    s.push('\n');
    s
}

pub fn export_to_path<R: TableReport + Serialize>(
    rows: &[R],
    format: ReportFormat,
    path: &Path,
) -> std::io::Result<()> {
    let text = match format {
        ReportFormat::Csv => to_csv(rows),
        ReportFormat::Json => to_json(rows),
        ReportFormat::Markdown => to_markdown(rows),
    };
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparsityReport {
        SparsityReport {
            kind: "ptdf".into(),
            n_vars: 10,
            n_cons: 112,
            nnz_a: 572,
            density_a: 572.0 / 1120.0,
            nnz_aat_lower: 3000,
            factor_ops: 123456,
            case_name: "case39".into(),
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = to_csv::<SparsityReport>(&[]);
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("kind,n_vars,"));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn csv_roundtrips_to_six_significant_digits() {
        let r = sample();
        let csv = to_csv(std::slice::from_ref(&r));
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header.len(), row.len());
        let density: f64 = row[4].parse().unwrap();
        assert!((density - r.density_a).abs() <= 1e-5 * r.density_a);
        let nnz: usize = row[3].parse().unwrap();
        assert_eq!(nnz, r.nnz_a);
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let rows = vec![sample()];
        let json = to_json(&rows);
        let back: Vec<SparsityReport> = serde_json::from_str(&json).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn csv_is_bit_stable() {
        let rows = vec![sample(), sample()];
        assert_eq!(to_csv(&rows), to_csv(&rows));
        assert!(!to_csv(&rows).contains('\r'));
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.0, 6), "0");
        assert_eq!(fmt_sig(41263.940818, 6), "41263.9");
        assert_eq!(fmt_sig(0.510714, 6), "0.510714");
        assert_eq!(fmt_sig(1.0, 6), "1");
        assert_eq!(fmt_sig(-2.5e-7, 6), "-2.50000e-7");
        assert_eq!(fmt_sig(1234567890.0, 6), "1.23457e9");
    }
}
