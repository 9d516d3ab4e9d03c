use std::fmt::Write as _;

use super::metrics::MetricsReport;
use crate::error::{Error, Result};

const ABSENT: &str = "—";

/// One parsed table row: label, then MAE and RMSE for all, low and high
/// buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub values: [Option<f64>; 6],
}

impl TableRow {
    /// The row as it reads after rendering, i.e. rounded to two decimals.
    pub fn from_report(r: &MetricsReport) -> Self {
        let round = |v: Option<f64>| v.map(|x| format!("{x:.2}").parse().expect("formatted float"));
        TableRow {
            label: r.city_id.clone(),
            values: [
                round(r.all.mae),
                round(r.lt.mae),
                round(r.ge.mae),
                round(r.all.rmse),
                round(r.lt.rmse),
                round(r.ge.rmse),
            ],
        }
    }
}

fn width(s: &str) -> usize {
    s.chars().count()
}

fn pad_right(s: &str, w: usize) -> String {
    format!("{s}{}", " ".repeat(w.saturating_sub(width(s))))
}

fn pad_left(s: &str, w: usize) -> String {
    format!("{}{s}", " ".repeat(w.saturating_sub(width(s))))
}

/// Renders reports as a fixed-width table with a two-line header: metric
/// names, then the bucket columns `∀ h`, `h < T m`, `h ≥ T m` under each.
/// `label_header` names the first column, e.g. `City` or `Test`.
pub fn format_table(reports: &[MetricsReport], label_header: &str) -> Result<String> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidInput("no reports to tabulate".into()))?;
    let t = first.threshold_m;
    let buckets = ["∀ h".to_owned(), format!("h < {t} m"), format!("h ≥ {t} m")];

    let cells: Vec<(String, Vec<String>)> = reports
        .iter()
        .map(|r| {
            let row = TableRow::from_report(r);
            let vals = row
                .values
                .iter()
                .map(|v| v.map_or_else(|| ABSENT.to_owned(), |x| format!("{x:.2}")))
                .collect();
            (row.label, vals)
        })
        .collect();

    let label_w = cells
        .iter()
        .map(|(l, _)| width(l))
        .chain([width(label_header)])
        .max()
        .unwrap_or(0);
    let col_w = cells
        .iter()
        .flat_map(|(_, v)| v.iter().map(|s| width(s)))
        .chain(buckets.iter().map(|b| width(b)))
        .max()
        .unwrap_or(0);
    let group_w = 3 * col_w + 4;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}  {}  RMSE [m]",
        pad_right(label_header, label_w),
        pad_right("MAE [m]", group_w),
    );
    let header: Vec<String> = buckets.iter().chain(&buckets).map(|b| pad_left(b, col_w)).collect();
    let second = format!("{}  {}", " ".repeat(label_w), header.join("  "));
    let _ = writeln!(out, "{}", second.trim_end());
    for (label, vals) in &cells {
        let vals: Vec<String> = vals.iter().map(|v| pad_left(v, col_w)).collect();
        let _ = writeln!(out, "{}  {}", pad_right(label, label_w), vals.join("  "));
    }
    Ok(out)
}

/// Reads back the rows of a table produced by [`format_table`].
pub fn parse_table(text: &str) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    let mut offset = 0u64;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let trimmed = line.trim();
        if i >= 2 && !trimmed.is_empty() {
            rows.push(parse_row(trimmed).ok_or_else(|| Error::Format {
                offset,
                reason: format!("malformed table row `{trimmed}`"),
            })?);
        }
        offset += line.len() as u64;
    }
    Ok(rows)
}

fn parse_row(line: &str) -> Option<TableRow> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() < 7 {
        return None;
    }
    let split = tokens.len() - 6;
    let mut values = [None; 6];
    for (v, tok) in values.iter_mut().zip(&tokens[split..]) {
        *v = match *tok {
            ABSENT => None,
            t => Some(t.parse::<f64>().ok()?),
        };
    }
    Some(TableRow {
        label: tokens[..split].join(" "),
        values,
    })
}
