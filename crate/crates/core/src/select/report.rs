//! Evaluation curves, their CSV form and the AUC-vs-random summary.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Method;
use crate::error::{Error, Result};

const CSV_HEADER: &str = "round,camera_id,score,eval_mse,eval_psnr";

/// One point of an evaluation curve. Round 0 is the seed set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub round: usize,
    pub camera_id: Option<usize>,
    pub score: Option<f64>,
    pub eval_mse: f64,
    pub eval_psnr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub method: Method,
    pub rows: Vec<CurveRow>,
}

impl Curve {
    pub fn psnr(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.eval_psnr).collect()
    }

    pub fn final_psnr(&self) -> Option<f64> {
        self.rows.last().map(|r| r.eval_psnr)
    }

    pub fn chosen(&self) -> Vec<usize> {
        self.rows.iter().filter_map(|r| r.camera_id).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let id = r.camera_id.map(|c| c.to_string()).unwrap_or_default();
            let score = r.score.map(|s| format!("{s:.17e}")).unwrap_or_default();
            let _ = writeln!(out, "{},{id},{score},{:.17e},{:.17e}", r.round, r.eval_mse, r.eval_psnr);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: bad {name} '{field}'")))
}

fn parse_optional<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<Option<T>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_field(field, line, name).map(Some)
    }
}

/// Parses a curve CSV written by [`Curve::to_csv`].
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Format(format!("expected header '{CSV_HEADER}'"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::Format(format!("line {n}: expected 5 fields, got {}", f.len())));
        }
        rows.push(CurveRow {
            round: parse_field(f[0], n, "round")?,
            camera_id: parse_optional(f[1], n, "camera_id")?,
            score: parse_optional(f[2], n, "score")?,
            eval_mse: parse_field(f[3], n, "eval_mse")?,
            eval_psnr: parse_field(f[4], n, "eval_psnr")?,
        });
    }
    Ok(rows)
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRow>> {
    parse_curve_csv(&std::fs::read_to_string(path)?)
}

/// Round-normalized trapezoidal integral of `method − random`.
///
/// Positive means the method is ahead for higher-is-better metrics. With a
/// single point the difference itself is returned.
pub fn auc_delta(method: &[f64], random: &[f64]) -> Result<f64> {
    if method.len() != random.len() {
        return Err(Error::DimensionMismatch {
            expected: random.len(),
            got: method.len(),
        });
    }
    let diff: Vec<f64> = method.iter().zip(random).map(|(m, r)| m - r).collect();
    match diff.len() {
        0 => Err(Error::Precondition("curves are empty".into())),
        1 => Ok(diff[0]),
        n => {
            let area: f64 = diff.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
            Ok(area / (n - 1) as f64)
        }
    }
}

/// AUC Δ of a method curve against a random curve, with round alignment
/// checked.
pub fn curve_auc_delta(method: &[CurveRow], random: &[CurveRow]) -> Result<f64> {
    if method.len() != random.len() || method.iter().zip(random).any(|(a, b)| a.round != b.round) {
        return Err(Error::Precondition("curves are not aligned by round".into()));
    }
    let psnr = |rows: &[CurveRow]| rows.iter().map(|r| r.eval_psnr).collect::<Vec<_>>();
    auc_delta(&psnr(method), &psnr(random))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AucRow {
    pub name: String,
    pub final_psnr: f64,
    pub auc_delta: f64,
}

/// A method curve paired with the random baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveReport {
    pub method: Vec<CurveRow>,
    pub random: Vec<CurveRow>,
    pub auc_delta: f64,
}

impl CurveReport {
    pub fn new(method: Vec<CurveRow>, random: Vec<CurveRow>) -> Result<Self> {
        let auc_delta = curve_auc_delta(&method, &random)?;
        Ok(Self {
            method,
            random,
            auc_delta,
        })
    }
}

/// Renders AUC rows as an aligned text table.
pub fn format_table(rows: &[AucRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(6);
    let mut out = format!("{:<width$}  {:>12}  {:>12}\n", "method", "final_psnr", "auc_delta");
    for r in rows {
        let _ = writeln!(out, "{:<width$}  {:>12.4}  {:>12.4}", r.name, r.final_psnr, r.auc_delta);
    }
    out
}

pub fn table_csv(rows: &[AucRow]) -> String {
    let mut out = String::from("method,final_psnr,auc_delta\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.17e},{:.17e}", r.name, r.final_psnr, r.auc_delta);
    }
    out
}
