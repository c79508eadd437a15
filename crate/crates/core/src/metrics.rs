//! Regression metrics in original AQI units.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Actual values with `|y| <` this are left out of MAPE.
pub const MAPE_ZERO_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub rmse: f64,
    pub mae: f64,
    /// Percent. `None` when every actual value was skipped.
    pub mape: Option<f64>,
    /// `None` when the actual values have zero variance.
    pub r2: Option<f64>,
    pub n_used: usize,
    pub n_skipped_mape: usize,
}

pub fn evaluate(y: &[f64], y_hat: &[f64]) -> Result<EvalResult> {
    if y.len() != y_hat.len() {
        return Err(Error::Shape(format!(
            "{} actual values vs {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::Input(
            "at least two observations are needed for evaluation".into(),
        ));
    }
    let n = y.len() as f64;
    let mut sse = 0.0;
    let mut sae = 0.0;
    let mut sape = 0.0;
    let mut skipped = 0;
    for (&a, &p) in y.iter().zip(y_hat) {
        let e = a - p;
        sse += e * e;
        sae += e.abs();
        if a.abs() < MAPE_ZERO_GUARD {
            skipped += 1;
        } else {
            sape += (e / a).abs();
        }
    }
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    let kept = y.len() - skipped;
    Ok(EvalResult {
        rmse: (sse / n).sqrt(),
        mae: sae / n,
        mape: (kept > 0).then(|| 100.0 * sape / kept as f64),
        r2: (sst > 0.0).then(|| 1.0 - sse / sst),
        n_used: y.len(),
        n_skipped_mape: skipped,
    })
}

/// `(a − b) / |b| × 100`; negative means `a` is lower than `b`.
pub fn percent_change(a: f64, b: f64) -> Option<f64> {
    (b != 0.0 && a.is_finite() && b.is_finite()).then(|| (a - b) / b.abs() * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub model_a: Option<f64>,
    pub model_b: Option<f64>,
    pub change_pct: Option<f64>,
}

/// Side-by-side metric table, model A measured against model B.
pub fn compare(a: &EvalResult, b: &EvalResult) -> Vec<ComparisonRow> {
    let row = |metric: &str, x: Option<f64>, y: Option<f64>| ComparisonRow {
        metric: metric.to_string(),
        model_a: x,
        model_b: y,
        change_pct: match (x, y) {
            (Some(x), Some(y)) => percent_change(x, y),
            _ => None,
        },
    };
    vec![
        row("RMSE", Some(a.rmse), Some(b.rmse)),
        row("MAE", Some(a.mae), Some(b.mae)),
        row("MAPE", a.mape, b.mape),
        row("R2", a.r2, b.r2),
    ]
}

fn cell(v: Option<f64>, suffix: &str) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}{suffix}"))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:+.1}%"))
}

/// Markdown table with values to two decimals and changes to one.
pub fn render_table(rows: &[ComparisonRow], label_a: &str, label_b: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| Metric | {label_a} | {label_b} | Improvement |");
    let _ = writeln!(out, "|---|---|---|---|");
    for r in rows {
        let suffix = if r.metric == "MAPE" { "%" } else { "" };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            r.metric,
            cell(r.model_a, suffix),
            cell(r.model_b, suffix),
            pct(r.change_pct)
        );
    }
    out
}
