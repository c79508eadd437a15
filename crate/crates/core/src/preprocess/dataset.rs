use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Complete (gap-free) daily table. The target column is one of `columns`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanSeries {
    pub dates: Vec<NaiveDate>,
    pub columns: Vec<String>,
    /// Row-major, `dates.len() × columns.len()`.
    pub rows: Vec<Vec<f64>>,
    pub target_column: usize,
}

impl CleanSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() != self.dates.len() {
            return Err(Error::Shape(format!(
                "{} rows for {} dates",
                self.rows.len(),
                self.dates.len()
            )));
        }
        if self.target_column >= self.columns.len() {
            return Err(Error::Shape("target column index out of range".into()));
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != self.columns.len()) {
            return Err(Error::Shape(format!(
                "row {i} has {} values, expected {}",
                self.rows[i].len(),
                self.columns.len()
            )));
        }
        if self.rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Preprocess("series contains non-finite values".into()));
        }
        Ok(())
    }
}

/// Per-column min-max scaler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub columns: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(columns: &[String], rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Preprocess("cannot fit a scaler on zero rows".into()));
        }
        let d = columns.len();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for r in rows {
            for k in 0..d {
                min[k] = min[k].min(r[k]);
                max[k] = max[k].max(r[k]);
            }
        }
        Ok(MinMaxScaler {
            columns: columns.to_vec(),
            min,
            max,
        })
    }

    /// `(x − min) / (max − min)`; a constant column maps to 0. Values outside
    /// the fitted range are not clipped.
    pub fn scale(&self, column: usize, x: f64) -> f64 {
        let span = self.max[column] - self.min[column];
        if span > 0.0 {
            (x - self.min[column]) / span
        } else {
            0.0
        }
    }

    pub fn unscale(&self, column: usize, s: f64) -> f64 {
        s * (self.max[column] - self.min[column]) + self.min[column]
    }

    pub fn scale_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(k, &x)| self.scale(k, x)).collect()
    }

    /// SHA-256 of the canonical JSON form, used to pair checkpoints with
    /// datasets.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("scaler serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
}

/// Chronological split: targets dated before `test_start` train, the rest
/// test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRule {
    pub test_start: NaiveDate,
}

impl Default for SplitRule {
    fn default() -> Self {
        SplitRule {
            test_start: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    /// `seq_len` scaled day vectors, oldest first.
    pub inputs: Vec<Vec<f64>>,
    /// Row of the source series holding the first input day.
    pub start_row: usize,
    /// Scaled next-day target.
    pub target: f64,
    /// Target in original units.
    pub target_raw: f64,
    pub last_input_date: NaiveDate,
    pub target_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    pub split: SplitTag,
    pub seq_len: usize,
    pub target_column: usize,
    pub scaler: MinMaxScaler,
    pub windows: Vec<Window>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.scaler.columns.len()
    }

    pub fn unscale_target(&self, s: f64) -> f64 {
        self.scaler.unscale(self.target_column, s)
    }

    /// Each distinct day vector that appears in some window, in first-seen
    /// order.
    pub fn distinct_inputs(&self) -> Vec<Vec<f64>> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for w in &self.windows {
            for (k, x) in w.inputs.iter().enumerate() {
                if seen.insert(w.start_row + k) {
                    out.push(x.clone());
                }
            }
        }
        out
    }
}

/// Scales with a train-only fit and cuts `seq_len`-day windows predicting
/// the next row's target. Rows are treated as consecutive regardless of
/// calendar gaps; each window is assigned to a split by its target date.
pub fn scale_and_window(
    series: &CleanSeries,
    seq_len: usize,
    split: &SplitRule,
) -> Result<(WindowedDataset, WindowedDataset)> {
    series.validate()?;
    if seq_len == 0 {
        return Err(Error::Config("sequence length must be positive".into()));
    }
    let train_rows: Vec<Vec<f64>> = series
        .dates
        .iter()
        .zip(&series.rows)
        .filter(|(d, _)| **d < split.test_start)
        .map(|(_, r)| r.clone())
        .collect();
    if train_rows.is_empty() {
        return Err(Error::Preprocess(format!(
            "no rows dated before {} to fit the scaler on",
            split.test_start
        )));
    }
    let scaler = MinMaxScaler::fit(&series.columns, &train_rows)?;
    let scaled: Vec<Vec<f64>> = series.rows.iter().map(|r| scaler.scale_row(r)).collect();

    let mut train = Vec::new();
    let mut test = Vec::new();
    let tc = series.target_column;
    for t in 0..series.len().saturating_sub(seq_len) {
        let target_idx = t + seq_len;
        let w = Window {
            inputs: scaled[t..target_idx].to_vec(),
            start_row: t,
            target: scaled[target_idx][tc],
            target_raw: series.rows[target_idx][tc],
            last_input_date: series.dates[target_idx - 1],
            target_date: series.dates[target_idx],
        };
        if w.target_date < split.test_start {
            train.push(w);
        } else {
            test.push(w);
        }
    }
    let make = |split, windows| WindowedDataset {
        split,
        seq_len,
        target_column: tc,
        scaler: scaler.clone(),
        windows,
    };
    Ok((make(SplitTag::Train, train), make(SplitTag::Test, test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(n: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2019, 12, 25).unwrap() + chrono::Days::new(n)
    }

    fn series(n: usize) -> CleanSeries {
        CleanSeries {
            dates: (0..n as u64).map(day).collect(),
            columns: vec!["a".into(), "AQI".into()],
            rows: (0..n).map(|i| vec![i as f64 * 10.0, 100.0 + i as f64]).collect(),
            target_column: 1,
        }
    }

    #[test]
    fn window_count() {
        let (tr, te) = scale_and_window(&series(10), 3, &SplitRule::default()).unwrap();
        assert_eq!(tr.len() + te.len(), 7);
    }

    #[test]
    fn split_by_target_date() {
        // days 0..=6 fall in 2019, day 7 is 2020-01-01
        let (tr, te) = scale_and_window(&series(10), 3, &SplitRule::default()).unwrap();
        assert!(tr
            .windows
            .iter()
            .all(|w| w.target_date < SplitRule::default().test_start));
        assert!(te
            .windows
            .iter()
            .all(|w| w.target_date >= SplitRule::default().test_start));
        assert_eq!(tr.len(), 4);
        assert_eq!(te.len(), 3);
        // first test window straddles the boundary
        assert!(te.windows[0].last_input_date < SplitRule::default().test_start);
    }

    #[test]
    fn scaler_fit_on_train_rows_only() {
        let (tr, te) = scale_and_window(&series(10), 3, &SplitRule::default()).unwrap();
        // train rows are days 0..=6, so column a spans 0..60.
        assert_eq!(tr.scaler.min[0], 0.0);
        assert_eq!(tr.scaler.max[0], 60.0);
        let last = te.windows.last().unwrap();
        assert!(last.inputs.last().unwrap()[0] > 1.0);
        for w in &tr.windows {
            assert!(w.inputs.iter().flatten().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn scale_value() {
        let s = MinMaxScaler {
            columns: vec!["x".into()],
            min: vec![0.0],
            max: vec![200.0],
        };
        assert_eq!(s.scale(0, 50.0), 0.25);
        assert_eq!(s.scale(0, 300.0), 1.5);
        assert_eq!(s.unscale(0, 0.25), 50.0);
    }

    #[test]
    fn targets_align() {
        let (tr, _) = scale_and_window(&series(10), 3, &SplitRule::default()).unwrap();
        for w in &tr.windows {
            assert_eq!(w.target_date, w.last_input_date + chrono::Days::new(1));
            assert!((tr.unscale_target(w.target) - w.target_raw).abs() <= 1e-12 * w.target_raw.abs());
        }
    }

    #[test]
    fn needs_training_rows() {
        let rule = SplitRule { test_start: day(0) };
        assert!(matches!(
            scale_and_window(&series(10), 3, &rule),
            Err(Error::Preprocess(_))
        ));
    }

    #[test]
    fn distinct_inputs_cover_each_day_once() {
        let (tr, _) = scale_and_window(&series(10), 3, &SplitRule::default()).unwrap();
        // 4 windows over days 0..=5
        assert_eq!(tr.distinct_inputs().len(), 6);
    }
}
