use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::aqi::{compute_aqi, BreakpointTable};
use super::clean::{interpolate, zscore_filter};
use super::dataset::{scale_and_window, CleanSeries, SplitRule, WindowedDataset};
use super::ingest::RawSeries;
use crate::error::{Error, Result};

pub const ARCHIVE_FORMAT: &str = "qklstm-dataset";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub gamma: f64,
    pub seq_len: usize,
    pub split: SplitRule,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            gamma: 3.0,
            seq_len: 3,
            split: SplitRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub name: String,
    pub missing_in_input: usize,
    pub outliers_removed: usize,
    /// Cells filled by interpolation (missing plus removed).
    pub gaps_filled: usize,
    /// Row positions removed as outliers.
    pub outlier_rows: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AqiSource {
    /// Taken from the file's AQI column.
    Column,
    /// Recomputed from pollutant breakpoints.
    Computed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub rows: usize,
    pub first_date: chrono::NaiveDate,
    pub last_date: chrono::NaiveDate,
    pub gamma: f64,
    pub dropped_columns: Vec<String>,
    pub aqi_source: AqiSource,
    /// Sub-indices clamped to the ends of the breakpoint table.
    pub aqi_clamped: usize,
    pub features: Vec<FeatureReport>,
    pub train_windows: usize,
    pub test_windows: usize,
}

/// Everything the training and evaluation commands need from
/// preprocessing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetArchive {
    pub format: String,
    pub version: u32,
    pub columns: Vec<String>,
    pub options: PipelineOptions,
    pub scaler_fingerprint: String,
    pub report: PreprocessReport,
    pub train: WindowedDataset,
    pub test: WindowedDataset,
}

/// Per-feature z-score removal followed by interpolation over day offsets.
fn clean_column(
    name: &str,
    values: &[Option<f64>],
    positions: &[f64],
    gamma: f64,
) -> Result<(Vec<f64>, FeatureReport)> {
    let missing = values.iter().filter(|v| v.is_none()).count();
    let (filtered, z) = zscore_filter(values, gamma);
    let (complete, filled) = interpolate(positions, &filtered, name)?;
    Ok((
        complete,
        FeatureReport {
            name: name.to_string(),
            missing_in_input: missing,
            outliers_removed: z.removed.len(),
            gaps_filled: filled,
            outlier_rows: z.removed,
        },
    ))
}

/// Raw series → cleaned series with the AQI as the last column.
pub fn clean_series(raw: &RawSeries, gamma: f64, table: &BreakpointTable) -> Result<(CleanSeries, PreprocessReport)> {
    if raw.is_empty() {
        return Err(Error::Preprocess("input contains no rows".into()));
    }
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Config(format!(
            "outlier threshold must be positive, got {gamma}"
        )));
    }
    let origin = raw.dates[0];
    let positions: Vec<f64> = raw.dates.iter().map(|d| (*d - origin).num_days() as f64).collect();

    let mut columns = Vec::with_capacity(raw.features.len() + 1);
    let mut reports = Vec::with_capacity(raw.features.len() + 1);
    for (name, values) in raw.features.iter().zip(&raw.values) {
        let (c, r) = clean_column(name, values, &positions, gamma)?;
        columns.push(c);
        reports.push(r);
    }

    let mut aqi_clamped = 0;
    let (aqi, aqi_source) = match &raw.aqi {
        Some(values) => {
            let (c, r) = clean_column("AQI", values, &positions, gamma)?;
            reports.push(r);
            (c, AqiSource::Column)
        }
        None => {
            let mut out = Vec::with_capacity(raw.len());
            for t in 0..raw.len() {
                let row: Vec<(&str, f64)> = raw
                    .features
                    .iter()
                    .map(String::as_str)
                    .zip(columns.iter().map(|c| c[t]))
                    .collect();
                let v = compute_aqi(&row, table)?;
                aqi_clamped += v.clamped;
                out.push(v.aqi);
            }
            (out, AqiSource::Computed)
        }
    };
    columns.push(aqi);

    let mut names = raw.features.clone();
    names.push("AQI".into());
    let rows = (0..raw.len()).map(|t| columns.iter().map(|c| c[t]).collect()).collect();
    let series = CleanSeries {
        dates: raw.dates.clone(),
        columns: names,
        rows,
        target_column: raw.features.len(),
    };
    let report = PreprocessReport {
        rows: raw.len(),
        first_date: raw.dates[0],
        last_date: *raw.dates.last().expect("non-empty"),
        gamma,
        dropped_columns: raw.dropped_columns.clone(),
        aqi_source,
        aqi_clamped,
        features: reports,
        train_windows: 0,
        test_windows: 0,
    };
    Ok((series, report))
}

/// Full pipeline: clean, scale, window, split.
pub fn run_pipeline(raw: &RawSeries, options: &PipelineOptions, table: &BreakpointTable) -> Result<DatasetArchive> {
    let (series, mut report) = clean_series(raw, options.gamma, table)?;
    let (train, test) = scale_and_window(&series, options.seq_len, &options.split)?;
    report.train_windows = train.len();
    report.test_windows = test.len();
    Ok(DatasetArchive {
        format: ARCHIVE_FORMAT.into(),
        version: ARCHIVE_VERSION,
        columns: series.columns,
        options: options.clone(),
        scaler_fingerprint: train.scaler.fingerprint(),
        report,
        train,
        test,
    })
}

impl DatasetArchive {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("archive serializes");
        out.push(b'\n');
        out
    }

    /// SHA-256 of the serialized archive.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let archive: DatasetArchive = serde_json::from_slice(&bytes).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if archive.format != ARCHIVE_FORMAT || archive.version != ARCHIVE_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!(
                    "expected {ARCHIVE_FORMAT} v{ARCHIVE_VERSION}, found {} v{}",
                    archive.format, archive.version
                ),
            });
        }
        if archive.train.scaler.fingerprint() != archive.scaler_fingerprint {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: "scaler fingerprint does not match the stored scaler".into(),
            });
        }
        Ok(archive)
    }

    pub fn split(&self, tag: super::SplitTag) -> &WindowedDataset {
        match tag {
            super::SplitTag::Train => &self.train,
            super::SplitTag::Test => &self.test,
        }
    }
}
