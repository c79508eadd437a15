//! Daily pollutant CSV → cleaned, scaled, windowed datasets.
//!
//! The pipeline order is fixed: load, z-score outlier removal (cell-wise,
//! single pass), linear interpolation over day offsets, min-max scaling
//! fitted on the training period, then `seq_len`-day windows that predict
//! the next row's AQI.

mod aqi;
mod clean;
mod dataset;
mod ingest;
mod pipeline;

pub use aqi::{compute_aqi, max_sub_index, AqiValue, BreakpointTable, PollutantBreakpoints, Segment, SubIndex};
pub use clean::{interpolate, zscore_filter, ZscoreReport};
pub use dataset::{scale_and_window, CleanSeries, MinMaxScaler, SplitRule, SplitTag, Window, WindowedDataset};
pub use ingest::{load_csv, read_csv, RawSeries, Schema, CPCB_FEATURES};
pub use pipeline::{
    clean_series, run_pipeline, AqiSource, DatasetArchive, FeatureReport, PipelineOptions, PreprocessReport,
    ARCHIVE_FORMAT, ARCHIVE_VERSION,
};
