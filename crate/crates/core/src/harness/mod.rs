//! Monte-Carlo block-error-rate estimation, sweeps and report emission.

mod emit;
mod estimate;
mod experiment;
mod report;

pub use emit::{
    emit, read_csv, read_json, write_csv, write_json, InfTag, OutputFormat, ReportRow, SnrFb,
    CSV_COLUMNS,
};
pub use estimate::{
    estimate_bler, estimate_with_codec, sweep, td_baseline, worker_count, TrialCodec,
};
pub use experiment::{Experiment, Scheme};
pub use report::{wilson_interval, BlerReport, WILSON_Z95};
