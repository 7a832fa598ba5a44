//! Experiment runner for the `iotids` command-line tool.
//!
//! A JSON [`PipelineConfig`] names a CSV dataset and a list of models. The
//! pipeline splits the data once, optionally grid-searches each model with
//! cross-validation on the training part, evaluates on the held-out part and
//! writes a JSON report, a comparison table and per-model ROC plots.

pub mod config;
pub mod error;
pub mod persist;
pub mod pipeline;
pub mod report;
pub mod svg;

pub use config::{ModelEntry, Overrides, PipelineConfig};
pub use error::{CliError, CliResult};
pub use persist::ModelFile;
pub use pipeline::{run_grid_search, run_pipeline, run_train};
pub use report::{comparison_text, evaluate, strip_timings, summarize_comparison, ComparisonRow, RunReport};
pub use svg::render_roc_svg;
