//! Experiment harness: dataset I/O, binarization and splitting, synthetic data,
//! grid search and report writing.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod model;
pub mod protocol;
pub mod report;
pub mod synth;

pub use dataset::{load_dataset, load_features, write_dataset, DatasetFormat, LdlDataset};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport};
pub use grid::{grid_search, CellRecord, GridResult, GridSpec};
pub use model::ModelFile;
pub use protocol::{binarize, split, with_binarized_labels, SplitSpec, DEFAULT_DELTA};
pub use report::{read_report, write_report, ReportFormat};
pub use synth::{synth_dataset, SynthSpec};
