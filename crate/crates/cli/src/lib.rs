//! Configuration, pipeline orchestration and report emission for the
//! blow-up laboratory.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod plot;

pub use config::{RunConfig, OUTPUT_ROOT_ENV};
pub use output::{write_bundle, FileEntry};
pub use pipeline::{run_pipeline, Bundle, ProbeReport, RunSummary};
pub use plot::emit_plot_data;
