//! Reproducible experiment runner: configuration, dispatch to the estimators,
//! per-trial CSV, JSON summary, manifest and plot data.

pub mod config;
pub mod plot;
pub mod run;

pub use config::{ChainSpec, ExperimentConfig, ExperimentKind, ScanSpec, StartSpec, TopologySpec};
pub use plot::emit_plotdata;
pub use run::{
    compute, read_manifest, run, Computed, OutputFile, RunManifest, Table, CSV_SCHEMA_VERSION,
};
