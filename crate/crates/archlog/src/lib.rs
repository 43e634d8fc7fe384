//! File formats, stage drivers and the pipeline behind the `archlog` binary.
//!
//! Stages exchange newline-delimited JSON record streams (optionally gzip
//! compressed). Each stage output has a `.meta.json` sidecar, see
//! [`manifest`].
#![forbid(unsafe_code)]

pub mod clean;
pub mod config;
pub mod detect;
pub mod error;
pub mod ingest;
pub mod io;
pub mod manifest;
pub mod patterns;
pub mod pipeline;
pub mod records;
pub mod report;
pub mod sessionize;
pub mod synth_io;
pub mod temporal;

pub use error::{Error, Result};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutcome, StagePaths};
