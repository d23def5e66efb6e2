//! Event-driven spiking-network toolkit: file formats, dataset handling,
//! training orchestration, annotation and benchmarking around the
//! `evsnn-core` library, plus the `evsnn` command-line binary.
//!
//! The crate is organized by artifact:
//!
//! - [`evst`] — the binary event-stream format and its CSV importer
//! - [`weights`] — trained-weight files
//! - [`arch`] — plain-text network architecture descriptions
//! - [`config`] — training configuration files and flag merging
//! - [`dataset`] — dataset directories, synthetic generation, tensor prep
//! - [`annotate`] — pose-trace CSVs and slip-annotation output
//! - [`bench`] — the forward-pass latency harness
//! - [`curve`] — accuracy-over-time CSV output
//! - [`cli`] — the command-line front end over all of the above

pub mod annotate;
pub mod arch;
pub mod bench;
pub mod cli;
pub mod config;
pub mod curve;
pub mod dataset;
pub mod error;
pub mod evst;
pub mod weights;

pub use error::{AppError, Result};
