//! Host-side companion to `tokvec-core`: vector and snapshot files, parallel
//! batch search, the quality/speed evaluation harness, and the `tokvec` CLI.

pub mod batch;
pub mod cli;
mod error;
pub mod eval;
pub mod report;
pub mod snapshot;
pub mod synth;
pub mod vectors;

pub use batch::{batch_search, parallel_phase1, MonotonicClock, SharedIndex};
pub use error::{Error, Result};
pub use snapshot::{load_snapshot, save_snapshot};
pub use tokvec_core as core;
