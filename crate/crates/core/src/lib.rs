//! Sea-ice concentration monitoring along a grid of observation cells.
//!
//! The pipeline ingests daily concentration readings ([`ingest`]), keeps
//! them in an append-only checksummed store ([`store`]), fits per-point
//! state-space models ([`kalman`]) and turns their forecasts into hazard
//! probabilities and minimum-risk routes across the grid ([`risk`], [`grid`]).

pub mod error;
pub mod grid;
pub mod ingest;
pub mod kalman;
pub mod numfmt;
pub mod risk;
pub mod store;

pub use error::{Error, ErrorKind, Result};

/// Re-exported because model and state types expose `nalgebra` vectors.
pub use nalgebra;
