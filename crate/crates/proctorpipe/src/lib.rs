//! Two-stage exam-proctoring pipeline: person detection, per-person
//! behavior classification, dataset tooling, evaluation and private
//! per-student reports.

mod error;

pub mod cli;
pub mod config;
pub mod datakit;
pub mod delivery;
pub mod evaluate;
pub mod formats;
pub mod pipeline;
pub mod runtime;

pub use error::{Error, Result};
