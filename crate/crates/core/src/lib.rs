//! Pure algorithmic core of the two-stage proctoring pipeline.
//!
//! Everything here is `no_std` with `alloc`: geometry, letterboxing, detector
//! output decoding, non-maximum suppression, ROI preprocessing, the binary
//! behavior verdict, label harmonization, dataset splitting, evaluation
//! metrics, latency statistics, seat assignment and annotation rendering.
//! File formats, model execution and the command line live in the
//! `proctorpipe` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bench;
pub mod dataset;
pub mod detection;
pub mod draw;
mod error;
pub mod geometry;
pub mod image;
pub mod label;
pub mod metrics;
pub mod roi;
pub mod seats;
pub mod tensor;

pub use error::{Error, Result};
pub use geometry::{iou, BBox};
pub use image::ImageBuffer;
pub use label::ClassLabel;
pub use tensor::TensorF32;
