#![allow(dead_code)]

use std::path::{Path, PathBuf};

use proctorpipe::runtime::{load_model, ModelSession};
use proctorpipe_core::ImageBuffer;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn detector_path() -> PathBuf {
    fixtures().join("toy_detector.onnx")
}

pub fn classifier_path() -> PathBuf {
    fixtures().join("toy_classifier.onnx")
}

pub fn sessions() -> (ModelSession, ModelSession) {
    (load_model(detector_path()).unwrap(), load_model(classifier_path()).unwrap())
}

pub fn solid(w: u32, h: u32, v: u8) -> ImageBuffer {
    ImageBuffer::filled(w, h, [v, v, v]).unwrap()
}

/// Deterministic bright texture; every pixel stays well above mid-grey so
/// the toy classifier always says cheating.
pub fn bright_frame(w: u32, h: u32, seed: u32) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, |x, y| {
        let v = 200 + ((x * 7 + y * 13 + seed * 31) % 56) as u8;
        [v, v.wrapping_sub(3), v.wrapping_sub(7)]
    })
    .unwrap()
}

/// The two toy persons mapped back into a 640x480 frame.
pub const PERSON_BOXES_640X480: [[f32; 4]; 2] = [[96.0, 112.0, 224.0, 368.0], [416.0, 112.0, 544.0, 368.0]];
