//! Stage 2 input preparation and the binary verdict.

use alloc::format;
use alloc::vec;

use serde::{Deserialize, Serialize};

use crate::{BBox, ClassLabel, Error, ImageBuffer, Result, TensorF32};

pub const ROI_SIZE: u32 = 224;
pub const IMAGENET_MEAN: [f32; 3] = [0.485, 0.456, 0.406];
pub const IMAGENET_STD: [f32; 3] = [0.229, 0.224, 0.225];

/// Per-channel normalization applied after scaling samples to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl Default for NormalizationSpec {
    fn default() -> Self {
        NormalizationSpec { mean: IMAGENET_MEAN, std: IMAGENET_STD }
    }
}

impl NormalizationSpec {
    pub fn new(mean: [f32; 3], std: [f32; 3]) -> Result<Self> {
        if std.iter().any(|s| *s <= 0.0 || !s.is_finite()) || mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidConfig(format!("normalization std must be positive, got {std:?}")));
        }
        Ok(NormalizationSpec { mean, std })
    }
}

/// Classifier input, always `[1, 3, 224, 224]`, RGB planes.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiTensor(TensorF32);

impl RoiTensor {
    pub const SHAPE: [usize; 4] = [1, 3, ROI_SIZE as usize, ROI_SIZE as usize];

    pub fn new(tensor: TensorF32) -> Result<Self> {
        if tensor.shape() != Self::SHAPE {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", Self::SHAPE),
                actual: tensor.shape().to_vec(),
            });
        }
        Ok(RoiTensor(tensor))
    }

    pub fn tensor(&self) -> &TensorF32 {
        &self.0
    }

    pub fn into_tensor(self) -> TensorF32 {
        self.0
    }
}

/// Cuts the person out of the frame, optionally grown by `expand` of the
/// box size on each side before clamping.
pub fn crop(img: &ImageBuffer, bbox: &BBox, expand: f32) -> Result<ImageBuffer> {
    img.crop(&bbox.expand(expand))
}

/// Direct stretch to 224x224, scale to `[0, 1]`, then `(v - mean) / std`.
pub fn preprocess_roi(crop: &ImageBuffer, spec: &NormalizationSpec) -> RoiTensor {
    let side = ROI_SIZE as usize;
    let plane = side * side;
    let resized = crop.resize_bilinear_f32(ROI_SIZE, ROI_SIZE);
    let mut data = vec![0.0f32; plane * 3];
    for (i, px) in resized.chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * plane + i] = (px[c] / 255.0 - spec.mean[c]) / spec.std[c];
        }
    }
    RoiTensor(TensorF32::new(RoiTensor::SHAPE.to_vec(), data).expect("fixed shape"))
}

/// Two-way softmax, returned as `(p_not_cheating, p_cheating)`.
pub fn softmax2(logit_not_cheating: f32, logit_cheating: f32) -> (f64, f64) {
    let diff = logit_not_cheating as f64 - logit_cheating as f64;
    let p_cheating = 1.0 / (1.0 + libm::exp(diff));
    (1.0 - p_cheating, p_cheating)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorVerdict {
    pub label: ClassLabel,
    pub prob_cheating: f64,
    pub prob_not_cheating: f64,
    pub bbox: BBox,
}

impl BehaviorVerdict {
    /// Builds the verdict from the classifier's two logits, index order
    /// `[not_cheating, cheating]`. A probability exactly at the threshold
    /// counts as cheating.
    pub fn from_logits(logits: &[f32], bbox: BBox, threshold: f64) -> Result<Self> {
        let [l0, l1] = logits else {
            return Err(Error::ShapeMismatch { expected: "2 logits".into(), actual: vec![logits.len()] });
        };
        let (prob_not_cheating, prob_cheating) = softmax2(*l0, *l1);
        let label = if prob_cheating >= threshold { ClassLabel::Cheating } else { ClassLabel::NotCheating };
        Ok(BehaviorVerdict { label, prob_cheating, prob_not_cheating, bbox })
    }

    /// Probability of the predicted label.
    pub fn confidence(&self) -> f64 {
        match self.label {
            ClassLabel::Cheating => self.prob_cheating,
            ClassLabel::NotCheating => self.prob_not_cheating,
        }
    }
}
