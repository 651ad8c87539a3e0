//! Stage 1 postprocessing: letterboxing, raw output decoding, NMS and the
//! person filter.
//!
//! Letterbox-frame coordinates stay inside this module. Every box that
//! leaves it is in the original image's pixel frame.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{BBox, Error, ImageBuffer, Result, TensorF32};

/// Gray used for letterbox padding, per channel.
pub const PAD_VALUE: u8 = 114;

pub const COCO_CLASSES: [&str; 80] = [
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck", "boat",
    "traffic light", "fire hydrant", "stop sign", "parking meter", "bench", "bird", "cat", "dog",
    "horse", "sheep", "cow", "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella",
    "handbag", "tie", "suitcase", "frisbee", "skis", "snowboard", "sports ball", "kite",
    "baseball bat", "baseball glove", "skateboard", "surfboard", "tennis racket", "bottle",
    "wine glass", "cup", "fork", "knife", "spoon", "bowl", "banana", "apple", "sandwich", "orange",
    "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair", "couch", "potted plant",
    "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote", "keyboard", "cell phone",
    "microwave", "oven", "toaster", "sink", "refrigerator", "book", "clock", "vase", "scissors",
    "teddy bear", "hair drier", "toothbrush",
];

/// Maps between the original frame and the square detector input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LetterboxParams {
    pub scale: f32,
    pub pad_left: u32,
    pub pad_top: u32,
    pub content_w: u32,
    pub content_h: u32,
    pub target_w: u32,
    pub target_h: u32,
}

impl LetterboxParams {
    /// Computes the mapping for an image of `width` x `height` into a
    /// `target` x `target` canvas. Odd remainders go to the right/bottom pad.
    pub fn compute(width: u32, height: u32, target: u32) -> Result<Self> {
        if target < 32 {
            return Err(Error::InvalidConfig(format!("letterbox target {target} < 32")));
        }
        if width == 0 || height == 0 {
            return Err(Error::ImageDims { width, height, len: 0 });
        }
        let scale = (target as f32 / width as f32).min(target as f32 / height as f32);
        let content_w = (libm::roundf(width as f32 * scale) as u32).clamp(1, target);
        let content_h = (libm::roundf(height as f32 * scale) as u32).clamp(1, target);
        Ok(LetterboxParams {
            scale,
            pad_left: (target - content_w) / 2,
            pad_top: (target - content_h) / 2,
            content_w,
            content_h,
            target_w: target,
            target_h: target,
        })
    }

    pub fn pad_right(&self) -> u32 {
        self.target_w - self.content_w - self.pad_left
    }

    pub fn pad_bottom(&self) -> u32 {
        self.target_h - self.content_h - self.pad_top
    }

    /// Original frame -> letterbox frame.
    pub fn forward(&self, x: f32, y: f32) -> (f32, f32) {
        (x * self.scale + self.pad_left as f32, y * self.scale + self.pad_top as f32)
    }

    /// Letterbox frame -> original frame.
    pub fn backward(&self, x: f32, y: f32) -> (f32, f32) {
        ((x - self.pad_left as f32) / self.scale, (y - self.pad_top as f32) / self.scale)
    }
}

/// Aspect-preserving resize onto a gray square canvas.
pub fn letterbox(img: &ImageBuffer, target: u32) -> Result<(ImageBuffer, LetterboxParams)> {
    let params = LetterboxParams::compute(img.width(), img.height(), target)?;
    let resized = img.resize_bilinear(params.content_w, params.content_h);
    let mut canvas = ImageBuffer::filled(target, target, [PAD_VALUE; 3])?;
    canvas.blit(&resized, params.pad_left, params.pad_top);
    Ok((canvas, params))
}

/// Channel-first `[1, 3, H, W]` tensor with samples scaled to `[0, 1]`.
pub fn to_input_tensor(img: &ImageBuffer) -> TensorF32 {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let plane = w * h;
    let mut data = alloc::vec![0.0f32; plane * 3];
    for (i, px) in img.data().chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * plane + i] = px[c] as f32 / 255.0;
        }
    }
    TensorF32::new(alloc::vec![1, 3, h, w], data).expect("shape matches data")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub conf_threshold: f32,
    pub iou_threshold: f32,
    pub person_class_id: usize,
    pub input_size: u32,
    pub num_classes: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            conf_threshold: 0.25,
            iou_threshold: 0.45,
            person_class_id: 0,
            input_size: 640,
            num_classes: COCO_CLASSES.len(),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f32| v > 0.0 && v < 1.0;
        if !open_unit(self.conf_threshold) {
            return Err(Error::InvalidConfig(format!("conf threshold {} not in (0, 1)", self.conf_threshold)));
        }
        if !open_unit(self.iou_threshold) {
            return Err(Error::InvalidConfig(format!("iou threshold {} not in (0, 1)", self.iou_threshold)));
        }
        if self.input_size < 32 {
            return Err(Error::InvalidConfig(format!("detector input size {} < 32", self.input_size)));
        }
        if self.person_class_id >= self.num_classes {
            return Err(Error::InvalidConfig("person class id outside vocabulary".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub class_id: usize,
    pub class_name: String,
    pub score: f32,
}

fn class_name(id: usize, num_classes: usize) -> String {
    if num_classes == COCO_CLASSES.len() {
        COCO_CLASSES[id].to_string()
    } else {
        format!("class{id}")
    }
}

/// Decodes a raw `[1, 4 + C, A]` detector output.
///
/// Each anchor column holds center-x, center-y, width, height in the
/// letterbox frame followed by `C` class scores. Anchors whose best class
/// score reaches the confidence threshold are mapped back to the original
/// frame and clamped to it; boxes left with less than one pixel of width or
/// height are dropped.
pub fn decode_detector_output(
    raw: &TensorF32,
    params: &LetterboxParams,
    cfg: &DetectorConfig,
    orig_w: u32,
    orig_h: u32,
) -> Result<Vec<Detection>> {
    let shape = raw.shape();
    let rows = 4 + cfg.num_classes;
    if shape.len() != 3 || shape[0] != 1 || shape[1] != rows {
        return Err(Error::ShapeMismatch { expected: format!("[1, {rows}, A]"), actual: shape.to_vec() });
    }
    let anchors = shape[2];
    let data = raw.data();
    let at = |row: usize, a: usize| data[row * anchors + a];
    let (ow, oh) = (orig_w as f32, orig_h as f32);

    let mut out = Vec::new();
    for a in 0..anchors {
        let mut best = (0usize, f32::NEG_INFINITY);
        for c in 0..cfg.num_classes {
            let s = at(4 + c, a);
            if s > best.1 {
                best = (c, s);
            }
        }
        let (class_id, score) = best;
        if score.partial_cmp(&cfg.conf_threshold).is_none_or(|o| o.is_lt()) {
            continue;
        }
        let (cx, cy, w, h) = (at(0, a), at(1, a), at(2, a), at(3, a));
        let (x1, y1) = params.backward(cx - w / 2.0, cy - h / 2.0);
        let (x2, y2) = params.backward(cx + w / 2.0, cy + h / 2.0);
        let (x1, x2) = (x1.clamp(0.0, ow), x2.clamp(0.0, ow));
        let (y1, y2) = (y1.clamp(0.0, oh), y2.clamp(0.0, oh));
        if !(x2 - x1 >= 1.0 && y2 - y1 >= 1.0) {
            continue;
        }
        let Ok(bbox) = BBox::new(x1, y1, x2, y2) else { continue };
        out.push(Detection {
            bbox,
            class_id,
            class_name: class_name(class_id, cfg.num_classes),
            score: score.min(1.0),
        });
    }
    Ok(out)
}

/// Orders by score descending, ties by original position.
fn by_score(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));
    order
}

/// Greedy per-class non-maximum suppression.
///
/// Output is sorted by score descending (ties keep input order); a box is
/// dropped when a kept box of the same class overlaps it with IoU strictly
/// above `iou_threshold`.
pub fn nms(dets: &[Detection], iou_threshold: f32) -> Vec<Detection> {
    let mut kept: Vec<usize> = Vec::new();
    for i in by_score(dets) {
        let suppressed = kept.iter().any(|&k| {
            dets[k].class_id == dets[i].class_id
                && crate::iou(&dets[k].bbox, &dets[i].bbox) > iou_threshold
        });
        if !suppressed {
            kept.push(i);
        }
    }
    kept.into_iter().map(|i| dets[i].clone()).collect()
}

/// Keeps the boxes of person detections, in input order.
pub fn filter_person(dets: &[Detection], cfg: &DetectorConfig) -> Vec<BBox> {
    dets.iter()
        .filter(|d| d.class_id == cfg.person_class_id)
        .map(|d| d.bbox)
        .collect()
}
