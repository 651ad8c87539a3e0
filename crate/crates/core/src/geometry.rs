//! Axis-aligned boxes in the original image's pixel frame.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Corner-format box with strictly positive area.
///
/// The constructor rejects degenerate boxes instead of clamping them, so any
/// `BBox` in circulation is croppable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BBox {
    x1: f32,
    y1: f32,
    x2: f32,
    y2: f32,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    x1: f32,
    y1: f32,
    x2: f32,
    y2: f32,
}

impl TryFrom<RawBox> for BBox {
    type Error = Error;

    fn try_from(r: RawBox) -> Result<Self> {
        BBox::new(r.x1, r.y1, r.x2, r.y2)
    }
}

impl From<BBox> for RawBox {
    fn from(b: BBox) -> Self {
        RawBox { x1: b.x1, y1: b.y1, x2: b.x2, y2: b.y2 }
    }
}

impl BBox {
    pub fn new(x1: f32, y1: f32, x2: f32, y2: f32) -> Result<Self> {
        let finite = x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite();
        if !finite || x2 <= x1 || y2 <= y1 {
            return Err(Error::InvalidBox { x1, y1, x2, y2 });
        }
        Ok(BBox { x1, y1, x2, y2 })
    }

    /// Builds a box from center, width and height.
    pub fn from_center(cx: f32, cy: f32, w: f32, h: f32) -> Result<Self> {
        BBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    }

    pub fn x1(&self) -> f32 {
        self.x1
    }

    pub fn y1(&self) -> f32 {
        self.y1
    }

    pub fn x2(&self) -> f32 {
        self.x2
    }

    pub fn y2(&self) -> f32 {
        self.y2
    }

    pub fn width(&self) -> f32 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f32 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f32 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f32, f32) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn corners(&self) -> [f32; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    /// Clamps to `[0, width] x [0, height]`. Returns `None` when nothing of
    /// positive area is left.
    pub fn clamp_to(&self, width: f32, height: f32) -> Option<BBox> {
        BBox::new(
            self.x1.clamp(0.0, width),
            self.y1.clamp(0.0, height),
            self.x2.clamp(0.0, width),
            self.y2.clamp(0.0, height),
        )
        .ok()
    }

    /// Grows the box by `factor` of its size on every side.
    pub fn expand(&self, factor: f32) -> BBox {
        if factor <= 0.0 {
            return *self;
        }
        let dx = self.width() * factor;
        let dy = self.height() * factor;
        BBox { x1: self.x1 - dx, y1: self.y1 - dy, x2: self.x2 + dx, y2: self.y2 + dy }
    }
}

/// Intersection over union. Symmetric bit-for-bit in its arguments.
pub fn iou(a: &BBox, b: &BBox) -> f32 {
    let iw = a.x2.min(b.x2) - a.x1.max(b.x1);
    let ih = a.y2.min(b.y2) - a.y1.max(b.y1);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x1: f32, y1: f32, x2: f32, y2: f32) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BBox::new(0.0, 0.0, 0.0, 10.0).is_err());
        assert!(BBox::new(0.0, 10.0, 5.0, 2.0).is_err());
        assert!(BBox::new(f32::NAN, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bb(20.0, 20.0, 30.0, 30.0)), 0.0);
        let third = iou(&a, &bb(5.0, 0.0, 15.0, 10.0));
        assert!((third - 1.0 / 3.0).abs() < 1e-6);
        // touching edges share no area
        assert_eq!(iou(&a, &bb(10.0, 0.0, 20.0, 10.0)), 0.0);
    }

    #[test]
    fn clamp_outside_is_none() {
        assert!(bb(200.0, 200.0, 300.0, 300.0).clamp_to(100.0, 100.0).is_none());
        let c = bb(-10.0, -10.0, 50.0, 50.0).clamp_to(100.0, 100.0).unwrap();
        assert_eq!(c.corners(), [0.0, 0.0, 50.0, 50.0]);
    }

    #[test]
    fn serde_rejects_invalid() {
        let ok: BBox = serde_json_free_parse(1.0, 2.0, 3.0, 4.0).unwrap();
        assert_eq!(ok.corners(), [1.0, 2.0, 3.0, 4.0]);
        assert!(serde_json_free_parse(3.0, 2.0, 1.0, 4.0).is_err());
    }

    fn serde_json_free_parse(x1: f32, y1: f32, x2: f32, y2: f32) -> Result<BBox> {
        BBox::try_from(RawBox { x1, y1, x2, y2 })
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (-100.0f32..100.0, -100.0f32..100.0, 0.1f32..80.0, 0.1f32..80.0)
            .prop_map(|(x, y, w, h)| bb(x, y, x + w, y + h))
    }

    proptest! {
        #[test]
        fn iou_is_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            prop_assert_eq!(ab.to_bits(), iou(&b, &a).to_bits());
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }
}
