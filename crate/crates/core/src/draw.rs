//! Rendering verdicts back onto the frame.

use alloc::format;
use alloc::string::String;

use crate::roi::BehaviorVerdict;
use crate::{ClassLabel, ImageBuffer};

pub const CHEATING_COLOR: [u8; 3] = [255, 0, 0];
pub const NOT_CHEATING_COLOR: [u8; 3] = [0, 255, 0];
const TEXT_COLOR: [u8; 3] = [0, 0, 0];
const STROKE: i64 = 2;

const GLYPH_W: i64 = 5;
const GLYPH_H: i64 = 7;

// 5x7 bitmaps, one row per byte, bit 4 is the leftmost column.
fn glyph(c: char) -> [u8; 7] {
    match c {
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C],
        '_' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F],
        ' ' => [0x00; 7],
        'a' => [0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F],
        'c' => [0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E],
        'e' => [0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E],
        'g' => [0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E],
        'h' => [0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11],
        'i' => [0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E],
        'n' => [0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11],
        'o' => [0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E],
        't' => [0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06],
        _ => [0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F],
    }
}

/// `"<label> <probability of that label>"`, two decimals.
pub fn label_text(v: &BehaviorVerdict) -> String {
    format!("{} {:.2}", v.label.name(), v.confidence())
}

fn color_for(label: ClassLabel) -> [u8; 3] {
    match label {
        ClassLabel::Cheating => CHEATING_COLOR,
        ClassLabel::NotCheating => NOT_CHEATING_COLOR,
    }
}

fn fill_rect(img: &mut ImageBuffer, x0: i64, y0: i64, x1: i64, y1: i64, rgb: [u8; 3]) {
    for y in y0.max(0)..y1.min(img.height() as i64) {
        for x in x0.max(0)..x1.min(img.width() as i64) {
            img.put_pixel(x, y, rgb);
        }
    }
}

fn draw_text(img: &mut ImageBuffer, text: &str, left: i64, top: i64, scale: i64) {
    for (i, c) in text.chars().enumerate() {
        let gx = left + i as i64 * (GLYPH_W + 1) * scale;
        for (row, bits) in glyph(c).iter().enumerate() {
            for col in 0..GLYPH_W {
                if bits & (0x10 >> col) != 0 {
                    let x = gx + col * scale;
                    let y = top + row as i64 * scale;
                    fill_rect(img, x, y, x + scale, y + scale, TEXT_COLOR);
                }
            }
        }
    }
}

/// Draws each verdict's box and label onto a copy of `img`.
pub fn annotate(img: &ImageBuffer, verdicts: &[BehaviorVerdict]) -> ImageBuffer {
    let mut out = img.clone();
    let scale = if img.width().min(img.height()) >= 480 { 2 } else { 1 };
    for v in verdicts {
        let color = color_for(v.label);
        let x1 = libm::floorf(v.bbox.x1()) as i64;
        let y1 = libm::floorf(v.bbox.y1()) as i64;
        let x2 = (libm::ceilf(v.bbox.x2()) as i64).min(img.width() as i64);
        let y2 = (libm::ceilf(v.bbox.y2()) as i64).min(img.height() as i64);
        fill_rect(&mut out, x1, y1, x2, y1 + STROKE, color);
        fill_rect(&mut out, x1, y2 - STROKE, x2, y2, color);
        fill_rect(&mut out, x1, y1, x1 + STROKE, y2, color);
        fill_rect(&mut out, x2 - STROKE, y1, x2, y2, color);

        let text = label_text(v);
        let tw = text.chars().count() as i64 * (GLYPH_W + 1) * scale + scale;
        let th = (GLYPH_H + 2) * scale;
        // above the box, or just inside its top edge when that would clip
        let top = if y1 - th >= 0 { y1 - th } else { y1 + STROKE };
        fill_rect(&mut out, x1, top, x1 + tw, top + th, color);
        draw_text(&mut out, &text, x1 + scale, top + scale, scale);
    }
    out
}
