//! 8-bit RGB rasters and the resampling used by both stages.

use alloc::vec;
use alloc::vec::Vec;

use crate::{BBox, Error, Result};

/// Row-major interleaved RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl ImageBuffer {
    pub const CHANNELS: usize = 3;

    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let expected = width as usize * height as usize * Self::CHANNELS;
        if width == 0 || height == 0 || data.len() != expected {
            return Err(Error::ImageDims { width, height, len: data.len() });
        }
        Ok(ImageBuffer { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..(width as usize * height as usize) {
            data.extend_from_slice(&rgb);
        }
        ImageBuffer::new(width, height, data)
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        ImageBuffer::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let o = self.offset(x, y);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    /// Writes a pixel; out-of-bounds writes are ignored.
    pub fn put_pixel(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let o = self.offset(x as u32, y as u32);
        self.data[o..o + 3].copy_from_slice(&rgb);
    }

    /// Sub-image under `bbox`, after clamping to the image and rounding the
    /// corners to whole pixels.
    pub fn crop(&self, bbox: &BBox) -> Result<ImageBuffer> {
        let (w, h) = (self.width as f32, self.height as f32);
        let x1 = libm::roundf(bbox.x1().clamp(0.0, w)) as u32;
        let y1 = libm::roundf(bbox.y1().clamp(0.0, h)) as u32;
        let x2 = libm::roundf(bbox.x2().clamp(0.0, w)) as u32;
        let y2 = libm::roundf(bbox.y2().clamp(0.0, h)) as u32;
        if x2 <= x1 || y2 <= y1 {
            return Err(Error::EmptyAfterClamp);
        }
        let (cw, ch) = (x2 - x1, y2 - y1);
        let mut data = Vec::with_capacity(cw as usize * ch as usize * 3);
        for y in y1..y2 {
            let start = self.offset(x1, y);
            data.extend_from_slice(&self.data[start..start + cw as usize * 3]);
        }
        ImageBuffer::new(cw, ch, data)
    }

    /// Bilinear resample with half-pixel centers, returned as interleaved
    /// f32 samples on the 0..=255 scale.
    pub fn resize_bilinear_f32(&self, out_w: u32, out_h: u32) -> Vec<f32> {
        let xs = sample_axis(self.width, out_w);
        let ys = sample_axis(self.height, out_h);
        let mut out = vec![0.0f32; out_w as usize * out_h as usize * 3];
        let row = self.width as usize * 3;
        for (oy, &(y0, y1, fy)) in ys.iter().enumerate() {
            let r0 = &self.data[y0 * row..(y0 + 1) * row];
            let r1 = &self.data[y1 * row..(y1 + 1) * row];
            for (ox, &(x0, x1, fx)) in xs.iter().enumerate() {
                let o = (oy * out_w as usize + ox) * 3;
                for c in 0..3 {
                    let p00 = r0[x0 * 3 + c] as f32;
                    let p01 = r0[x1 * 3 + c] as f32;
                    let p10 = r1[x0 * 3 + c] as f32;
                    let p11 = r1[x1 * 3 + c] as f32;
                    let top = p00 + (p01 - p00) * fx;
                    let bottom = p10 + (p11 - p10) * fx;
                    out[o + c] = top + (bottom - top) * fy;
                }
            }
        }
        out
    }

    pub fn resize_bilinear(&self, out_w: u32, out_h: u32) -> ImageBuffer {
        if out_w == self.width && out_h == self.height {
            return self.clone();
        }
        let data = self
            .resize_bilinear_f32(out_w, out_h)
            .into_iter()
            .map(|v| libm::roundf(v).clamp(0.0, 255.0) as u8)
            .collect();
        ImageBuffer { width: out_w, height: out_h, data }
    }

    /// Copies `src` into `self` with its top-left corner at `(left, top)`.
    pub fn blit(&mut self, src: &ImageBuffer, left: u32, top: u32) {
        let w = src.width.min(self.width.saturating_sub(left)) as usize;
        for y in 0..src.height {
            let dy = top + y;
            if dy >= self.height {
                break;
            }
            let s = src.offset(0, y);
            let d = self.offset(left, dy);
            self.data[d..d + w * 3].copy_from_slice(&src.data[s..s + w * 3]);
        }
    }
}

fn sample_axis(src: u32, dst: u32) -> Vec<(usize, usize, f32)> {
    let scale = src as f32 / dst as f32;
    let last = src as usize - 1;
    (0..dst)
        .map(|i| {
            let pos = ((i as f32 + 0.5) * scale - 0.5).max(0.0);
            let i0 = (libm::floorf(pos) as usize).min(last);
            let i1 = (i0 + 1).min(last);
            (i0, i1, pos - i0 as f32)
        })
        .collect()
}
