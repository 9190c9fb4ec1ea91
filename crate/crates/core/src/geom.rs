//! Axis-aligned box geometry.
//!
//! Boxes are stored top-left `xywh` like COCO files; the corner form is only
//! materialized inside the routines here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking a box against raster bounds.
const BOUNDS_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for BBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        BBox { x, y, w, h }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn x2(&self) -> f64 {
        self.x + self.w
    }

    pub fn y2(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    /// A box is usable for geometry when it is finite with positive extent.
    pub fn is_valid(&self) -> bool {
        self.is_finite() && self.w > 0.0 && self.h > 0.0
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Clip to `[0, width] x [0, height]`. Returns `None` if nothing with
    /// positive area remains.
    pub fn clamp_to(&self, width: u32, height: u32) -> Option<BBox> {
        let (wf, hf) = (f64::from(width), f64::from(height));
        let x1 = self.x.clamp(0.0, wf);
        let y1 = self.y.clamp(0.0, hf);
        let x2 = self.x2().clamp(0.0, wf);
        let y2 = self.y2().clamp(0.0, hf);
        let clamped = BBox::new(x1, y1, x2 - x1, y2 - y1);
        clamped.is_valid().then_some(clamped)
    }

    pub fn inside(&self, width: u32, height: u32) -> bool {
        self.x >= -BOUNDS_EPS
            && self.y >= -BOUNDS_EPS
            && self.x2() <= f64::from(width) + BOUNDS_EPS
            && self.y2() <= f64::from(height) + BOUNDS_EPS
    }

    /// Integer pixel rectangle covered by this box on a `width x height` grid.
    ///
    /// Dimensions are rounded to the nearest integer (at least 1); the origin is
    /// rounded and then shifted so the rectangle stays on the grid.
    pub fn pixel_rect(&self, width: u32, height: u32) -> Result<PixelRect> {
        if !self.is_valid() {
            return Err(Error::Geometry(format!("degenerate box {self:?}")));
        }
        if !self.inside(width, height) {
            return Err(Error::Geometry(format!(
                "box {self:?} lies outside a {width}x{height} raster"
            )));
        }
        let w = (self.w.round() as u32).clamp(1, width);
        let h = (self.h.round() as u32).clamp(1, height);
        let x = (self.x.round().max(0.0) as u32).min(width - w);
        let y = (self.y.round().max(0.0) as u32).min(height - h);
        Ok(PixelRect { x, y, w, h })
    }
}

/// Integer rectangle on a raster grid, always non-empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl PixelRect {
    pub fn contains(&self, px: u32, py: u32) -> bool {
        px >= self.x && px < self.x + self.w && py >= self.y && py < self.y + self.h
    }
}

/// Intersection over union of two boxes.
pub fn iou(a: &BBox, b: &BBox) -> Result<f64> {
    for bx in [a, b] {
        if !bx.is_valid() {
            return Err(Error::Geometry(format!("zero-area box {bx:?} in IoU")));
        }
    }
    Ok(iou_unchecked(a, b))
}

/// IoU without the positive-area check; degenerate inputs yield 0.
pub(crate) fn iou_unchecked(a: &BBox, b: &BBox) -> f64 {
    let iw = a.x2().min(b.x2()) - a.x.max(b.x);
    let ih = a.y2().min(b.y2()) - a.y.max(b.y);
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
