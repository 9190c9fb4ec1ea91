use serde::{Deserialize, Serialize};

use crate::category::Category;
use crate::error::{Error, Result};
use crate::geom::BBox;

/// A scored detection proposed by a teacher model.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoLabel {
    pub image_id: u64,
    pub bbox: BBox,
    pub category: Category,
    pub confidence: f64,
}

impl PseudoLabel {
    pub fn new(image_id: u64, bbox: BBox, category: Category, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::Argument(format!(
                "confidence {confidence} outside [0, 1]"
            )));
        }
        if !bbox.is_valid() {
            return Err(Error::Geometry(format!(
                "degenerate pseudo-label box {bbox:?}"
            )));
        }
        Ok(PseudoLabel {
            image_id,
            bbox,
            category,
            confidence,
        })
    }

    /// Region key `"<image_id>:<x>:<y>:<w>:<h>"` with two decimals per value.
    pub fn digest(&self) -> String {
        box_digest(self.image_id, &self.bbox)
    }
}

pub fn box_digest(image_id: u64, b: &BBox) -> String {
    format!("{image_id}:{:.2}:{:.2}:{:.2}:{:.2}", b.x, b.y, b.w, b.h)
}

/// Flat JSON view used for audit traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub image_id: u64,
    pub bbox: BBox,
    pub category: String,
    pub confidence: f64,
}

impl From<&PseudoLabel> for LabelRecord {
    fn from(l: &PseudoLabel) -> Self {
        LabelRecord {
            image_id: l.image_id,
            bbox: l.bbox,
            category: l.category.name(),
            confidence: l.confidence,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::FoodType;

    #[test]
    fn digest_format() {
        let l = PseudoLabel::new(
            12,
            BBox::new(1.0, 2.5, 3.333, 40.0),
            Category::normal(FoodType::Plum),
            0.5,
        )
        .unwrap();
        assert_eq!(l.digest(), "12:1.00:2.50:3.33:40.00");
    }

    #[test]
    fn confidence_range_checked() {
        let c = Category::normal(FoodType::Plum);
        let b = BBox::new(0.0, 0.0, 1.0, 1.0);
        assert!(PseudoLabel::new(1, b, c.clone(), 1.0).is_ok());
        assert!(PseudoLabel::new(1, b, c.clone(), 0.0).is_ok());
        assert!(PseudoLabel::new(1, b, c.clone(), 1.01).is_err());
        assert!(PseudoLabel::new(1, b, c, -0.1).is_err());
    }
}
