//! Synthetic detection datasets: flat-colored rectangles on a plain canvas.
//!
//! Every image shows a single food. Instance counts are spread as evenly as
//! possible, and exactly `defect_images` images carry at least one defect box.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::category::{Category, CategoryRegistry, FoodType};
use crate::dataset::{Annotation, Dataset, ImageRecord};
use crate::error::{Error, Result};
use crate::geom::BBox;
use crate::raster::{Raster, RasterStore, Rgb};
use crate::rng::Seed;

const MIN_SIDE: u32 = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub images: usize,
    pub instances: usize,
    pub defect_images: usize,
    pub width: u32,
    pub height: u32,
    pub foods: Vec<FoodType>,
    pub defects: Vec<String>,
    /// Probability that a box after the first in a defect image is defective.
    pub defect_rate: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            images: 20,
            instances: 120,
            defect_images: 8,
            width: 128,
            height: 96,
            foods: FoodType::ALL.to_vec(),
            defects: vec!["rot".into(), "mold".into(), "bruise".into()],
            defect_rate: 0.3,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.foods.is_empty() {
            return Err(Error::Argument(
                "synthetic dataset needs at least one food".into(),
            ));
        }
        if self.width < 2 * MIN_SIDE || self.height < 2 * MIN_SIDE {
            return Err(Error::Argument(format!(
                "canvas {}x{} is smaller than {}x{}",
                self.width,
                self.height,
                2 * MIN_SIDE,
                2 * MIN_SIDE
            )));
        }
        let occupied = self.images.min(self.instances);
        if self.defect_images > occupied {
            return Err(Error::Argument(format!(
                "{} defect images requested but only {occupied} images hold instances",
                self.defect_images
            )));
        }
        if self.defect_images > 0 && self.defects.is_empty() {
            return Err(Error::Argument(
                "defect images requested without defect tokens".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.defect_rate) {
            return Err(Error::Argument(format!(
                "defect rate {} outside [0, 1]",
                self.defect_rate
            )));
        }
        Ok(())
    }

    pub fn categories(&self) -> Vec<Category> {
        let mut out = Vec::with_capacity(self.foods.len() * (self.defects.len() + 1));
        for &f in &self.foods {
            out.push(Category::normal(f));
            for d in &self.defects {
                out.push(Category::defect(f, d.clone()));
            }
        }
        out
    }
}

fn color_of(food: FoodType, defect_rank: Option<usize>) -> Rgb {
    let i = FoodType::ALL.iter().position(|&f| f == food).unwrap_or(0) as u32;
    // Spread foods around the hue circle; defects darken toward brown.
    let h = (i * 360 / FoodType::ALL.len() as u32) as f64;
    let sector = h / 60.0;
    let x = 1.0 - (sector % 2.0 - 1.0).abs();
    let (r, g, b) = match sector as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let k = match defect_rank {
        None => 1.0,
        Some(d) => 0.55 / (1.0 + d as f64 * 0.5),
    };
    let ch = |v: f64| (40.0 + 200.0 * v * k).round() as u8;
    [ch(r), ch(g), ch(b)]
}

fn random_box<R: Rng>(rng: &mut R, w: u32, h: u32) -> BBox {
    let bw = rng.random_range(MIN_SIDE..=(w / 2));
    let bh = rng.random_range(MIN_SIDE..=(h / 2));
    let x = rng.random_range(0..=(w - bw));
    let y = rng.random_range(0..=(h - bh));
    BBox::new(x as f64, y as f64, bw as f64, bh as f64)
}

/// A dataset, plus rasters when `with_rasters` is set.
pub fn gen_synthetic_dataset(
    spec: &SynthSpec,
    with_rasters: bool,
) -> Result<(Dataset, RasterStore)> {
    spec.validate()?;
    let seed = Seed(spec.seed);
    let registry = CategoryRegistry::from_categories(spec.categories())?;

    let n = spec.images;
    let base = spec.instances.checked_div(n).unwrap_or(0);
    let extra = spec.instances.checked_rem(n).unwrap_or(0);
    let counts: Vec<usize> = (0..n).map(|i| base + usize::from(i < extra)).collect();

    let mut occupied: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
    occupied.shuffle(&mut seed.stream("synth-defect-images", 0));
    let mut is_defect = vec![false; n];
    for &i in occupied.iter().take(spec.defect_images) {
        is_defect[i] = true;
    }

    let mut images = Vec::with_capacity(n);
    let mut annotations = Vec::with_capacity(spec.instances);
    let mut rasters = RasterStore::new();
    for i in 0..n {
        let id = i as u64 + 1;
        let mut rng = seed.stream("synth-image", id);
        let food = spec.foods[rng.random_range(0..spec.foods.len())];
        images.push(ImageRecord::new(
            id,
            format!("synth_{id:06}.ppm"),
            spec.width,
            spec.height,
        ));
        let shade = rng.random_range(16..=48u8);
        let mut canvas =
            with_rasters.then(|| Raster::filled(spec.width, spec.height, [shade, shade, shade]));
        for j in 0..counts[i] {
            let bbox = random_box(&mut rng, spec.width, spec.height);
            let defect = is_defect[i] && (j == 0 || rng.random::<f64>() < spec.defect_rate);
            let (category, rank) = if defect {
                let d = rng.random_range(0..spec.defects.len());
                (Category::defect(food, spec.defects[d].clone()), Some(d))
            } else {
                (Category::normal(food), None)
            };
            if let Some(c) = canvas.as_mut() {
                c.fill_rect(
                    bbox.x as u32,
                    bbox.y as u32,
                    bbox.w as u32,
                    bbox.h as u32,
                    color_of(food, rank),
                );
            }
            annotations.push(Annotation::new(
                annotations.len() as u64 + 1,
                id,
                bbox,
                category,
            ));
        }
        if let Some(c) = canvas {
            rasters.insert(id, c);
        }
    }
    Ok((Dataset::new(images, annotations, registry)?, rasters))
}
