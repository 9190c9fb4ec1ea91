use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::category::{Category, FoodType};
use crate::error::{Error, Result};
use crate::geom::BBox;
use crate::rng::Seed;

/// Region footprint on the synthetic canvas.
const REGION_SIZE: f64 = 32.0;
const REGION_PITCH: f64 = 40.0;

/// Feature-space shift applied to the unlabeled and held-out streams:
/// `x' = scale * x + offset` on every dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainShift {
    pub offset: f64,
    pub scale: f64,
}

impl Default for DomainShift {
    fn default() -> Self {
        DomainShift {
            offset: 0.0,
            scale: 1.0,
        }
    }
}

impl DomainShift {
    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.offset
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamSpec {
    pub labeled_scenes: usize,
    pub unlabeled_scenes: usize,
    pub heldout_scenes: usize,
    pub regions_per_scene: usize,
    pub feature_dim: usize,
    pub foods: Vec<FoodType>,
    /// Defect tokens shared by every food; `normal` is always added.
    pub defects: Vec<String>,
    /// Distance of every class mean from the origin.
    pub class_spread: f64,
    /// Within-class standard deviation.
    pub noise: f64,
    pub shift: DomainShift,
}

impl Default for StreamSpec {
    fn default() -> Self {
        StreamSpec {
            labeled_scenes: 30,
            unlabeled_scenes: 120,
            heldout_scenes: 200,
            regions_per_scene: 4,
            feature_dim: 8,
            foods: vec![FoodType::Apple, FoodType::Pear, FoodType::Peach],
            defects: vec!["rot".into()],
            class_spread: 3.0,
            noise: 0.25,
            shift: DomainShift::default(),
        }
    }
}

impl StreamSpec {
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

    pub fn validate(&self) -> Result<()> {
        if self.foods.is_empty() {
            return Err(Error::Argument("stream needs at least one food".into()));
        }
        if self.feature_dim == 0 || self.regions_per_scene == 0 {
            return Err(Error::Argument(
                "feature_dim and regions_per_scene must be positive".into(),
            ));
        }
        let c = self.foods.len() * (self.defects.len() + 1);
        if self.feature_dim < c {
            return Err(Error::Argument(format!(
                "feature_dim {} below category count {c}",
                self.feature_dim
            )));
        }
        if !(self.class_spread >= 0.0) || !(self.noise >= 0.0) {
            return Err(Error::Argument(
                "spread and noise must be non-negative".into(),
            ));
        }
        if !(self.shift.scale.is_finite() && self.shift.offset.is_finite()) {
            return Err(Error::Argument("domain shift must be finite".into()));
        }
        Ok(())
    }

    pub fn canvas_size(&self) -> (u32, u32) {
        (
            (REGION_PITCH * self.regions_per_scene as f64) as u32,
            REGION_PITCH as u32,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRegion {
    pub bbox: BBox,
    pub feature: Vec<f64>,
    /// Ground truth; never used as a training target on unlabeled scenes.
    pub truth: Category,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub image_id: u64,
    pub regions: Vec<SceneRegion>,
    /// Whether the domain shift was applied.
    pub shifted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticStreams {
    pub categories: Vec<Category>,
    pub labeled: Vec<SyntheticScene>,
    pub unlabeled: Vec<SyntheticScene>,
    pub heldout: Vec<SyntheticScene>,
}

/// Vertices of a regular simplex on the first `c` axes, centred and scaled
/// to norm `radius`; remaining dimensions carry noise only.
fn simplex_means(c: usize, dim: usize, radius: f64) -> Vec<Vec<f64>> {
    let norm = if c > 1 {
        ((c - 1) as f64 / c as f64).sqrt()
    } else {
        1.0
    };
    (0..c)
        .map(|k| {
            (0..dim)
                .map(|i| match i {
                    _ if i >= c || c == 1 => 0.0,
                    _ if i == k => radius * (1.0 - 1.0 / c as f64) / norm,
                    _ => -radius / c as f64 / norm,
                })
                .collect()
        })
        .collect()
}

/// Category-balanced Gaussian clusters: scene `k` shows food `k mod F`,
/// region `j` the condition `(j + k) mod (D + 1)`.
pub fn gen_synthetic_stream(spec: &StreamSpec, seed: Seed) -> Result<SyntheticStreams> {
    spec.validate()?;
    let categories = spec.categories();
    let conds_per_food = spec.defects.len() + 1;
    let unit = Normal::new(0.0, 1.0).map_err(|e| Error::Argument(e.to_string()))?;

    let means = simplex_means(categories.len(), spec.feature_dim, spec.class_spread);

    let make = |purpose: &str, count: usize, first_id: u64, shift: Option<DomainShift>| {
        (0..count)
            .map(|k| {
                let image_id = first_id + k as u64;
                let mut rng = seed.stream(purpose, k as u64);
                let food_idx = k % spec.foods.len();
                let regions = (0..spec.regions_per_scene)
                    .map(|j| {
                        let cat_idx = food_idx * conds_per_food + (j + k) % conds_per_food;
                        let feature = means[cat_idx]
                            .iter()
                            .map(|m| {
                                let x = m + spec.noise * unit.sample(&mut rng);
                                shift.map_or(x, |s| s.apply(x))
                            })
                            .collect();
                        SceneRegion {
                            bbox: BBox::new(j as f64 * REGION_PITCH, 0.0, REGION_SIZE, REGION_SIZE),
                            feature,
                            truth: categories[cat_idx].clone(),
                        }
                    })
                    .collect();
                SyntheticScene {
                    image_id,
                    regions,
                    shifted: shift.is_some(),
                }
            })
            .collect::<Vec<_>>()
    };

    let n_l = spec.labeled_scenes as u64;
    let n_u = spec.unlabeled_scenes as u64;
    Ok(SyntheticStreams {
        labeled: make("labeled", spec.labeled_scenes, 1, None),
        unlabeled: make(
            "unlabeled",
            spec.unlabeled_scenes,
            1 + n_l,
            Some(spec.shift),
        ),
        heldout: make(
            "heldout",
            spec.heldout_scenes,
            1 + n_l + n_u,
            Some(spec.shift),
        ),
        categories,
    })
}
