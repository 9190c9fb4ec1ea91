//! Localized same-class box mixing.
//!
//! Every box of the same food x condition category forms a pool. A target box
//! draws a partner from another image in its pool, the partner's pixels are
//! resampled to the target's size, and the target region becomes
//! `lambda * target + (1 - lambda) * partner` with `lambda ~ Beta(alpha, beta)`.
//! Labels never change.

mod blend;
mod pool;
mod ratio;

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use blend::{mix_region, mix_region_in_place, resize_region};
pub use pool::{build_class_pools, select_candidate, AnnotationRef, ClassPool};
pub use ratio::sample_beta;

use crate::dataset::{Annotation, Dataset};
use crate::error::{Error, Result};
use crate::raster::RasterStore;
use crate::rng::Seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixParams {
    pub alpha: f64,
    pub beta: f64,
    /// Probability that a given box is mixed.
    pub apply_prob: f64,
    pub seed: u64,
    /// Leave normal-condition boxes untouched.
    pub defects_only: bool,
    /// Use this ratio instead of sampling one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_ratio: Option<f64>,
}

impl Default for MixParams {
    fn default() -> Self {
        MixParams {
            alpha: 1.0,
            beta: 1.0,
            apply_prob: 0.5,
            seed: 0,
            defects_only: false,
            fixed_ratio: None,
        }
    }
}

impl MixParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Argument(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Argument(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        if !(0.0..=1.0).contains(&self.apply_prob) {
            return Err(Error::Argument(format!(
                "apply probability {} outside [0, 1]",
                self.apply_prob
            )));
        }
        if let Some(l) = self.fixed_ratio {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::Argument(format!("fixed ratio {l} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Draw a mixing ratio according to `params`.
pub fn sample_mix_ratio<R: Rng + ?Sized>(params: &MixParams, rng: &mut R) -> Result<f64> {
    match params.fixed_ratio {
        Some(l) if (0.0..=1.0).contains(&l) => Ok(l),
        Some(l) => Err(Error::Argument(format!("fixed ratio {l} outside [0, 1]"))),
        None => sample_beta(params.alpha, params.beta, rng),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixRecord {
    pub image_id: u64,
    pub annotation_id: u64,
    pub candidate_image_id: u64,
    pub candidate_annotation_id: u64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Augmented {
    pub rasters: RasterStore,
    /// Applied mixes, ordered by image id then annotation id.
    pub mixes: Vec<MixRecord>,
}

/// Run box mixing over every image of `d`.
///
/// Candidates are always read from the input rasters, and each image draws
/// from its own `(seed, image_id)` stream, so the output does not depend on
/// how images are scheduled across threads.
pub fn apply_bboxmixup(
    d: &Dataset,
    rasters: &RasterStore,
    params: &MixParams,
) -> Result<Augmented> {
    params.validate()?;
    for img in &d.images {
        if !rasters.contains_key(&img.id) {
            return Err(Error::MissingRaster(img.id));
        }
    }
    let pool = build_class_pools(d);
    let by_id: HashMap<u64, &Annotation> = d.annotations.iter().map(|a| (a.id, a)).collect();
    let by_image = d.annotations_by_image();
    let seed = Seed(params.seed);

    let results: Vec<(u64, crate::raster::Raster, Vec<MixRecord>)> = d
        .images
        .par_iter()
        .map(|img| {
            let mut working = rasters[&img.id].clone();
            let mut mixes = Vec::new();
            let mut targets: Vec<&Annotation> = by_image.get(&img.id).cloned().unwrap_or_default();
            targets.sort_unstable_by_key(|a| a.id);
            let mut rng = seed.stream("bboxmixup", img.id);
            for target in targets {
                if params.defects_only && !target.category.condition.is_defect() {
                    continue;
                }
                if rng.random::<f64>() >= params.apply_prob {
                    continue;
                }
                let Some(cand_ref) = select_candidate(&pool, target, &mut rng) else {
                    continue;
                };
                let lambda = sample_mix_ratio(params, &mut rng)?;
                let cand = by_id[&cand_ref.annotation_id];
                let src = rasters
                    .get(&cand_ref.image_id)
                    .ok_or(Error::MissingRaster(cand_ref.image_id))?;
                let rect = target.bbox.pixel_rect(working.width(), working.height())?;
                let patch = resize_region(src, &cand.bbox, rect.w, rect.h)?;
                mix_region_in_place(&mut working, &target.bbox, &patch, lambda)?;
                mixes.push(MixRecord {
                    image_id: img.id,
                    annotation_id: target.id,
                    candidate_image_id: cand_ref.image_id,
                    candidate_annotation_id: cand.id,
                    lambda,
                });
            }
            Ok((img.id, working, mixes))
        })
        .collect::<Result<_>>()?;

    let mut out = RasterStore::new();
    let mut all_mixes = Vec::new();
    for (id, r, m) in results {
        out.insert(id, r);
        all_mixes.extend(m);
    }
    all_mixes.sort_by_key(|m| (m.image_id, m.annotation_id));
    Ok(Augmented {
        rasters: out,
        mixes: all_mixes,
    })
}
