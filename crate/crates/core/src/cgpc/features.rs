use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::BBox;
use crate::io::read;
use crate::label::PseudoLabel;
use crate::raster::{Raster, RasterStore};

use super::stages::FeatureMap;

/// Bins per channel of the builtin joint color histogram.
pub const HIST_BINS_PER_CHANNEL: usize = 8;
pub const HIST_DIM: usize = HIST_BINS_PER_CHANNEL * HIST_BINS_PER_CHANNEL * HIST_BINS_PER_CHANNEL;

#[derive(Clone, Debug, PartialEq)]
pub struct RegionFeature {
    pub key: String,
    pub vector: Vec<f64>,
}

/// Precomputed embeddings from an arbitrary backbone, keyed by box digest.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExternalFeatures {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl ExternalFeatures {
    /// Validate and L2-normalize raw vectors.
    pub fn from_map(raw: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let mut dim = None;
        let mut vectors = HashMap::with_capacity(raw.len());
        for (key, mut v) in raw {
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::ShapeMismatch(format!(
                        "feature `{key}` has length {}, expected {d}",
                        v.len()
                    )))
                }
                _ => {}
            }
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation(format!(
                    "feature `{key}` is empty or non-finite"
                )));
            }
            if !l2_normalize(&mut v) {
                return Err(Error::Validation(format!(
                    "feature `{key}` is the zero vector"
                )));
            }
            vectors.insert(key, v);
        }
        Ok(ExternalFeatures {
            dim: dim.unwrap_or(0),
            vectors,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = read(path)?;
        let raw: BTreeMap<String, Vec<f64>> =
            serde_json::from_slice(&bytes).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
        Self::from_map(raw)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, key: &str) -> Option<&Vec<f64>> {
        self.vectors.get(key)
    }
}

/// Where region descriptors come from.
#[derive(Clone, Copy, Debug)]
pub enum FeatureProvider<'a> {
    /// 512-bin RGB histogram over the decoded image.
    Builtin(&'a RasterStore),
    External(&'a ExternalFeatures),
}

fn l2_normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// Joint 8x8x8 RGB histogram of the pixels under `bbox`, L1- then
/// L2-normalized.
pub fn histogram_feature(raster: &Raster, bbox: &BBox) -> Result<Vec<f64>> {
    let rect = bbox.pixel_rect(raster.width(), raster.height())?;
    let shift = 8 - HIST_BINS_PER_CHANNEL.trailing_zeros();
    let mut hist = vec![0.0; HIST_DIM];
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            let [r, g, b] = raster.get(x, y);
            let bin = ((r >> shift) as usize * HIST_BINS_PER_CHANNEL + (g >> shift) as usize)
                * HIST_BINS_PER_CHANNEL
                + (b >> shift) as usize;
            hist[bin] += 1.0;
        }
    }
    let n = f64::from(rect.w) * f64::from(rect.h);
    hist.iter_mut().for_each(|v| *v /= n);
    l2_normalize(&mut hist);
    Ok(hist)
}

/// One unit vector per distinct label region.
pub fn compute_region_features(
    provider: &FeatureProvider<'_>,
    labels: &[PseudoLabel],
) -> Result<BTreeMap<String, RegionFeature>> {
    let mut out = BTreeMap::new();
    for l in labels {
        let key = l.digest();
        if out.contains_key(&key) {
            continue;
        }
        if !l.bbox.is_valid() {
            return Err(Error::Geometry(format!("zero-area region `{key}`")));
        }
        let vector = match provider {
            FeatureProvider::Builtin(store) => {
                let r = store
                    .get(&l.image_id)
                    .ok_or(Error::MissingRaster(l.image_id))?;
                histogram_feature(r, &l.bbox)?
            }
            FeatureProvider::External(ext) => ext
                .get(&key)
                .cloned()
                .ok_or_else(|| Error::MissingFeature(key.clone()))?,
        };
        out.insert(key.clone(), RegionFeature { key, vector });
    }
    Ok(out)
}

pub(crate) fn as_feature_map(features: BTreeMap<String, RegionFeature>) -> FeatureMap {
    features.into_iter().map(|(k, f)| (k, f.vector)).collect()
}
