//! COCO-subset annotation files.
//!
//! Only `images`, `annotations` and `categories` are interpreted. Any other
//! key, at the top level or inside a record, is carried through unchanged.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::category::{Category, CategoryEntry, CategoryRegistry};
use crate::error::{Error, Result};
use crate::geom::BBox;
use crate::io::{read, write_atomic};
use crate::label::PseudoLabel;
use crate::rng::Seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl ImageRecord {
    pub fn new(id: u64, file_name: impl Into<String>, width: u32, height: u32) -> Self {
        ImageRecord {
            id,
            file_name: file_name.into(),
            width,
            height,
            extra: Map::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Annotation {
    pub id: u64,
    pub image_id: u64,
    pub bbox: BBox,
    pub category: Category,
    /// Present for teacher predictions.
    pub score: Option<f64>,
    pub extra: Map<String, Value>,
}

impl Annotation {
    pub fn new(id: u64, image_id: u64, bbox: BBox, category: Category) -> Self {
        Annotation {
            id,
            image_id,
            bbox,
            category,
            score: None,
            extra: Map::new(),
        }
    }

    pub fn as_pseudo_label(&self) -> Option<PseudoLabel> {
        self.score.map(|confidence| PseudoLabel {
            image_id: self.image_id,
            bbox: self.bbox,
            category: self.category.clone(),
            confidence,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub images: Vec<ImageRecord>,
    pub annotations: Vec<Annotation>,
    pub registry: CategoryRegistry,
    pub extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct RawAnnotation {
    id: u64,
    image_id: u64,
    category_id: u64,
    bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct RawDataset {
    images: Vec<ImageRecord>,
    annotations: Vec<RawAnnotation>,
    categories: Vec<CategoryEntry>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

fn load_err(record: String, field: &'static str, message: impl Into<String>) -> Error {
    Error::Load {
        record,
        field,
        message: message.into(),
    }
}

impl Dataset {
    /// Cross-reference and clamp raw records.
    fn from_raw(raw: RawDataset) -> Result<Self> {
        let registry = CategoryRegistry::from_entries(raw.categories)?;

        let mut dims = HashMap::with_capacity(raw.images.len());
        for (i, img) in raw.images.iter().enumerate() {
            if img.width == 0 || img.height == 0 {
                return Err(load_err(
                    format!("images[{i}]"),
                    "width",
                    "zero-sized image",
                ));
            }
            if dims.insert(img.id, (img.width, img.height)).is_some() {
                return Err(load_err(
                    format!("images[{i}]"),
                    "id",
                    format!("duplicate image id {}", img.id),
                ));
            }
        }

        let mut seen = HashSet::with_capacity(raw.annotations.len());
        let mut annotations = Vec::with_capacity(raw.annotations.len());
        for (i, a) in raw.annotations.into_iter().enumerate() {
            let record = format!("annotations[{i}] (id {})", a.id);
            if !seen.insert(a.id) {
                return Err(load_err(
                    record,
                    "id",
                    format!("duplicate annotation id {}", a.id),
                ));
            }
            let &(w, h) = dims.get(&a.image_id).ok_or_else(|| {
                load_err(
                    record.clone(),
                    "image_id",
                    format!("dangling reference to image {}", a.image_id),
                )
            })?;
            let category = registry.category(a.category_id).cloned().ok_or_else(|| {
                load_err(
                    record.clone(),
                    "category_id",
                    format!("dangling reference to category {}", a.category_id),
                )
            })?;
            if let Some(s) = a.score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(load_err(record, "score", format!("{s} outside [0, 1]")));
                }
            }
            let raw_box = BBox::from(a.bbox);
            if !raw_box.is_valid() {
                return Err(load_err(
                    record,
                    "bbox",
                    format!("degenerate box {:?}", a.bbox),
                ));
            }
            let bbox = if raw_box.inside(w, h) {
                raw_box
            } else {
                let clamped = raw_box.clamp_to(w, h).ok_or_else(|| {
                    load_err(
                        record.clone(),
                        "bbox",
                        format!("box {:?} lies entirely outside the {w}x{h} image", a.bbox),
                    )
                })?;
                log::warn!(
                    "{record}: clamped bbox {:?} to {:?}",
                    a.bbox,
                    <[f64; 4]>::from(clamped)
                );
                clamped
            };
            annotations.push(Annotation {
                id: a.id,
                image_id: a.image_id,
                bbox,
                category,
                score: a.score,
                extra: a.extra,
            });
        }

        Ok(Dataset {
            images: raw.images,
            annotations,
            registry,
            extra: raw.extra,
        })
    }

    pub fn from_json_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let raw: RawDataset = serde_json::from_slice(bytes).map_err(|source| Error::Json {
            path: origin.to_path_buf(),
            source,
        })?;
        Self::from_raw(raw)
    }

    /// Build a dataset from in-memory parts, checking every invariant.
    pub fn new(
        images: Vec<ImageRecord>,
        annotations: Vec<Annotation>,
        registry: CategoryRegistry,
    ) -> Result<Self> {
        let d = Dataset {
            images,
            annotations,
            registry,
            extra: Map::new(),
        };
        d.validate()?;
        Ok(d)
    }

    /// Check the invariants a loaded dataset is guaranteed to satisfy.
    pub fn validate(&self) -> Result<()> {
        let mut dims = HashMap::with_capacity(self.images.len());
        for img in &self.images {
            if img.width == 0 || img.height == 0 {
                return Err(Error::Validation(format!("image {} has zero size", img.id)));
            }
            if dims.insert(img.id, (img.width, img.height)).is_some() {
                return Err(Error::Validation(format!("duplicate image id {}", img.id)));
            }
        }
        let mut seen = HashSet::with_capacity(self.annotations.len());
        for a in &self.annotations {
            if !seen.insert(a.id) {
                return Err(Error::Validation(format!(
                    "duplicate annotation id {}",
                    a.id
                )));
            }
            let &(w, h) = dims.get(&a.image_id).ok_or_else(|| {
                Error::Validation(format!(
                    "annotation {} references missing image {}",
                    a.id, a.image_id
                ))
            })?;
            if !self.registry.contains(&a.category) {
                return Err(Error::Validation(format!(
                    "annotation {} has unregistered category {}",
                    a.id, a.category
                )));
            }
            if !a.bbox.is_valid() || !a.bbox.inside(w, h) {
                return Err(Error::Validation(format!(
                    "annotation {} box {:?} is degenerate or outside image {}",
                    a.id, a.bbox, a.image_id
                )));
            }
            if let Some(s) = a.score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::Validation(format!(
                        "annotation {} score {s} outside [0, 1]",
                        a.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Serialized form with a fixed key order and a trailing newline.
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let annotations = self
            .annotations
            .iter()
            .map(|a| RawAnnotation {
                id: a.id,
                image_id: a.image_id,
                // validate() guarantees the category is registered
                category_id: self.registry.id_of(&a.category).unwrap_or_default(),
                bbox: a.bbox.into(),
                score: a.score,
                extra: a.extra.clone(),
            })
            .collect();
        let raw = RawDataset {
            images: self.images.clone(),
            annotations,
            categories: self.registry.entries().to_vec(),
            extra: self.extra.clone(),
        };
        let mut bytes =
            serde_json::to_vec_pretty(&raw).map_err(|e| Error::Validation(e.to_string()))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn image(&self, id: u64) -> Option<&ImageRecord> {
        self.images.iter().find(|i| i.id == id)
    }

    /// Annotations grouped by image id, each group in file order.
    pub fn annotations_by_image(&self) -> BTreeMap<u64, Vec<&Annotation>> {
        let mut out: BTreeMap<u64, Vec<&Annotation>> = BTreeMap::new();
        for a in &self.annotations {
            out.entry(a.image_id).or_default().push(a);
        }
        out
    }

    /// Every annotation as a pseudo-label. Fails if any record lacks a score.
    pub fn pseudo_labels(&self) -> Result<Vec<PseudoLabel>> {
        self.annotations
            .iter()
            .map(|a| {
                a.as_pseudo_label()
                    .ok_or_else(|| Error::Validation(format!("annotation {} has no `score`", a.id)))
            })
            .collect()
    }

    /// A copy with the annotations replaced by `labels`, numbered from 1.
    pub fn with_pseudo_labels<'a, I>(&self, labels: I) -> Result<Dataset>
    where
        I: IntoIterator<Item = &'a PseudoLabel>,
    {
        let annotations = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| Annotation {
                id: i as u64 + 1,
                image_id: l.image_id,
                bbox: l.bbox,
                category: l.category.clone(),
                score: Some(l.confidence),
                extra: Map::new(),
            })
            .collect();
        let d = Dataset {
            images: self.images.clone(),
            annotations,
            registry: self.registry.clone(),
            extra: self.extra.clone(),
        };
        d.validate()?;
        Ok(d)
    }

    /// Sub-dataset holding the given images (in original order) and their
    /// annotations.
    fn subset(&self, keep: &HashSet<u64>) -> Dataset {
        Dataset {
            images: self
                .images
                .iter()
                .filter(|i| keep.contains(&i.id))
                .cloned()
                .collect(),
            annotations: self
                .annotations
                .iter()
                .filter(|a| keep.contains(&a.image_id))
                .cloned()
                .collect(),
            registry: self.registry.clone(),
            extra: self.extra.clone(),
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = read(path)?;
    Dataset::from_json_bytes(&bytes, path)
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let bytes = d.to_json_bytes()?;
    write_atomic(path.as_ref(), &bytes)
}

/// Random image-level partition into `(train, test)`.
///
/// The train side receives `round(train_fraction * n)` images.
pub fn split_dataset(d: &Dataset, train_fraction: f64, seed: Seed) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut ids: Vec<u64> = d.images.iter().map(|i| i.id).collect();
    ids.sort_unstable();
    let mut rng = seed.stream("split", 0);
    ids.shuffle(&mut rng);
    let n_train = (train_fraction * ids.len() as f64).round() as usize;
    let train: HashSet<u64> = ids[..n_train].iter().copied().collect();
    let test: HashSet<u64> = ids[n_train..].iter().copied().collect();
    Ok((d.subset(&train), d.subset(&test)))
}
