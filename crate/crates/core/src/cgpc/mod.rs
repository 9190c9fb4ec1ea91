//! Consistency-guided pseudo-label calibration.
//!
//! Per image: confidence filter, context-semantic food unification, spatial
//! dedup, visual-semantic peer voting, spatial dedup. Boxes and confidences
//! are never modified; only categories and set membership change.

mod features;
mod stages;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use features::{
    compute_region_features, histogram_feature, ExternalFeatures, FeatureProvider, RegionFeature,
    HIST_DIM,
};
pub use stages::{
    context_semantic_calibrate, filter_by_confidence, spatial_dedup, visual_semantic_calibrate,
    FeatureMap, RemapWarning,
};

use crate::category::CategoryRegistry;
use crate::error::{Error, Result};
use crate::label::{LabelRecord, PseudoLabel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CgpcConfig {
    pub confidence_threshold: f64,
    /// Cosine similarity at or above which two regions are peers.
    pub similarity_threshold: f64,
    pub iou_threshold: f64,
}

impl Default for CgpcConfig {
    fn default() -> Self {
        CgpcConfig {
            confidence_threshold: 0.35,
            similarity_threshold: 0.85,
            iou_threshold: 0.65,
        }
    }
}

impl CgpcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(Error::Argument(format!(
                "confidence threshold {} outside [0, 1]",
                self.confidence_threshold
            )));
        }
        if !(-1.0..=1.0).contains(&self.similarity_threshold) {
            return Err(Error::Argument(format!(
                "similarity threshold {} outside [-1, 1]",
                self.similarity_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.iou_threshold) {
            return Err(Error::Argument(format!(
                "IoU threshold {} outside [0, 1]",
                self.iou_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    ConfidenceFilter,
    ContextSemantic,
    SpatialAfterContext,
    VisualSemantic,
    SpatialAfterVisual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub image_id: u64,
    pub stage: Stage,
    pub before: Vec<LabelRecord>,
    pub after: Vec<LabelRecord>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CgpcOutput {
    /// Calibrated labels per image, in keep order.
    pub labels: BTreeMap<u64, Vec<PseudoLabel>>,
    pub trace: Vec<StageRecord>,
    pub remaps: Vec<RemapWarning>,
}

impl CgpcOutput {
    pub fn all_labels(&self) -> impl Iterator<Item = &PseudoLabel> {
        self.labels.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.labels.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Audit trace as JSON lines.
    pub fn trace_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.trace {
            // StageRecord holds only plain data; serialization cannot fail
            s.push_str(&serde_json::to_string(r).unwrap_or_default());
            s.push('\n');
        }
        s
    }
}

fn record(
    image_id: u64,
    stage: Stage,
    before: &[PseudoLabel],
    after: &[PseudoLabel],
) -> StageRecord {
    StageRecord {
        image_id,
        stage,
        before: before.iter().map(LabelRecord::from).collect(),
        after: after.iter().map(LabelRecord::from).collect(),
    }
}

struct ImageResult {
    image_id: u64,
    labels: Vec<PseudoLabel>,
    trace: Vec<StageRecord>,
    remaps: Vec<RemapWarning>,
}

fn calibrate_image(
    image_id: u64,
    preds: &[PseudoLabel],
    provider: &FeatureProvider<'_>,
    registry: &CategoryRegistry,
    cfg: &CgpcConfig,
) -> Result<ImageResult> {
    let mut trace = Vec::with_capacity(5);

    let filtered = filter_by_confidence(preds, cfg.confidence_threshold);
    trace.push(record(image_id, Stage::ConfidenceFilter, preds, &filtered));

    let (context, remaps) = context_semantic_calibrate(&filtered, registry);
    trace.push(record(
        image_id,
        Stage::ContextSemantic,
        &filtered,
        &context,
    ));

    let dedup1 = spatial_dedup(&context, cfg.iou_threshold);
    trace.push(record(
        image_id,
        Stage::SpatialAfterContext,
        &context,
        &dedup1,
    ));

    let features = features::as_feature_map(compute_region_features(provider, &dedup1)?);
    let visual = visual_semantic_calibrate(&dedup1, &features, cfg.similarity_threshold)?;
    trace.push(record(image_id, Stage::VisualSemantic, &dedup1, &visual));

    let dedup2 = spatial_dedup(&visual, cfg.iou_threshold);
    trace.push(record(
        image_id,
        Stage::SpatialAfterVisual,
        &visual,
        &dedup2,
    ));

    Ok(ImageResult {
        image_id,
        labels: dedup2,
        trace,
        remaps,
    })
}

/// Calibrate raw teacher predictions, image by image.
pub fn run_cgpc(
    preds: &[PseudoLabel],
    provider: &FeatureProvider<'_>,
    registry: &CategoryRegistry,
    cfg: &CgpcConfig,
) -> Result<CgpcOutput> {
    cfg.validate()?;
    let mut groups: BTreeMap<u64, Vec<PseudoLabel>> = BTreeMap::new();
    for p in preds {
        groups.entry(p.image_id).or_default().push(p.clone());
    }
    let results: Vec<ImageResult> = groups
        .par_iter()
        .map(|(&id, g)| calibrate_image(id, g, provider, registry, cfg))
        .collect::<Result<_>>()?;

    let mut out = CgpcOutput::default();
    for r in results {
        out.labels.insert(r.image_id, r.labels);
        out.trace.extend(r.trace);
        out.remaps.extend(r.remaps);
    }
    Ok(out)
}
