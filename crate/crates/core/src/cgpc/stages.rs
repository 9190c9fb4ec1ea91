use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::category::{Category, CategoryRegistry, FoodType};
use crate::error::{Error, Result};
use crate::geom::iou_unchecked;
use crate::label::PseudoLabel;

/// Keep labels with `confidence >= threshold`, in input order.
pub fn filter_by_confidence(preds: &[PseudoLabel], threshold: f64) -> Vec<PseudoLabel> {
    preds
        .iter()
        .filter(|p| p.confidence >= threshold)
        .cloned()
        .collect()
}

struct Tally<K> {
    key: K,
    count: usize,
    confidences: Vec<f64>,
}

/// Most frequent key; ties go to the larger confidence sum, then to the
/// lexicographically smaller name. Sums run over sorted values so the result
/// does not depend on input order.
fn modal<K, I>(items: I) -> Option<K>
where
    I: IntoIterator<Item = (K, String, f64)>,
{
    let mut tallies: BTreeMap<String, Tally<K>> = BTreeMap::new();
    for (key, name, conf) in items {
        let t = tallies.entry(name).or_insert(Tally {
            key,
            count: 0,
            confidences: Vec::new(),
        });
        t.count += 1;
        t.confidences.push(conf);
    }
    let mut best: Option<(String, usize, f64, K)> = None;
    for (name, mut t) in tallies {
        t.confidences.sort_by(f64::total_cmp);
        let sum: f64 = t.confidences.iter().sum();
        let better = match &best {
            None => true,
            Some((_, c, s, _)) => t.count > *c || (t.count == *c && sum > *s),
        };
        // names arrive in ascending order, so an exact tie keeps the earlier one
        if better {
            best = Some((name, t.count, sum, t.key));
        }
    }
    best.map(|(_, _, _, k)| k)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemapWarning {
    pub image_id: u64,
    pub from: String,
    pub to: String,
}

/// Rewrite the food of every label to the modal food of the group.
///
/// Conditions are kept when `<food>__<condition>` is registered; otherwise
/// the label falls back to `<food>__normal` and a warning is recorded.
/// Expects the labels of a single image.
pub fn context_semantic_calibrate(
    labels: &[PseudoLabel],
    registry: &CategoryRegistry,
) -> (Vec<PseudoLabel>, Vec<RemapWarning>) {
    let food: Option<FoodType> = modal(labels.iter().map(|l| {
        (
            l.category.food,
            l.category.food.as_str().to_string(),
            l.confidence,
        )
    }));
    let Some(food) = food else {
        return (Vec::new(), Vec::new());
    };
    let mut warnings = Vec::new();
    let out = labels
        .iter()
        .map(|l| {
            if l.category.food == food {
                return l.clone();
            }
            let wanted = l.category.with_food(food);
            let category = if registry.contains(&wanted) {
                wanted
            } else {
                let fallback = Category::normal(food);
                warnings.push(RemapWarning {
                    image_id: l.image_id,
                    from: l.category.name(),
                    to: fallback.name(),
                });
                fallback
            };
            PseudoLabel {
                category,
                ..l.clone()
            }
        })
        .collect();
    (out, warnings)
}

/// Unit-norm region descriptors keyed by box digest.
pub type FeatureMap = HashMap<String, Vec<f64>>;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Replace each label's category with the modal category among its peers,
/// the labels whose features have cosine similarity `>= threshold` with its
/// own (always including itself). All votes read the input labels.
pub fn visual_semantic_calibrate(
    labels: &[PseudoLabel],
    features: &FeatureMap,
    threshold: f64,
) -> Result<Vec<PseudoLabel>> {
    let vecs: Vec<&Vec<f64>> = labels
        .iter()
        .map(|l| {
            let key = l.digest();
            features.get(&key).ok_or(Error::MissingFeature(key))
        })
        .collect::<Result<_>>()?;
    let out = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let peers = labels
                .iter()
                .enumerate()
                .filter(|&(j, _)| j == i || dot(vecs[i], vecs[j]) >= threshold);
            let category: Category =
                modal(peers.map(|(_, p)| (p.category.clone(), p.category.name(), p.confidence)))
                    .unwrap_or_else(|| l.category.clone());
            PseudoLabel {
                category,
                ..l.clone()
            }
        })
        .collect();
    Ok(out)
}

/// Total order used to rank labels for suppression: confidence descending,
/// then digest, category name and exact coordinates ascending.
fn rank(a: &PseudoLabel, b: &PseudoLabel) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| a.digest().cmp(&b.digest()))
        .then_with(|| a.category.name().cmp(&b.category.name()))
        .then_with(|| a.bbox.x.total_cmp(&b.bbox.x))
        .then_with(|| a.bbox.y.total_cmp(&b.bbox.y))
        .then_with(|| a.bbox.w.total_cmp(&b.bbox.w))
        .then_with(|| a.bbox.h.total_cmp(&b.bbox.h))
}

/// Category-scoped greedy NMS. Output is in keep order.
pub fn spatial_dedup(labels: &[PseudoLabel], iou_threshold: f64) -> Vec<PseudoLabel> {
    let mut order: Vec<&PseudoLabel> = labels.iter().collect();
    order.sort_by(|a, b| rank(a, b));
    let mut kept: Vec<&PseudoLabel> = Vec::with_capacity(order.len());
    for cand in order {
        let suppressed = kept.iter().any(|k| {
            k.category == cand.category && iou_unchecked(&k.bbox, &cand.bbox) >= iou_threshold
        });
        if !suppressed {
            kept.push(cand);
        }
    }
    kept.into_iter().cloned().collect()
}
