use std::collections::{BTreeMap, HashSet};

use fddet_core::cgpc::{
    context_semantic_calibrate, filter_by_confidence, run_cgpc, spatial_dedup,
    visual_semantic_calibrate, CgpcConfig, ExternalFeatures, FeatureMap, FeatureProvider,
};
use fddet_core::{iou, BBox, Category, CategoryRegistry, FoodType, PseudoLabel};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

type Check = Result<(), TestCaseError>;

pub fn categories() -> Vec<Category> {
    vec![
        Category::normal(FoodType::Apple),
        Category::defect(FoodType::Apple, "rot"),
        Category::defect(FoodType::Apple, "mold"),
        Category::normal(FoodType::Pear),
        Category::defect(FoodType::Pear, "rot"),
        Category::normal(FoodType::Peach),
        Category::defect(FoodType::Peach, "bruise"),
    ]
}

pub fn registry() -> CategoryRegistry {
    CategoryRegistry::from_categories(categories()).unwrap()
}

/// Coarse grid coordinates and confidences so overlaps and ties are common.
fn label(image_id: u64) -> impl Strategy<Value = PseudoLabel> {
    let n = categories().len();
    (0..n, 0u8..5, 0u8..5, 2u8..6, 2u8..6, 0u8..=20).prop_map(move |(c, x, y, w, h, q)| {
        let b = BBox::new(
            f64::from(x) * 3.0,
            f64::from(y) * 3.0,
            f64::from(w) * 2.0,
            f64::from(h) * 2.0,
        );
        PseudoLabel::new(image_id, b, categories()[c].clone(), f64::from(q) / 20.0).unwrap()
    })
}

pub fn image_labels() -> impl Strategy<Value = Vec<PseudoLabel>> {
    prop::collection::vec(label(7), 0..14)
}

fn multi_image_labels() -> impl Strategy<Value = Vec<PseudoLabel>> {
    prop::collection::vec((1u64..4).prop_flat_map(label), 0..24)
}

fn raw_vectors() -> impl Strategy<Value = Vec<[i8; 3]>> {
    prop::collection::vec(prop::array::uniform3(-1i8..=2), 1..6)
}

/// One small integer vector per distinct box digest, so cosine ties occur.
fn features_for(labels: &[PseudoLabel], raw: &[[i8; 3]]) -> BTreeMap<String, Vec<f64>> {
    let mut out = BTreeMap::new();
    for (l, v) in labels.iter().zip(raw.iter().cycle()) {
        let mut v: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
        if v.iter().all(|&x| x == 0.0) {
            v[0] = 1.0;
        }
        out.entry(l.digest()).or_insert(v);
    }
    out
}

fn unit_map(raw: BTreeMap<String, Vec<f64>>) -> FeatureMap {
    raw.into_iter()
        .map(|(k, mut v)| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            (k, v)
        })
        .collect()
}

/// Output labels carry an input's box and confidence; only the category may differ.
fn same_box_and_confidence(a: &PseudoLabel, b: &PseudoLabel) -> bool {
    a.image_id == b.image_id && a.bbox == b.bbox && a.confidence.to_bits() == b.confidence.to_bits()
}

fn sorted(mut v: Vec<PseudoLabel>) -> Vec<PseudoLabel> {
    v.sort_by(|a, b| {
        (a.image_id, a.digest(), a.category.name())
            .cmp(&(b.image_id, b.digest(), b.category.name()))
            .then(a.confidence.total_cmp(&b.confidence))
    });
    v
}

pub type FilterCase = (Vec<PseudoLabel>, f64, f64);

pub fn filter_case() -> impl Strategy<Value = FilterCase> {
    (image_labels(), 0.0f64..=1.0, 0.0f64..=1.0)
}

pub fn check_filter_monotone((labels, a, b): FilterCase) -> Check {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let loose = filter_by_confidence(&labels, lo);
    let strict = filter_by_confidence(&labels, hi);
    prop_assert!(strict.len() <= loose.len());
    for s in &strict {
        prop_assert!(loose.contains(s));
    }
    prop_assert!(loose.iter().all(|l| l.confidence >= lo));
    prop_assert_eq!(
        loose.len(),
        labels.iter().filter(|l| l.confidence >= lo).count()
    );
    Ok(())
}

pub fn check_context(labels: Vec<PseudoLabel>) -> Check {
    let reg = registry();
    let (once, _) = context_semantic_calibrate(&labels, &reg);
    prop_assert_eq!(once.len(), labels.len());
    let foods: HashSet<FoodType> = once.iter().map(|l| l.category.food).collect();
    prop_assert!(foods.len() <= 1);
    for (a, b) in labels.iter().zip(&once) {
        prop_assert!(same_box_and_confidence(a, b));
        if b.category.condition != a.category.condition {
            prop_assert!(!b.category.condition.is_defect());
        }
    }
    let (twice, warnings) = context_semantic_calibrate(&once, &reg);
    prop_assert_eq!(&twice, &once);
    prop_assert!(warnings.is_empty());
    Ok(())
}

pub type DedupCase = (Vec<PseudoLabel>, f64);

pub fn dedup_case() -> impl Strategy<Value = DedupCase> {
    (image_labels(), 0.05f64..=1.0)
}

pub fn check_dedup((labels, theta): DedupCase) -> Check {
    let kept = spatial_dedup(&labels, theta);
    for (i, a) in kept.iter().enumerate() {
        prop_assert!(labels.contains(a));
        for b in &kept[i + 1..] {
            if a.category == b.category {
                prop_assert!(iou(&a.bbox, &b.bbox).unwrap() < theta);
            }
        }
    }
    prop_assert_eq!(spatial_dedup(&kept, theta), kept);
    Ok(())
}

pub type VisualCase = (Vec<PseudoLabel>, Vec<[i8; 3]>, f64);

pub fn visual_case() -> impl Strategy<Value = VisualCase> {
    (image_labels(), raw_vectors(), -0.2f64..=1.0)
}

pub fn check_visual((labels, raw, theta): VisualCase) -> Check {
    let features = unit_map(features_for(&labels, &raw));
    let out = visual_semantic_calibrate(&labels, &features, theta).unwrap();
    prop_assert_eq!(out.len(), labels.len());
    for (i, (before, after)) in labels.iter().zip(&out).enumerate() {
        prop_assert!(same_box_and_confidence(before, after));
        let fi = &features[&before.digest()];
        let peer_categories: HashSet<&Category> = labels
            .iter()
            .enumerate()
            .filter(|&(j, p)| {
                let fj = &features[&p.digest()];
                j == i || fi.iter().zip(fj).map(|(x, y)| x * y).sum::<f64>() >= theta
            })
            .map(|(_, p)| &p.category)
            .collect();
        prop_assert!(peer_categories.contains(&after.category));
    }
    Ok(())
}

#[derive(Debug)]
pub struct PipelineCase {
    labels: Vec<PseudoLabel>,
    shuffled: Vec<PseudoLabel>,
    raw: Vec<[i8; 3]>,
    cfg: CgpcConfig,
}

pub fn pipeline_case() -> impl Strategy<Value = PipelineCase> {
    (
        multi_image_labels().prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle())),
        raw_vectors(),
        0.0f64..=0.6,
        0.3f64..=1.0,
        0.1f64..=0.9,
    )
        .prop_map(|((labels, shuffled), raw, tau, sim, iou)| PipelineCase {
            labels,
            shuffled,
            raw,
            cfg: CgpcConfig {
                confidence_threshold: tau,
                similarity_threshold: sim,
                iou_threshold: iou,
            },
        })
}

/// Input order is irrelevant, confidences clear the threshold, boxes and
/// confidences are carried over from inputs and each image ends on one food.
pub fn check_pipeline(c: PipelineCase) -> Check {
    let features = ExternalFeatures::from_map(features_for(&c.labels, &c.raw)).unwrap();
    let provider = FeatureProvider::External(&features);
    let reg = registry();
    let a = run_cgpc(&c.labels, &provider, &reg, &c.cfg).unwrap();
    let b = run_cgpc(&c.shuffled, &provider, &reg, &c.cfg).unwrap();
    prop_assert_eq!(&a.labels, &b.labels);
    prop_assert_eq!(a.trace.len(), b.trace.len());
    for l in a.all_labels() {
        prop_assert!(l.confidence >= c.cfg.confidence_threshold);
        prop_assert!(c.labels.iter().any(|p| same_box_and_confidence(p, l)));
    }
    for per_image in a.labels.values() {
        let foods: HashSet<FoodType> = per_image.iter().map(|l| l.category.food).collect();
        prop_assert!(foods.len() <= 1);
    }
    prop_assert_eq!(
        sorted(a.all_labels().cloned().collect()),
        sorted(b.all_labels().cloned().collect())
    );
    Ok(())
}
