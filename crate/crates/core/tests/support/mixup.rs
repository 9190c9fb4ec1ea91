use fddet_core::augment::{apply_bboxmixup, mix_region, resize_region, MixParams};
use fddet_core::dataset::{Annotation, ImageRecord};
use fddet_core::geom::PixelRect;
use fddet_core::{BBox, Category, CategoryRegistry, Dataset, FoodType, Raster, RasterStore};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), TestCaseError>;

pub fn noise_raster(w: u32, h: u32, seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px = (0..w * h).map(|_| rng.random::<[u8; 3]>()).collect();
    Raster::new(w, h, px).unwrap()
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub dataset: Dataset,
    pub rasters: RasterStore,
}

/// Box with one-decimal coordinates fully inside a `w x h` canvas.
pub fn bbox_in(w: u32, h: u32) -> impl Strategy<Value = BBox> {
    let (w, h) = (f64::from(w), f64::from(h));
    (0.0..0.8f64, 0.0..0.8f64, 0.1..1.0f64, 0.1..1.0f64).prop_map(move |(fx, fy, fw, fh)| {
        let r = |v: f64| (v * 10.0).floor() / 10.0;
        let x = r(fx * (w - 2.0));
        let y = r(fy * (h - 2.0));
        let bw = r(((w - x) * fw).max(1.0)).max(1.0);
        let bh = r(((h - y) * fh).max(1.0)).max(1.0);
        BBox::new(x, y, bw, bh)
    })
}

/// Two to four noise images holding one to four boxes each, drawn from one
/// defect class and one normal class.
pub fn fixture() -> impl Strategy<Value = Fixture> {
    let cats = [
        Category::defect(FoodType::Apple, "rot"),
        Category::normal(FoodType::Pear),
    ];
    prop::collection::vec((12u32..=28, 12u32..=28, any::<u64>()), 2..=4)
        .prop_flat_map(move |dims| {
            let anns: Vec<_> = dims
                .iter()
                .map(|&(w, h, _)| prop::collection::vec((0usize..2, bbox_in(w, h)), 1..=4))
                .collect();
            (Just(dims), anns)
        })
        .prop_map(move |(dims, per_image)| {
            let mut images = Vec::new();
            let mut annotations = Vec::new();
            let mut rasters = RasterStore::new();
            for (i, (&(w, h, seed), boxes)) in dims.iter().zip(per_image).enumerate() {
                let id = i as u64 + 1;
                images.push(ImageRecord::new(id, format!("{id}.ppm"), w, h));
                rasters.insert(id, noise_raster(w, h, seed));
                for (c, b) in boxes {
                    let aid = annotations.len() as u64 + 1;
                    annotations.push(Annotation::new(aid, id, b, cats[c].clone()));
                }
            }
            let registry = CategoryRegistry::from_categories(cats.clone()).unwrap();
            Fixture {
                dataset: Dataset::new(images, annotations, registry).unwrap(),
                rasters,
            }
        })
}

pub fn params() -> impl Strategy<Value = MixParams> {
    (
        0.2f64..4.0,
        0.2f64..4.0,
        0.0f64..=1.0,
        any::<u64>(),
        any::<bool>(),
    )
        .prop_map(|(alpha, beta, apply_prob, seed, defects_only)| MixParams {
            alpha,
            beta,
            apply_prob,
            seed,
            defects_only,
            fixed_ratio: None,
        })
}

pub type MixCase = (Fixture, MixParams);

pub fn mix_case() -> impl Strategy<Value = MixCase> {
    (fixture(), params())
}

fn rect_of(f: &Fixture, annotation_id: u64) -> PixelRect {
    let a = f
        .dataset
        .annotations
        .iter()
        .find(|a| a.id == annotation_id)
        .unwrap();
    let img = f.dataset.image(a.image_id).unwrap();
    a.bbox.pixel_rect(img.width, img.height).unwrap()
}

fn overlaps(a: &PixelRect, b: &PixelRect) -> bool {
    a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h
}

pub fn check_labels_preserved((f, p): MixCase) -> Check {
    let before = f.dataset.to_json_bytes().unwrap();
    let out = apply_bboxmixup(&f.dataset, &f.rasters, &p).unwrap();
    prop_assert_eq!(f.dataset.to_json_bytes().unwrap(), before);
    for m in &out.mixes {
        let t = f
            .dataset
            .annotations
            .iter()
            .find(|a| a.id == m.annotation_id)
            .unwrap();
        let c = f
            .dataset
            .annotations
            .iter()
            .find(|a| a.id == m.candidate_annotation_id)
            .unwrap();
        prop_assert_eq!(&t.category, &c.category);
        prop_assert_ne!(m.image_id, m.candidate_image_id);
        prop_assert!(!p.defects_only || t.category.condition.is_defect());
    }
    Ok(())
}

pub fn check_locality((f, p): MixCase) -> Check {
    let out = apply_bboxmixup(&f.dataset, &f.rasters, &p).unwrap();
    for (id, input) in &f.rasters {
        let rects: Vec<PixelRect> = out
            .mixes
            .iter()
            .filter(|m| m.image_id == *id)
            .map(|m| rect_of(&f, m.annotation_id))
            .collect();
        let output = &out.rasters[id];
        for y in 0..input.height() {
            for x in 0..input.width() {
                if !rects.iter().any(|r| r.contains(x, y)) {
                    prop_assert_eq!(output.get(x, y), input.get(x, y));
                }
            }
        }
    }
    Ok(())
}

/// Inside a mixed box that no other mixed box in the same image touches, every
/// channel is the rounded convex blend of target and resized candidate.
pub fn check_pixel_arithmetic((f, p): MixCase) -> Check {
    let out = apply_bboxmixup(&f.dataset, &f.rasters, &p).unwrap();
    for m in &out.mixes {
        let r = rect_of(&f, m.annotation_id);
        let isolated = out
            .mixes
            .iter()
            .filter(|o| o.image_id == m.image_id && o.annotation_id != m.annotation_id)
            .all(|o| !overlaps(&r, &rect_of(&f, o.annotation_id)));
        if !isolated {
            continue;
        }
        let cand = f
            .dataset
            .annotations
            .iter()
            .find(|a| a.id == m.candidate_annotation_id)
            .unwrap();
        let patch = resize_region(&f.rasters[&m.candidate_image_id], &cand.bbox, r.w, r.h).unwrap();
        let (input, output) = (&f.rasters[&m.image_id], &out.rasters[&m.image_id]);
        for j in 0..r.h {
            for i in 0..r.w {
                let (t, q, o) = (
                    input.get(r.x + i, r.y + j),
                    patch.get(i, j),
                    output.get(r.x + i, r.y + j),
                );
                for c in 0..3 {
                    let want =
                        (m.lambda * f64::from(t[c]) + (1.0 - m.lambda) * f64::from(q[c])).round();
                    prop_assert_eq!(f64::from(o[c]), want);
                    prop_assert!(o[c] >= t[c].min(q[c]) && o[c] <= t[c].max(q[c]));
                }
            }
        }
    }
    Ok(())
}

pub fn check_unit_ratio((f, mut p): MixCase) -> Check {
    p.fixed_ratio = Some(1.0);
    p.apply_prob = 1.0;
    let out = apply_bboxmixup(&f.dataset, &f.rasters, &p).unwrap();
    prop_assert_eq!(out.rasters, f.rasters);
    Ok(())
}

pub type RegionCase = (u32, u32, BBox, u64, u64, f64);

pub fn region_case() -> impl Strategy<Value = RegionCase> {
    (4u32..24, 4u32..24)
        .prop_flat_map(|(w, h)| (Just(w), Just(h), bbox_in(w, h)))
        .prop_flat_map(|(w, h, b)| {
            (
                Just(w),
                Just(h),
                Just(b),
                any::<u64>(),
                any::<u64>(),
                0.0f64..=1.0,
            )
        })
}

/// Ratio 0 substitutes the patch, ratio 1 is the identity and anything in
/// between stays within half a level of the exact blend.
pub fn check_region_blend((w, h, b, s1, s2, lambda): RegionCase) -> Check {
    let target = noise_raster(w, h, s1);
    let r = b.pixel_rect(w, h).unwrap();
    let patch = noise_raster(r.w, r.h, s2);
    let swapped = mix_region(&target, &b, &patch, 0.0).unwrap();
    prop_assert_eq!(&mix_region(&target, &b, &patch, 1.0).unwrap(), &target);
    for y in 0..h {
        for x in 0..w {
            let want = if r.contains(x, y) {
                patch.get(x - r.x, y - r.y)
            } else {
                target.get(x, y)
            };
            prop_assert_eq!(swapped.get(x, y), want);
        }
    }
    let mixed = mix_region(&target, &b, &patch, lambda).unwrap();
    for j in 0..r.h {
        for i in 0..r.w {
            let (t, q, o) = (
                target.get(r.x + i, r.y + j),
                patch.get(i, j),
                mixed.get(r.x + i, r.y + j),
            );
            for c in 0..3 {
                let exact = lambda * f64::from(t[c]) + (1.0 - lambda) * f64::from(q[c]);
                prop_assert!((f64::from(o[c]) - exact).abs() <= 0.5 + 1e-9);
                prop_assert!(o[c] >= t[c].min(q[c]) && o[c] <= t[c].max(q[c]));
            }
        }
    }
    Ok(())
}

pub fn check_schedule_free((f, p): MixCase) -> Check {
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let wide = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = serial
        .install(|| apply_bboxmixup(&f.dataset, &f.rasters, &p))
        .unwrap();
    let b = wide
        .install(|| apply_bboxmixup(&f.dataset, &f.rasters, &p))
        .unwrap();
    prop_assert_eq!(&a, &b);
    for (id, r) in &a.rasters {
        prop_assert_eq!(r.to_ppm(), b.rasters[id].to_ppm());
    }
    Ok(())
}
