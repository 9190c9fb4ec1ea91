//! Deterministic workloads shared by the benchmarks.

use fddet_core::{gen_synthetic_dataset, Dataset, PseudoLabel, RasterStore, SynthSpec};

/// A synthetic annotated dataset with rasters, `images` scenes of ten boxes each.
pub fn dataset(images: usize) -> (Dataset, RasterStore) {
    let spec = SynthSpec {
        images,
        instances: images * 10,
        defect_images: images / 3,
        ..SynthSpec::default()
    };
    gen_synthetic_dataset(&spec, true).expect("valid synthetic spec")
}

/// Every annotation turned into a prediction, plus a jittered duplicate so
/// dedup and peer voting have work to do. Confidences cycle through (0, 1).
pub fn predictions(d: &Dataset) -> Vec<PseudoLabel> {
    let mut out = Vec::with_capacity(d.annotations.len() * 2);
    for a in &d.annotations {
        let conf = |k: u64| ((a.id * 37 + k) % 97) as f64 / 97.0;
        let mut shifted = a.bbox;
        shifted.x += 1.0;
        for (b, k) in [(a.bbox, 0), (shifted, 1)] {
            out.push(
                PseudoLabel::new(a.image_id, b, a.category.clone(), conf(k))
                    .expect("confidence in range"),
            );
        }
    }
    out
}
