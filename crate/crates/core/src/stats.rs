use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;

/// Upper edges (exclusive, px²) of the box-area bins; the last bin is open.
pub const AREA_BIN_EDGES: [f64; 3] = [32.0 * 32.0, 96.0 * 96.0, 256.0 * 256.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaBin {
    pub lower: f64,
    /// `None` for the open-ended last bin.
    pub upper: Option<f64>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub num_images: usize,
    pub num_instances: usize,
    pub avg_instances_per_image: f64,
    pub per_category_counts: BTreeMap<String, usize>,
    pub defective_images: usize,
    pub defective_image_fraction: f64,
    pub box_area_histogram: Vec<AreaBin>,
}

pub fn compute_stats(d: &Dataset) -> DatasetStats {
    let num_images = d.images.len();
    let num_instances = d.annotations.len();

    let mut per_category_counts = BTreeMap::new();
    let mut defective = HashSet::new();
    let mut bins = vec![0usize; AREA_BIN_EDGES.len() + 1];
    for a in &d.annotations {
        *per_category_counts.entry(a.category.name()).or_insert(0) += 1;
        if a.category.condition.is_defect() {
            defective.insert(a.image_id);
        }
        let area = a.bbox.area();
        let bin = AREA_BIN_EDGES
            .iter()
            .take_while(|&&edge| area >= edge)
            .count();
        bins[bin] += 1;
    }

    let ratio = |num: usize| {
        if num_images == 0 {
            0.0
        } else {
            num as f64 / num_images as f64
        }
    };

    let box_area_histogram = bins
        .into_iter()
        .enumerate()
        .map(|(i, count)| AreaBin {
            lower: if i == 0 { 0.0 } else { AREA_BIN_EDGES[i - 1] },
            upper: AREA_BIN_EDGES.get(i).copied(),
            count,
        })
        .collect();

    DatasetStats {
        num_images,
        num_instances,
        avg_instances_per_image: ratio(num_instances),
        per_category_counts,
        defective_images: defective.len(),
        defective_image_fraction: ratio(defective.len()),
        box_area_histogram,
    }
}

impl DatasetStats {
    /// Plain-text summary for terminals.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "images                {:>10}", self.num_images);
        let _ = writeln!(s, "instances             {:>10}", self.num_instances);
        let _ = writeln!(
            s,
            "instances / image     {:>10.3}",
            self.avg_instances_per_image
        );
        let _ = writeln!(
            s,
            "defective images      {:>10} ({:.1}%)",
            self.defective_images,
            self.defective_image_fraction * 100.0
        );
        let _ = writeln!(s, "box area histogram (px^2):");
        for b in &self.box_area_histogram {
            let upper = b
                .upper
                .map_or_else(|| "inf".to_string(), |u| format!("{u}"));
            let _ = writeln!(s, "  [{:>6}, {:>6})   {:>10}", b.lower, upper, b.count);
        }
        let _ = writeln!(s, "per category:");
        for (name, n) in &self.per_category_counts {
            let _ = writeln!(s, "  {name:<30} {n:>8}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::{Category, CategoryRegistry, FoodType};
    use crate::dataset::{Annotation, ImageRecord};
    use crate::geom::BBox;

    fn registry() -> CategoryRegistry {
        CategoryRegistry::from_categories([
            Category::normal(FoodType::Peach),
            Category::defect(FoodType::Peach, "mold"),
        ])
        .unwrap()
    }

    #[test]
    fn empty_dataset_is_all_zero() {
        let d = Dataset::new(vec![], vec![], registry()).unwrap();
        let s = compute_stats(&d);
        assert_eq!(s.num_images, 0);
        assert_eq!(s.num_instances, 0);
        assert_eq!(s.avg_instances_per_image, 0.0);
        assert_eq!(s.defective_image_fraction, 0.0);
        assert!(s.per_category_counts.is_empty());
        assert!(s.box_area_histogram.iter().all(|b| b.count == 0));
        assert_eq!(s.box_area_histogram.len(), 4);
    }

    #[test]
    fn area_bins_use_half_open_edges() {
        let images = vec![ImageRecord::new(1, "a", 600, 600)];
        let sides = [31.0, 32.0, 95.0, 96.0, 256.0, 300.0];
        let anns = sides
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                Annotation::new(
                    i as u64,
                    1,
                    BBox::new(0.0, 0.0, s, s),
                    Category::normal(FoodType::Peach),
                )
            })
            .collect();
        let s = compute_stats(&Dataset::new(images, anns, registry()).unwrap());
        let counts: Vec<_> = s.box_area_histogram.iter().map(|b| b.count).collect();
        assert_eq!(counts, vec![1, 2, 1, 2]);
        assert_eq!(s.box_area_histogram[3].upper, None);
    }

    #[test]
    fn defect_fraction_counts_images_not_instances() {
        let images = (1..=4).map(|i| ImageRecord::new(i, "x", 50, 50)).collect();
        let b = BBox::new(0.0, 0.0, 5.0, 5.0);
        let anns = vec![
            Annotation::new(1, 1, b, Category::defect(FoodType::Peach, "mold")),
            Annotation::new(2, 1, b, Category::defect(FoodType::Peach, "mold")),
            Annotation::new(3, 2, b, Category::normal(FoodType::Peach)),
            Annotation::new(4, 3, b, Category::defect(FoodType::Peach, "mold")),
        ];
        let s = compute_stats(&Dataset::new(images, anns, registry()).unwrap());
        assert_eq!(s.defective_images, 2);
        assert_eq!(s.defective_image_fraction, 0.5);
        assert_eq!(s.avg_instances_per_image, 1.0);
        assert_eq!(s.per_category_counts.values().sum::<usize>(), 4);
    }
}
