use std::collections::BTreeMap;

use rand::Rng;

use crate::category::Category;
use crate::dataset::{Annotation, Dataset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnotationRef {
    pub image_id: u64,
    pub annotation_id: u64,
}

/// Same-category annotation references, keyed by the full food x condition
/// category. Each pool is sorted by annotation id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassPool {
    pools: BTreeMap<Category, Vec<AnnotationRef>>,
}

impl ClassPool {
    pub fn get(&self, c: &Category) -> &[AnnotationRef] {
        self.pools.get(c).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Category, &[AnnotationRef])> {
        self.pools.iter().map(|(c, v)| (c, v.as_slice()))
    }
}

pub fn build_class_pools(d: &Dataset) -> ClassPool {
    let mut pools: BTreeMap<Category, Vec<AnnotationRef>> = BTreeMap::new();
    for a in &d.annotations {
        pools
            .entry(a.category.clone())
            .or_default()
            .push(AnnotationRef {
                image_id: a.image_id,
                annotation_id: a.id,
            });
    }
    for v in pools.values_mut() {
        v.sort_unstable_by_key(|r| r.annotation_id);
    }
    ClassPool { pools }
}

/// Uniform draw among same-category boxes from other images.
pub fn select_candidate<R: Rng + ?Sized>(
    pool: &ClassPool,
    target: &Annotation,
    rng: &mut R,
) -> Option<AnnotationRef> {
    let eligible: Vec<&AnnotationRef> = pool
        .get(&target.category)
        .iter()
        .filter(|r| r.image_id != target.image_id)
        .collect();
    if eligible.is_empty() {
        return None;
    }
    Some(*eligible[rng.random_range(0..eligible.len())])
}
