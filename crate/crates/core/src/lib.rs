//! Detection-data tooling for data-scarce defect detection: same-class box
//! mixing, consistency-guided pseudo-label calibration, and a small
//! mean-teacher simulation that shows how stale normalization buffers starve
//! the pseudo-label stream.

// `!(x > 0.0)` style checks are deliberate: NaN must fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod category;
pub mod cgpc;
pub mod dataset;
pub mod error;
pub mod geom;
pub mod io;
pub mod label;
pub mod raster;
pub mod rng;
pub mod sslsim;
pub mod stats;
pub mod synth;

pub use category::{
    parse_category_name, Category, CategoryEntry, CategoryRegistry, Condition, FoodType,
};
pub use dataset::{load_dataset, save_dataset, split_dataset, Annotation, Dataset, ImageRecord};
pub use error::{Error, Result};
pub use geom::{iou, BBox, PixelRect};
pub use label::PseudoLabel;
pub use raster::{load_raster, save_raster, Raster, RasterStore, Rgb};
pub use rng::{RngStream, Seed};
pub use stats::{compute_stats, DatasetStats};
pub use synth::{gen_synthetic_dataset, SynthSpec};
