//! A desk-scale mean-teacher loop over synthetic region features.
//!
//! The detector is a nearest-centroid head whose inputs are normalized by
//! running statistics. Unlabeled and held-out scenes come from a shifted
//! feature distribution. When the teacher's normalization buffers are not
//! averaged from the student they stay fitted to the labeled domain, the
//! shifted features land far from every centroid, confidences fall under the
//! pseudo-label threshold, and the unlabeled stream dries up.

mod model;
mod sim;
mod stream;

pub use model::{
    ema_update, student_step, toy_predict, EmaConfig, ToyModel, TrainSample,
    STUDENT_BUFFER_MOMENTUM, VARIANCE_FLOOR,
};
pub use sim::{
    accuracy, run_labeled_only_baseline, run_ssl_simulation, IterationRecord, Scenario,
    SimulationReport, SimulationSummary,
};
pub use stream::{
    gen_synthetic_stream, DomainShift, SceneRegion, StreamSpec, SyntheticScene, SyntheticStreams,
};
