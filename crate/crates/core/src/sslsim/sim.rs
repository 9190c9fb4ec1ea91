use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::category::CategoryRegistry;
use crate::cgpc::{filter_by_confidence, run_cgpc, CgpcConfig, ExternalFeatures, FeatureProvider};
use crate::error::{Error, Result};
use crate::label::{box_digest, PseudoLabel};
use crate::rng::Seed;

use super::model::{ema_update, student_step, toy_predict, EmaConfig, ToyModel, TrainSample};
use super::stream::{
    gen_synthetic_stream, DomainShift, SceneRegion, StreamSpec, SyntheticScene, SyntheticStreams,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub stream: StreamSpec,
    pub iterations: usize,
    pub ema: EmaConfig,
    pub learning_rate: f64,
    /// Weight of a pseudo-labeled region relative to a labeled one in the
    /// centroid update.
    pub unlabeled_weight: f64,
    pub temperature: f64,
    /// Iterations over which the unlabeled stream drifts from the labeled
    /// domain to the fully shifted one; 0 means shifted from the start.
    /// The held-out stream is always fully shifted.
    pub shift_ramp: usize,
    /// Thresholds for pseudo-label selection; only `confidence_threshold`
    /// matters unless `use_cgpc` is set.
    pub cgpc: CgpcConfig,
    pub use_cgpc: bool,
    /// Consecutive zero-yield iterations that count as collapse.
    pub collapse_window: usize,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            stream: StreamSpec {
                shift: DomainShift {
                    offset: 3.0,
                    scale: 1.0,
                },
                ..StreamSpec::default()
            },
            iterations: 150,
            ema: EmaConfig {
                momentum: 0.99,
                update_buffers: true,
            },
            learning_rate: 0.2,
            unlabeled_weight: 0.02,
            temperature: 0.9,
            shift_ramp: 50,
            cgpc: CgpcConfig::default(),
            use_cgpc: false,
            collapse_window: 5,
            seed: 0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.stream.validate()?;
        self.ema.validate()?;
        self.cgpc.validate()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!(
                "learning rate {} must be > 0",
                self.learning_rate
            )));
        }
        if !(self.unlabeled_weight >= 0.0 && self.unlabeled_weight.is_finite()) {
            return Err(Error::Argument(format!(
                "unlabeled weight {} must be >= 0",
                self.unlabeled_weight
            )));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Argument(format!(
                "temperature {} must be > 0",
                self.temperature
            )));
        }
        if self.collapse_window == 0 {
            return Err(Error::Argument("collapse window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Pseudo-labels that survived selection.
    pub pseudo_label_yield: usize,
    /// Fraction of surviving pseudo-labels matching the hidden truth;
    /// `None` when nothing survived.
    pub pseudo_label_precision: Option<f64>,
    pub student_accuracy: f64,
    pub collapsed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub seed: u64,
    pub iterations: usize,
    pub update_buffers: bool,
    pub collapsed: bool,
    /// Iteration at which the zero-yield window was first completed.
    pub collapse_iteration: Option<usize>,
    pub final_student_accuracy: Option<f64>,
    pub total_pseudo_labels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub records: Vec<IterationRecord>,
    pub summary: SimulationSummary,
}

impl SimulationReport {
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).unwrap_or_default() + "\n")
            .collect()
    }
}

fn labeled_samples(scenes: &[SyntheticScene]) -> Vec<TrainSample> {
    scenes
        .iter()
        .flat_map(|s| s.regions.iter())
        .map(|r| TrainSample::new(r.feature.clone(), Some(r.truth.clone())))
        .collect()
}

/// Held-out accuracy of `model`.
pub fn accuracy(model: &ToyModel, scenes: &[SyntheticScene]) -> f64 {
    let mut n = 0usize;
    let mut hits = 0usize;
    for r in scenes.iter().flat_map(|s| s.regions.iter()) {
        n += 1;
        if model.categories[model.classify(&r.feature).0] == r.truth {
            hits += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

fn burn_in(streams: &SyntheticStreams, temperature: f64) -> Result<ToyModel> {
    ToyModel::fit(
        streams.categories.clone(),
        &labeled_samples(&streams.labeled),
        temperature,
    )
}

struct PseudoSelector {
    registry: CategoryRegistry,
    use_cgpc: bool,
}

impl PseudoSelector {
    fn new(s: &Scenario, streams: &SyntheticStreams) -> Result<Self> {
        Ok(PseudoSelector {
            registry: CategoryRegistry::from_categories(streams.categories.clone())?,
            use_cgpc: s.use_cgpc,
        })
    }

    fn select(
        &self,
        preds: &[PseudoLabel],
        scenes: &[SyntheticScene],
        cfg: &CgpcConfig,
    ) -> Result<Vec<PseudoLabel>> {
        if !self.use_cgpc {
            return Ok(filter_by_confidence(preds, cfg.confidence_threshold));
        }
        let raw: BTreeMap<String, Vec<f64>> = scenes
            .iter()
            .flat_map(|sc| {
                sc.regions
                    .iter()
                    .map(move |r| (box_digest(sc.image_id, &r.bbox), r.feature.clone()))
            })
            .collect();
        let features = ExternalFeatures::from_map(raw)?;
        Ok(run_cgpc(
            preds,
            &FeatureProvider::External(&features),
            &self.registry,
            cfg,
        )?
        .all_labels()
        .cloned()
        .collect())
    }
}

/// Unlabeled scenes at drift fraction `t` in [0, 1]: `source + t * (shifted - source)`.
fn drifted(source: &[SyntheticScene], shifted: &[SyntheticScene], t: f64) -> Vec<SyntheticScene> {
    if t >= 1.0 {
        return shifted.to_vec();
    }
    source
        .iter()
        .zip(shifted)
        .map(|(a, b)| SyntheticScene {
            regions: a
                .regions
                .iter()
                .zip(&b.regions)
                .map(|(ra, rb)| SceneRegion {
                    feature: ra
                        .feature
                        .iter()
                        .zip(&rb.feature)
                        .map(|(x, y)| x + t * (y - x))
                        .collect(),
                    ..rb.clone()
                })
                .collect(),
            ..b.clone()
        })
        .collect()
}

/// Mean-teacher loop: teacher pseudo-labels the unlabeled stream, the
/// student trains on labeled plus pseudo-labeled regions, the teacher tracks
/// the student by EMA.
pub fn run_ssl_simulation(s: &Scenario) -> Result<SimulationReport> {
    s.validate()?;
    let streams = gen_synthetic_stream(&s.stream, Seed(s.seed))?;
    let selector = PseudoSelector::new(s, &streams)?;
    let labeled = labeled_samples(&streams.labeled);
    // shift is applied after sampling, so the same seed yields the unshifted twins
    let source = if s.shift_ramp > 0 {
        let spec = StreamSpec {
            shift: DomainShift::default(),
            ..s.stream.clone()
        };
        gen_synthetic_stream(&spec, Seed(s.seed))?.unlabeled
    } else {
        Vec::new()
    };

    let mut student = burn_in(&streams, s.temperature)?;
    let mut teacher = student.clone();

    let mut records = Vec::with_capacity(s.iterations);
    let mut zero_streak = 0usize;
    let mut collapse_iteration = None;
    let mut total = 0usize;

    for it in 0..s.iterations {
        let unlabeled = match s.shift_ramp {
            0 => streams.unlabeled.clone(),
            r => drifted(&source, &streams.unlabeled, (it + 1) as f64 / r as f64),
        };
        let preds: Vec<PseudoLabel> = unlabeled
            .iter()
            .flat_map(|sc| toy_predict(&teacher, sc))
            .collect();
        let pseudo = selector.select(&preds, &unlabeled, &s.cgpc)?;

        let truth: HashMap<String, &SceneRegion> = unlabeled
            .iter()
            .flat_map(|sc| {
                sc.regions
                    .iter()
                    .map(move |r| (box_digest(sc.image_id, &r.bbox), r))
            })
            .collect();
        let mut targets: HashMap<String, &PseudoLabel> = HashMap::with_capacity(pseudo.len());
        let mut correct = 0usize;
        for p in &pseudo {
            let key = p.digest();
            if truth.get(&key).is_some_and(|r| r.truth == p.category) {
                correct += 1;
            }
            targets.insert(key, p);
        }

        let mut batch = labeled.clone();
        for sc in &unlabeled {
            for r in &sc.regions {
                let key = box_digest(sc.image_id, &r.bbox);
                batch.push(
                    TrainSample::new(
                        r.feature.clone(),
                        targets.get(&key).map(|p| p.category.clone()),
                    )
                    .weighted(s.unlabeled_weight),
                );
            }
        }
        student = student_step(&student, &batch, s.learning_rate)?;
        teacher = ema_update(&teacher, &student, &s.ema)?;

        let yield_ = pseudo.len();
        total += yield_;
        if yield_ == 0 {
            zero_streak += 1;
        } else {
            zero_streak = 0;
        }
        let collapsed = zero_streak >= s.collapse_window;
        if collapsed && collapse_iteration.is_none() {
            collapse_iteration = Some(it);
        }
        records.push(IterationRecord {
            iteration: it,
            pseudo_label_yield: yield_,
            pseudo_label_precision: (yield_ > 0).then(|| correct as f64 / yield_ as f64),
            student_accuracy: accuracy(&student, &streams.heldout),
            collapsed,
        });
    }

    let summary = SimulationSummary {
        seed: s.seed,
        iterations: s.iterations,
        update_buffers: s.ema.update_buffers,
        collapsed: collapse_iteration.is_some(),
        collapse_iteration,
        final_student_accuracy: records.last().map(|r| r.student_accuracy),
        total_pseudo_labels: total,
    };
    Ok(SimulationReport { records, summary })
}

/// Held-out accuracy of a student trained on the labeled stream only, for
/// the same number of steps.
pub fn run_labeled_only_baseline(s: &Scenario) -> Result<f64> {
    s.validate()?;
    let streams = gen_synthetic_stream(&s.stream, Seed(s.seed))?;
    let labeled = labeled_samples(&streams.labeled);
    let mut student = burn_in(&streams, s.temperature)?;
    for _ in 0..s.iterations {
        student = student_step(&student, &labeled, s.learning_rate)?;
    }
    Ok(accuracy(&student, &streams.heldout))
}
