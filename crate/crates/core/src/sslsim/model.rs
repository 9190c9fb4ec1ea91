use serde::{Deserialize, Serialize};

use crate::category::Category;
use crate::error::{Error, Result};
use crate::label::PseudoLabel;

use super::stream::SyntheticScene;

/// Floor on running variances.
pub const VARIANCE_FLOOR: f64 = 1e-6;
/// Momentum of the student's own running statistics.
pub const STUDENT_BUFFER_MOMENTUM: f64 = 0.9;

/// Nearest-centroid detector head over region features.
///
/// `centroids` are learnable weights living in normalized feature space;
/// `running_mean` / `running_var` are buffers used to normalize inputs, like
/// batch-norm statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub categories: Vec<Category>,
    pub centroids: Vec<Vec<f64>>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub temperature: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmaConfig {
    pub momentum: f64,
    /// Also average the normalization buffers.
    pub update_buffers: bool,
}

impl Default for EmaConfig {
    fn default() -> Self {
        EmaConfig {
            momentum: 0.999,
            update_buffers: true,
        }
    }
}

impl EmaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.momentum) {
            return Err(Error::Argument(format!(
                "EMA momentum {} outside [0, 1]",
                self.momentum
            )));
        }
        Ok(())
    }
}

/// One region in a training batch; `target` is `None` for unlabeled regions
/// that only contribute to buffer statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSample {
    pub feature: Vec<f64>,
    /// `None` contributes to buffer statistics only.
    pub target: Option<Category>,
    /// Weight in the centroid mean; ignored without a target.
    pub weight: f64,
}

impl TrainSample {
    pub fn new(feature: Vec<f64>, target: Option<Category>) -> Self {
        TrainSample {
            feature,
            target,
            weight: 1.0,
        }
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

impl ToyModel {
    pub fn new(categories: Vec<Category>, dim: usize, temperature: f64) -> Result<Self> {
        let m = ToyModel {
            centroids: vec![vec![0.0; dim]; categories.len()],
            categories,
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            temperature,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.running_mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.categories.is_empty() {
            return Err(Error::ShapeMismatch("model has no categories".into()));
        }
        if self.centroids.len() != self.categories.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} centroids for {} categories",
                self.centroids.len(),
                self.categories.len()
            )));
        }
        if self.running_var.len() != d || self.centroids.iter().any(|c| c.len() != d) {
            return Err(Error::ShapeMismatch(
                "tensor lengths disagree with feature dim".into(),
            ));
        }
        if self.running_var.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Validation(
                "running variance must be strictly positive".into(),
            ));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Argument(format!(
                "temperature {} must be > 0",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Supervised fit on fully labeled samples: buffers take the exact batch
    /// statistics and each centroid the mean normalized feature of its class.
    pub fn fit(
        categories: Vec<Category>,
        samples: &[TrainSample],
        temperature: f64,
    ) -> Result<Self> {
        let dim = samples.first().map_or(0, |s| s.feature.len());
        let mut m = ToyModel::new(categories, dim, temperature)?;
        if samples.is_empty() {
            return Ok(m);
        }
        let (mean, var) = batch_moments(samples);
        m.running_mean = mean;
        m.running_var = var.into_iter().map(|v| v.max(VARIANCE_FLOOR)).collect();
        m.move_centroids(samples, 1.0)?;
        Ok(m)
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.running_mean.iter().zip(&self.running_var))
            .map(|(v, (m, s2))| (v - m) / s2.sqrt())
            .collect()
    }

    /// Softmax over `-distance / temperature` to every centroid.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let z = self.normalize(x);
        let logits: Vec<f64> = self
            .centroids
            .iter()
            .map(|c| {
                let d2: f64 = z.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                -d2.sqrt() / self.temperature
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / sum).collect()
    }

    /// Arg-max category index and its probability. Ties pick the lowest index.
    pub fn classify(&self, x: &[f64]) -> (usize, f64) {
        let p = self.probabilities(x);
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        (best, p[best])
    }

    fn category_index(&self, c: &Category) -> Result<usize> {
        self.categories
            .iter()
            .position(|x| x == c)
            .ok_or_else(|| Error::ShapeMismatch(format!("category {c} not in model")))
    }

    fn move_centroids(&mut self, batch: &[TrainSample], lr: f64) -> Result<()> {
        let d = self.dim();
        let mut sums = vec![vec![0.0; d]; self.categories.len()];
        let mut mass = vec![0.0; self.categories.len()];
        for s in batch {
            let Some(t) = &s.target else { continue };
            if !(s.weight > 0.0) {
                continue;
            }
            let k = self.category_index(t)?;
            for (acc, v) in sums[k].iter_mut().zip(self.normalize(&s.feature)) {
                *acc += s.weight * v;
            }
            mass[k] += s.weight;
        }
        for ((c, sum), w) in self.centroids.iter_mut().zip(sums).zip(mass) {
            if w == 0.0 {
                continue;
            }
            for (ci, si) in c.iter_mut().zip(sum) {
                *ci += lr * (si / w - *ci);
            }
        }
        Ok(())
    }
}

/// Per-dimension mean and population variance.
fn batch_moments(batch: &[TrainSample]) -> (Vec<f64>, Vec<f64>) {
    let d = batch[0].feature.len();
    let n = batch.len() as f64;
    let mut mean = vec![0.0; d];
    for s in batch {
        for (m, v) in mean.iter_mut().zip(&s.feature) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; d];
    for s in batch {
        for ((acc, v), m) in var.iter_mut().zip(&s.feature).zip(&mean) {
            *acc += (v - m) * (v - m) / n;
        }
    }
    (mean, var)
}

/// `t' = m * t + (1 - m) * s` on every centroid; buffers follow the same rule
/// only when `cfg.update_buffers`, otherwise the teacher keeps its own.
pub fn ema_update(teacher: &ToyModel, student: &ToyModel, cfg: &EmaConfig) -> Result<ToyModel> {
    cfg.validate()?;
    if teacher.categories != student.categories
        || teacher.dim() != student.dim()
        || teacher.centroids.len() != student.centroids.len()
    {
        return Err(Error::ShapeMismatch(
            "teacher and student shapes differ".into(),
        ));
    }
    let m = cfg.momentum;
    let blend = |t: &[f64], s: &[f64]| -> Vec<f64> {
        t.iter()
            .zip(s)
            .map(|(a, b)| m * a + (1.0 - m) * b)
            .collect()
    };
    let centroids = teacher
        .centroids
        .iter()
        .zip(&student.centroids)
        .map(|(t, s)| blend(t, s))
        .collect();
    let (running_mean, running_var) = if cfg.update_buffers {
        (
            blend(&teacher.running_mean, &student.running_mean),
            blend(&teacher.running_var, &student.running_var),
        )
    } else {
        (teacher.running_mean.clone(), teacher.running_var.clone())
    };
    Ok(ToyModel {
        categories: teacher.categories.clone(),
        centroids,
        running_mean,
        running_var,
        temperature: student.temperature,
    })
}

/// One pseudo-label per region: arg-max category and its probability.
pub fn toy_predict(model: &ToyModel, scene: &SyntheticScene) -> Vec<PseudoLabel> {
    scene
        .regions
        .iter()
        .map(|r| {
            let (k, p) = model.classify(&r.feature);
            PseudoLabel {
                image_id: scene.image_id,
                bbox: r.bbox,
                category: model.categories[k].clone(),
                confidence: p.clamp(0.0, 1.0),
            }
        })
        .collect()
}

/// One training step: refresh buffers from the batch statistics, then move
/// each centroid toward the mean normalized feature of its targets.
pub fn student_step(student: &ToyModel, batch: &[TrainSample], lr: f64) -> Result<ToyModel> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::Argument(format!(
            "learning rate {lr} must be non-negative"
        )));
    }
    if batch.is_empty() {
        return Ok(student.clone());
    }
    if batch.iter().any(|s| s.feature.len() != student.dim()) {
        return Err(Error::ShapeMismatch(
            "batch feature length differs from model".into(),
        ));
    }
    let mut next = student.clone();
    let (mean, var) = batch_moments(batch);
    let bm = STUDENT_BUFFER_MOMENTUM;
    for (r, b) in next.running_mean.iter_mut().zip(mean) {
        *r = bm * *r + (1.0 - bm) * b;
    }
    for (r, b) in next.running_var.iter_mut().zip(var) {
        *r = (bm * *r + (1.0 - bm) * b).max(VARIANCE_FLOOR);
    }
    next.move_centroids(batch, lr)?;
    Ok(next)
}
