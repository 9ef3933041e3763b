//! Seeded mini-batch training with Adam.

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::model::{Model, Standardization, TrainMeta};
use super::network::{bce_loss, forward_batch, loss_and_gradient};
use super::{Architecture, NnError, Result};
use crate::dataset::SplitAssignment;
use crate::dsp::{DspConfig, Fragment};

/// Sequences per forward call when evaluating. Outputs do not depend on it.
const EVAL_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Global gradient-norm ceiling per batch; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Standardize each frequency bin with training-split statistics.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 32,
            epochs: 30,
            seed: 0,
            clip_norm: Some(5.0),
            standardize: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("adam_eps", self.adam_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(NnError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(NnError::InvalidConfig(format!("{name} must be in [0, 1), got {v}")));
            }
        }
        if self.batch_size == 0 {
            return Err(NnError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(NnError::InvalidConfig("epochs must be >= 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(NnError::InvalidConfig(format!("clip_norm must be positive, got {c}")));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    /// Names of hyperparameters left at their built-in defaults.
    pub fn defaulted_fields(&self) -> Vec<String> {
        let d = Self::default();
        let mut out = Vec::new();
        let mut check = |name: &str, same: bool| {
            if same {
                out.push(name.to_string());
            }
        };
        check("learning_rate", self.learning_rate == d.learning_rate);
        check("adam_beta1", self.adam_beta1 == d.adam_beta1);
        check("adam_beta2", self.adam_beta2 == d.adam_beta2);
        check("adam_eps", self.adam_eps == d.adam_eps);
        check("batch_size", self.batch_size == d.batch_size);
        check("epochs", self.epochs == d.epochs);
        check("clip_norm", self.clip_norm == d.clip_norm);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
}

/// Per-epoch loss and accuracy on both splits.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochMetrics>,
}

impl TrainTrace {
    pub fn last(&self) -> Option<&EpochMetrics> {
        self.epochs.last()
    }
}

/// Glorot-uniform weights (bound `sqrt(6 / (fan_in + fan_out))` per gate
/// matrix), zero biases, forget-gate biases 1.
pub fn initialize(arch: &Architecture, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let layout = arch.layout();
    let mut params = vec![0.0; layout.total];
    let mut fill = |range: std::ops::Range<usize>, fan_in: usize, fan_out: usize| {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for p in &mut params[range] {
            *p = rng.random_range(-bound..bound);
        }
    };
    for l in [&layout.lstm1, &layout.lstm2] {
        fill(l.kernel.clone(), l.input, l.units);
        fill(l.recurrent.clone(), l.units, l.units);
    }
    for d in [&layout.dense1, &layout.dense2, &layout.dense3] {
        fill(d.kernel.clone(), d.input, d.units);
    }
    for l in [&layout.lstm1, &layout.lstm2] {
        let u = l.units;
        let forget = l.bias.start + u..l.bias.start + 2 * u;
        params[forget].iter_mut().for_each(|b| *b = 1.0);
    }
    params
}

/// Rounds every value to the nearest `f32`, the precision models are
/// stored at.
pub(crate) fn round_to_stored(params: &[f64]) -> Vec<f64> {
    params.iter().map(|&p| p as f32 as f64).collect()
}

fn gather(inputs: &[Vec<f64>], idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * inputs.first().map_or(0, Vec::len));
    for &i in idx {
        out.extend_from_slice(&inputs[i]);
    }
    out
}

/// Mean loss and accuracy (`p >= 0.5` predicts class 1) over `indices`.
pub fn accuracy_and_loss(
    arch: &Architecture,
    params: &[f64],
    inputs: &[Vec<f64>],
    labels: &[u8],
    indices: &[usize],
) -> Result<(f64, f64)> {
    if indices.is_empty() {
        return Err(NnError::DegenerateInput("empty evaluation set".into()));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for chunk in indices.chunks(EVAL_CHUNK) {
        let probs = forward_batch(arch, params, &gather(inputs, chunk))?;
        for (&i, p) in chunk.iter().zip(probs) {
            loss += bce_loss(p, labels[i]);
            if u8::from(p >= 0.5) == labels[i] {
                correct += 1;
            }
        }
    }
    let n = indices.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

fn check_split(n: usize, labels: &[u8], split: &SplitAssignment) -> Result<()> {
    if labels.len() != n {
        return Err(NnError::ShapeMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if let Some(&i) = split.train.iter().chain(&split.test).find(|&&i| i >= n) {
        return Err(NnError::DegenerateInput(format!(
            "split index {i} out of range for {n} items"
        )));
    }
    let has = |c: u8| split.train.iter().any(|&i| labels[i] == c);
    if !(has(0) && has(1)) {
        return Err(NnError::DegenerateInput(
            "training split must contain both classes".into(),
        ));
    }
    if split.test.is_empty() {
        return Err(NnError::DegenerateInput("test split is empty".into()));
    }
    Ok(())
}

/// Trains on raw input sequences (each `arch.input_len()` long). Returns
/// the parameters rounded to stored precision and the per-epoch trace,
/// which is measured on the rounded parameters.
pub fn fit(
    arch: &Architecture,
    inputs: &[Vec<f64>],
    labels: &[u8],
    split: &SplitAssignment,
    tc: &TrainConfig,
) -> Result<(Vec<f64>, TrainTrace)> {
    arch.validate()?;
    tc.validate()?;
    check_split(inputs.len(), labels, split)?;
    if let Some(bad) = inputs.iter().find(|x| x.len() != arch.input_len()) {
        return Err(NnError::ShapeMismatch {
            expected: arch.input_len(),
            got: bad.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut params = initialize(arch, &mut rng);
    let mut state = AdamState::new(params.len());
    let adam = tc.adam();
    let mut order = split.train.clone();
    let mut trace = TrainTrace::default();
    for epoch in 1..=tc.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(tc.batch_size) {
            let batch_labels: Vec<u8> = batch.iter().map(|&i| labels[i]).collect();
            let (_, mut grad) =
                loss_and_gradient(arch, &params, &gather(inputs, batch), &batch_labels)?;
            if let Some(max_norm) = tc.clip_norm {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > max_norm {
                    let scale = max_norm / norm;
                    grad.iter_mut().for_each(|g| *g *= scale);
                }
            }
            state.step(&mut params, &grad, &adam);
        }
        let snapshot = round_to_stored(&params);
        let (train_loss, train_accuracy) =
            accuracy_and_loss(arch, &snapshot, inputs, labels, &split.train)?;
        let (test_loss, test_accuracy) =
            accuracy_and_loss(arch, &snapshot, inputs, labels, &split.test)?;
        log::info!(
            "epoch {epoch}/{}: train loss {train_loss:.4} acc {train_accuracy:.4}, test loss {test_loss:.4} acc {test_accuracy:.4}",
            tc.epochs
        );
        trace.epochs.push(EpochMetrics {
            epoch,
            train_loss,
            train_accuracy,
            test_loss,
            test_accuracy,
        });
    }
    Ok((round_to_stored(&params), trace))
}

/// Trains the classifier on spectrogram fragments. The returned model
/// embeds `dsp` and, when requested, the standardization statistics of
/// the training split.
pub fn train(
    fragments: &[Fragment],
    labels: &[u8],
    split: &SplitAssignment,
    tc: &TrainConfig,
    arch: Architecture,
    dsp: &DspConfig,
) -> Result<(Model, TrainTrace)> {
    check_split(fragments.len(), labels, split)?;
    let standardization = tc.standardize.then(|| {
        Standardization::fit(
            split.train.iter().map(|&i| fragments[i].values()),
            arch.input_dim,
        )
    });
    let inputs: Vec<Vec<f64>> = fragments
        .iter()
        .map(|f| match &standardization {
            Some(s) => s.apply(f.values()),
            None => f.values().to_vec(),
        })
        .collect();
    let (params, trace) = fit(&arch, &inputs, labels, split, tc)?;
    let meta = TrainMeta {
        seed: tc.seed,
        epochs: tc.epochs,
        batch_size: tc.batch_size,
        adam: tc.adam(),
        clip_norm: tc.clip_norm,
        defaulted: tc.defaulted_fields(),
        cohort: None,
        split_by: Default::default(),
        train_ratio: crate::dataset::DEFAULT_TRAIN_RATIO,
        drop_incomplete: false,
        n_train: split.train.len(),
        n_test: split.test.len(),
        final_metrics: trace.last().copied(),
    };
    let model = Model::new(arch, params, dsp.clone(), standardization, meta)?;
    Ok((model, trace))
}
