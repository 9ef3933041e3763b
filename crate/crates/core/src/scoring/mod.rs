//! Quality scores from classifier outputs, accuracy evaluation and
//! agreement with expert marks.
//!
//! A fragment's score is the model's class-1 probability. A syllable's
//! score is the mean over its fragments and a session's score `Q` is the
//! unweighted mean over its scored syllables ([`Aggregation::SyllableMean`])
//! or, alternatively, the mean over all fragments of the session.
//! Prediction uses `p >= 0.5 → class 1`.

pub mod report;
mod stats;

pub use stats::{pearson, ranks, spearman};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SessionFragments;
use crate::dataset::{Cohort, SplitAssignment, SplitBy};
use crate::dsp::Fragment;
use crate::nn::{Model, NnError};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("session {patient_id}/{session_index} has no fragments to score")]
    EmptySession {
        patient_id: String,
        session_index: u32,
    },
    #[error("evaluation split is empty")]
    EmptySplit,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error(transparent)]
    Model(#[from] NnError),
}

pub type Result<T> = std::result::Result<T, ScoringError>;

/// Class-1 decision threshold (inclusive).
pub const THRESHOLD: f64 = 0.5;

pub fn predict(p: f64) -> u8 {
    u8::from(p >= THRESHOLD)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    SyllableMean,
    FragmentMean,
}

/// Mean of `values` summed in ascending order, so the result does not
/// depend on input order.
fn ordered_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentScore {
    pub syllable_id: String,
    pub fragment_index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyllableScore {
    pub syllable_id: String,
    pub n_fragments: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub patient_id: String,
    pub session_index: u32,
    pub aggregation: Aggregation,
    /// Session score `Q`.
    pub score: f64,
    pub n_syllables: usize,
    pub n_fragments: usize,
    pub syllables: Vec<SyllableScore>,
    /// Syllables that produced no fragments; not scored.
    pub missing_syllables: Vec<String>,
    pub fragments: Vec<FragmentScore>,
}

/// Aggregates per-fragment probabilities grouped by syllable.
pub fn aggregate(
    patient_id: &str,
    session_index: u32,
    syllables: &[(String, Vec<(usize, f64)>)],
    aggregation: Aggregation,
) -> Result<ScoreReport> {
    let mut syllable_scores = Vec::new();
    let mut missing = Vec::new();
    let mut fragments = Vec::new();
    for (id, frags) in syllables {
        if frags.is_empty() {
            missing.push(id.clone());
            continue;
        }
        syllable_scores.push(SyllableScore {
            syllable_id: id.clone(),
            n_fragments: frags.len(),
            score: ordered_mean(frags.iter().map(|&(_, p)| p)),
        });
        fragments.extend(frags.iter().map(|&(fragment_index, score)| FragmentScore {
            syllable_id: id.clone(),
            fragment_index,
            score,
        }));
    }
    if fragments.is_empty() {
        return Err(ScoringError::EmptySession {
            patient_id: patient_id.to_string(),
            session_index,
        });
    }
    syllable_scores.sort_by(|a, b| a.syllable_id.cmp(&b.syllable_id));
    fragments.sort_by(|a, b| {
        (&a.syllable_id, a.fragment_index).cmp(&(&b.syllable_id, b.fragment_index))
    });
    missing.sort();
    let score = match aggregation {
        Aggregation::SyllableMean => ordered_mean(syllable_scores.iter().map(|s| s.score)),
        Aggregation::FragmentMean => ordered_mean(fragments.iter().map(|f| f.score)),
    };
    Ok(ScoreReport {
        patient_id: patient_id.to_string(),
        session_index,
        aggregation,
        score,
        n_syllables: syllable_scores.len(),
        n_fragments: fragments.len(),
        syllables: syllable_scores,
        missing_syllables: missing,
        fragments,
    })
}

/// Scores one session with `model`.
pub fn score_session(
    model: &Model,
    session: &SessionFragments,
    aggregation: Aggregation,
) -> Result<ScoreReport> {
    let mut grouped = Vec::with_capacity(session.syllables.len());
    for (id, frags) in &session.syllables {
        let probs = model.forward_many(frags)?;
        grouped.push((
            id.clone(),
            frags
                .iter()
                .zip(probs)
                .map(|(f, p)| (f.source.fragment_index, p))
                .collect(),
        ));
    }
    aggregate(
        &session.patient_id,
        session.session_index,
        &grouped,
        aggregation,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub class: u8,
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAccuracy {
    pub correct: usize,
    pub total: usize,
    /// `correct / total`.
    pub accuracy: f64,
    pub per_class: Vec<ClassCount>,
}

impl SplitAccuracy {
    fn from_predictions(pairs: impl Iterator<Item = (u8, u8)>) -> Self {
        let mut per_class = vec![
            ClassCount {
                class: 0,
                correct: 0,
                total: 0,
            },
            ClassCount {
                class: 1,
                correct: 0,
                total: 0,
            },
        ];
        for (pred, label) in pairs {
            let c = &mut per_class[usize::from(label.min(1))];
            c.total += 1;
            if pred == label {
                c.correct += 1;
            }
        }
        let correct = per_class.iter().map(|c| c.correct).sum();
        let total = per_class.iter().map(|c| c.total).sum();
        Self {
            correct,
            total,
            accuracy: correct as f64 / total as f64,
            per_class,
        }
    }

    pub fn class_accuracy(&self, class: u8) -> Option<f64> {
        self.per_class
            .iter()
            .find(|c| c.class == class && c.total > 0)
            .map(|c| c.correct as f64 / c.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cohort: Option<Cohort>,
    pub split_by: SplitBy,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    /// `None` when the training split is empty.
    pub train: Option<SplitAccuracy>,
    pub test: SplitAccuracy,
}

/// Accuracy of `model` on both sides of `split`.
pub fn evaluate(
    model: &Model,
    fragments: &[Fragment],
    labels: &[u8],
    split: &SplitAssignment,
) -> Result<EvalReport> {
    if labels.len() != fragments.len() {
        return Err(ScoringError::DegenerateInput(format!(
            "{} labels for {} fragments",
            labels.len(),
            fragments.len()
        )));
    }
    if split.test.is_empty() {
        return Err(ScoringError::EmptySplit);
    }
    if let Some(&i) = split.train.iter().chain(&split.test).find(|&&i| i >= fragments.len()) {
        return Err(ScoringError::DegenerateInput(format!(
            "split index {i} out of range for {} fragments",
            fragments.len()
        )));
    }
    let accuracy = |idx: &[usize]| -> Result<SplitAccuracy> {
        let subset: Vec<Fragment> = idx.iter().map(|&i| fragments[i].clone()).collect();
        let probs = model.forward_many(&subset)?;
        Ok(SplitAccuracy::from_predictions(
            probs.into_iter().zip(idx).map(|(p, &i)| (predict(p), labels[i])),
        ))
    };
    let train = if split.train.is_empty() {
        None
    } else {
        Some(accuracy(&split.train)?)
    };
    Ok(EvalReport {
        cohort: model.meta.cohort.clone(),
        split_by: model.meta.split_by,
        seed: split.seed,
        n_train: split.train.len(),
        n_test: split.test.len(),
        train,
        test: accuracy(&split.test)?,
    })
}
