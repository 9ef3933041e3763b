//! Rendering of score, evaluation and training-trace reports.
//!
//! JSON output is a [`Document`] tagged by `kind` and parses back to the
//! same values bit for bit. CSV columns:
//!
//! * scores: `level,patient_id,session_index,syllable_id,fragment_index,n_fragments,score`
//!   with `level` one of `session`, `syllable`, `fragment`, `missing`;
//! * eval: `cohort,split_by,seed,n_train,n_test,train_accuracy,test_accuracy,test_class0_accuracy,test_class1_accuracy`;
//! * trace: `epoch,train_loss,train_accuracy,test_loss,test_accuracy`.
//!
//! CSV numbers use the shortest representation that round-trips.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Aggregation, EvalReport, ScoreReport};
use crate::nn::TrainTrace;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format {other:?} (expected text, csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Text => "text",
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// Correlation between syllable scores and binary expert marks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertComparison {
    pub n_pairs: usize,
    /// `None` when the coefficient is undefined (e.g. constant marks).
    pub pearson: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub aggregation: Aggregation,
    pub sessions: Vec<ScoreReport>,
    /// Sessions with no fragments at all, as `(patient, session)`.
    pub unscored_sessions: Vec<(String, u32)>,
    pub expert: Option<ExpertComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Document {
    Scores(ScoreSummary),
    Eval { reports: Vec<EvalReport> },
    Trace(TrainTrace),
}

impl Document {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("serializable report");
                s.push('\n');
                s
            }
            Format::Csv => match self {
                Self::Scores(s) => scores_csv(s),
                Self::Eval { reports } => eval_csv(reports),
                Self::Trace(t) => trace_csv(t),
            },
            Format::Text => match self {
                Self::Scores(s) => scores_text(s),
                Self::Eval { reports } => eval_text(reports),
                Self::Trace(t) => trace_text(t),
            },
        }
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn scores_csv(s: &ScoreSummary) -> String {
    let mut rows = Vec::new();
    for r in &s.sessions {
        let (p, sess) = (r.patient_id.clone(), r.session_index.to_string());
        rows.push(vec![
            "session".into(),
            p.clone(),
            sess.clone(),
            String::new(),
            String::new(),
            r.n_fragments.to_string(),
            r.score.to_string(),
        ]);
        for y in &r.syllables {
            rows.push(vec![
                "syllable".into(),
                p.clone(),
                sess.clone(),
                y.syllable_id.clone(),
                String::new(),
                y.n_fragments.to_string(),
                y.score.to_string(),
            ]);
        }
        for m in &r.missing_syllables {
            rows.push(vec![
                "missing".into(),
                p.clone(),
                sess.clone(),
                m.clone(),
                String::new(),
                "0".into(),
                String::new(),
            ]);
        }
        for f in &r.fragments {
            rows.push(vec![
                "fragment".into(),
                p.clone(),
                sess.clone(),
                f.syllable_id.clone(),
                f.fragment_index.to_string(),
                String::new(),
                f.score.to_string(),
            ]);
        }
    }
    csv_string(
        &[
            "level",
            "patient_id",
            "session_index",
            "syllable_id",
            "fragment_index",
            "n_fragments",
            "score",
        ],
        rows,
    )
}

fn scores_text(s: &ScoreSummary) -> String {
    let mut out = String::new();
    let agg = match s.aggregation {
        Aggregation::SyllableMean => "mean of syllable scores",
        Aggregation::FragmentMean => "mean of fragment scores",
    };
    let _ = writeln!(out, "Session scores (Q = {agg})");
    let _ = writeln!(
        out,
        "{:<10} {:>7} {:>8} {:>9} {:>10} {:>7}",
        "patient", "session", "Q", "syllables", "fragments", "missing"
    );
    for r in &s.sessions {
        let _ = writeln!(
            out,
            "{:<10} {:>7} {:>8.4} {:>9} {:>10} {:>7}",
            r.patient_id,
            r.session_index,
            r.score,
            r.n_syllables,
            r.n_fragments,
            r.missing_syllables.len()
        );
    }
    for r in s.sessions.iter().filter(|r| !r.missing_syllables.is_empty()) {
        let _ = writeln!(
            out,
            "missing in {}/{}: {}",
            r.patient_id,
            r.session_index,
            r.missing_syllables.join(", ")
        );
    }
    for (p, sess) in &s.unscored_sessions {
        let _ = writeln!(out, "unscored session {p}/{sess}: no fragments");
    }
    if let Some(e) = &s.expert {
        match e.pearson {
            Some(r) => {
                let _ = writeln!(out, "Expert agreement: pearson {r:.4} over {} syllables", e.n_pairs);
            }
            None => {
                let _ = writeln!(
                    out,
                    "Expert agreement: undefined over {} syllables ({})",
                    e.n_pairs,
                    e.note.as_deref().unwrap_or("degenerate input")
                );
            }
        }
    }
    out
}

fn cohort_label(r: &EvalReport) -> String {
    r.cohort
        .as_ref()
        .map(|c| c.label())
        .unwrap_or_else(|| "-".into())
}

fn eval_csv(reports: &[EvalReport]) -> String {
    let rows = reports
        .iter()
        .map(|r| {
            vec![
                r.cohort.as_ref().map(|c| c.to_string()).unwrap_or_default(),
                serde_json::to_value(r.split_by)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                r.seed.to_string(),
                r.n_train.to_string(),
                r.n_test.to_string(),
                opt(r.train.as_ref().map(|t| t.accuracy)),
                r.test.accuracy.to_string(),
                opt(r.test.class_accuracy(0)),
                opt(r.test.class_accuracy(1)),
            ]
        })
        .collect();
    csv_string(
        &[
            "cohort",
            "split_by",
            "seed",
            "n_train",
            "n_test",
            "train_accuracy",
            "test_accuracy",
            "test_class0_accuracy",
            "test_class1_accuracy",
        ],
        rows,
    )
}

fn eval_text(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let width = reports
        .iter()
        .map(|r| cohort_label(r).len())
        .max()
        .unwrap_or(0)
        .max(6);
    let _ = writeln!(out, "{:<width$}  {:>6}  {:>6}  {:>8}  {:>8}", "Cohort", "Train", "Test", "n_train", "n_test");
    for r in reports {
        let train = r
            .train
            .as_ref()
            .map(|t| format!("{:.4}", t.accuracy))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>6.4}  {:>8}  {:>8}",
            cohort_label(r),
            train,
            r.test.accuracy,
            r.n_train,
            r.n_test
        );
    }
    out
}

fn trace_csv(t: &TrainTrace) -> String {
    let rows = t
        .epochs
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.train_accuracy.to_string(),
                e.test_loss.to_string(),
                e.test_accuracy.to_string(),
            ]
        })
        .collect();
    csv_string(
        &["epoch", "train_loss", "train_accuracy", "test_loss", "test_accuracy"],
        rows,
    )
}

fn trace_text(t: &TrainTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>5}  {:>10}  {:>9}  {:>10}  {:>9}", "epoch", "train_loss", "train_acc", "test_loss", "test_acc");
    for e in &t.epochs {
        let _ = writeln!(
            out,
            "{:>5}  {:>10.5}  {:>9.4}  {:>10.5}  {:>9.4}",
            e.epoch, e.train_loss, e.train_accuracy, e.test_loss, e.test_accuracy
        );
    }
    out
}
