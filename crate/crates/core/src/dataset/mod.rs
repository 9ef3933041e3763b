//! Corpus catalog: manifest parsing and validation, cohort selection and
//! stratified train/test splitting.

mod manifest;
mod split;

pub use manifest::{
    Cohort, Completeness, Manifest, PatientInfo, RecordKey, Sex, SyllableRecord, SyllableSet,
};
pub use split::{split_by_group, split_fragments, SplitAssignment, SplitBy, DEFAULT_TRAIN_RATIO};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid manifest: {}{message}", .record.as_ref().map(|r| format!("{r}: ")).unwrap_or_default())]
    Validation {
        record: Option<RecordKey>,
        message: String,
    },
    #[error("cohort {0} matches no patients")]
    EmptyCohort(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;
