//! Exit codes: 0 ok, 2 usage, 3 I/O, 4 validation, 5 degenerate data.

use std::fmt;
use std::path::Path;

use sylscore::corpus::CorpusError;
use sylscore::dataset::DatasetError;
use sylscore::nn::NnError;
use sylscore::scoring::ScoringError;
use sylscore::synth::SynthError;
use sylscore::wav::WavError;

pub const USAGE: i32 = 2;
pub const IO: i32 = 3;
pub const VALIDATION: i32 = 4;
pub const DEGENERATE: i32 = 5;

#[derive(Debug)]
pub struct Coded {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Coded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Coded {}

pub fn coded(code: i32, message: impl Into<String>) -> anyhow::Error {
    Coded {
        code,
        message: message.into(),
    }
    .into()
}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    coded(USAGE, message)
}

pub fn io_error(path: &Path, e: std::io::Error) -> anyhow::Error {
    coded(IO, format!("{}: {e}", path.display()))
}

fn dataset(e: &DatasetError) -> i32 {
    match e {
        DatasetError::Io { .. } => IO,
        DatasetError::Parse { .. } | DatasetError::Validation { .. } => VALIDATION,
        DatasetError::EmptyCohort(_) | DatasetError::DegenerateInput(_) => DEGENERATE,
    }
}

fn wav(e: &WavError) -> i32 {
    match e {
        WavError::Io { .. } => IO,
        _ => VALIDATION,
    }
}

fn nn(e: &NnError) -> i32 {
    match e {
        NnError::Io { .. } => IO,
        NnError::DegenerateInput(_) => DEGENERATE,
        _ => VALIDATION,
    }
}

fn corpus(e: &CorpusError) -> i32 {
    match e {
        CorpusError::Wav(w) => wav(w),
        CorpusError::Dsp { .. } => VALIDATION,
        CorpusError::Dataset(d) => dataset(d),
    }
}

fn scoring(e: &ScoringError) -> i32 {
    match e {
        ScoringError::Model(m) => nn(m),
        _ => DEGENERATE,
    }
}

fn synth(e: &SynthError) -> i32 {
    match e {
        SynthError::InvalidSpec(_) => USAGE,
        SynthError::Io { .. } => IO,
        SynthError::Wav(w) => wav(w),
        SynthError::Dataset(d) => dataset(d),
    }
}

pub fn code_of(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(c) = cause.downcast_ref::<Coded>() {
            return c.code;
        }
        if let Some(e) = cause.downcast_ref::<DatasetError>() {
            return dataset(e);
        }
        if let Some(e) = cause.downcast_ref::<WavError>() {
            return wav(e);
        }
        if let Some(e) = cause.downcast_ref::<NnError>() {
            return nn(e);
        }
        if let Some(e) = cause.downcast_ref::<CorpusError>() {
            return corpus(e);
        }
        if let Some(e) = cause.downcast_ref::<ScoringError>() {
            return scoring(e);
        }
        if let Some(e) = cause.downcast_ref::<SynthError>() {
            return synth(e);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return IO;
        }
    }
    1
}
