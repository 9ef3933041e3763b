//! Trained model and its file format.
//!
//! A model file is a JSON document
//! `{"format_version": 1, "checksum": "sha256:<hex>", "body": {...}}` where
//! the checksum covers the exact bytes of `body`. The body holds the
//! architecture, a layout descriptor, the parameters as hex-encoded
//! little-endian `f32`, the preprocessing configuration, optional
//! standardization statistics, and training metadata.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use super::adam::AdamConfig;
use super::network::forward_batch;
use super::train::EpochMetrics;
use super::{Architecture, NnError, Result, TensorDesc};
use crate::dataset::{Cohort, SplitBy};
use crate::dsp::{DspConfig, Fragment};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Per-bin mean and standard deviation over training fragments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    /// `rows` are sequences whose consecutive `dim`-sized chunks are frames.
    pub fn fit<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Self {
        let mut sum = vec![0.0; dim];
        let mut sum_sq = vec![0.0; dim];
        let mut count = 0usize;
        for row in rows {
            for frame in row.chunks_exact(dim) {
                for ((s, q), &x) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(frame) {
                    *s += x;
                    *q += x * x;
                }
                count += 1;
            }
        }
        let n = count.max(1) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sum_sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let sd = (q / n - m * m).max(0.0).sqrt();
                if sd < 1e-12 {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let dim = self.mean.len();
        values
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - self.mean[i % dim]) / self.std[i % dim])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub clip_norm: Option<f64>,
    /// Hyperparameters left at built-in defaults (not tuned values).
    pub defaulted: Vec<String>,
    pub cohort: Option<Cohort>,
    pub split_by: SplitBy,
    pub train_ratio: f64,
    /// Patients lacking a session-1/2 recording were dropped, not rejected.
    #[serde(default)]
    pub drop_incomplete: bool,
    pub n_train: usize,
    pub n_test: usize,
    pub final_metrics: Option<EpochMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub arch: Architecture,
    params: Vec<f64>,
    pub dsp: DspConfig,
    pub standardization: Option<Standardization>,
    pub meta: TrainMeta,
}

#[derive(Serialize, Deserialize)]
struct Body {
    architecture: Architecture,
    layout: Vec<TensorDesc>,
    parameter_encoding: String,
    parameters: String,
    dsp_config: DspConfig,
    standardization: Option<Standardization>,
    train_meta: TrainMeta,
}

#[derive(Serialize)]
struct FileOut<'a> {
    format_version: u32,
    checksum: String,
    body: &'a RawValue,
}

#[derive(Deserialize)]
struct FileIn<'a> {
    format_version: u32,
    checksum: String,
    #[serde(borrow)]
    body: &'a RawValue,
}

const PARAM_ENCODING: &str = "f32-le-hex";

fn checksum(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

impl Model {
    pub fn new(
        arch: Architecture,
        params: Vec<f64>,
        dsp: DspConfig,
        standardization: Option<Standardization>,
        meta: TrainMeta,
    ) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(NnError::ShapeMismatch {
                expected: arch.param_count(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(NnError::InvalidConfig("non-finite parameter".into()));
        }
        if let Some(s) = &standardization {
            if s.mean.len() != arch.input_dim || s.std.len() != arch.input_dim {
                return Err(NnError::ShapeMismatch {
                    expected: arch.input_dim,
                    got: s.mean.len(),
                });
            }
        }
        Ok(Self {
            arch,
            params,
            dsp,
            standardization,
            meta,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    fn prepare(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.arch.input_len() {
            return Err(NnError::ShapeMismatch {
                expected: self.arch.input_len(),
                got: values.len(),
            });
        }
        Ok(match &self.standardization {
            Some(s) => s.apply(values),
            None => values.to_vec(),
        })
    }

    /// Set-1 membership probability of one fragment.
    pub fn forward(&self, fragment: &Fragment) -> Result<f64> {
        self.forward_values(fragment.values())
    }

    pub fn forward_values(&self, values: &[f64]) -> Result<f64> {
        let x = self.prepare(values)?;
        Ok(forward_batch(&self.arch, &self.params, &x)?[0])
    }

    /// Scores many fragments; each result equals `forward` on that fragment.
    pub fn forward_many(&self, fragments: &[Fragment]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(fragments.len());
        for chunk in fragments.chunks(64) {
            let mut x = Vec::with_capacity(chunk.len() * self.arch.input_len());
            for f in chunk {
                x.extend(self.prepare(f.values())?);
            }
            out.extend(forward_batch(&self.arch, &self.params, &x)?);
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut raw = Vec::with_capacity(self.params.len() * 4);
        for &p in &self.params {
            raw.extend_from_slice(&(p as f32).to_le_bytes());
        }
        let body = Body {
            architecture: self.arch,
            layout: self.arch.layout().describe(),
            parameter_encoding: PARAM_ENCODING.into(),
            parameters: hex::encode(raw),
            dsp_config: self.dsp.clone(),
            standardization: self.standardization.clone(),
            train_meta: self.meta.clone(),
        };
        let body_text = serde_json::to_string(&body)
            .map_err(|e| NnError::InvalidConfig(format!("cannot serialize model: {e}")))?;
        let raw_body = RawValue::from_string(body_text)
            .map_err(|e| NnError::InvalidConfig(format!("cannot serialize model: {e}")))?;
        let file = FileOut {
            format_version: MODEL_FORMAT_VERSION,
            checksum: checksum(raw_body.get().as_bytes()),
            body: &raw_body,
        };
        let mut out = serde_json::to_vec(&file)
            .map_err(|e| NnError::InvalidConfig(format!("cannot serialize model: {e}")))?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes)
            .map_err(|e| NnError::CorruptFile(format!("not UTF-8: {e}")))?;
        let file: FileIn = serde_json::from_str(text)
            .map_err(|e| NnError::CorruptFile(format!("unreadable document: {e}")))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(NnError::VersionMismatch {
                found: file.format_version,
                supported: MODEL_FORMAT_VERSION,
            });
        }
        if checksum(file.body.get().as_bytes()) != file.checksum {
            return Err(NnError::CorruptFile("checksum mismatch".into()));
        }
        let body: Body = serde_json::from_str(file.body.get())
            .map_err(|e| NnError::CorruptFile(format!("invalid body: {e}")))?;
        if body.parameter_encoding != PARAM_ENCODING {
            return Err(NnError::CorruptFile(format!(
                "unknown parameter encoding '{}'",
                body.parameter_encoding
            )));
        }
        if body.layout != body.architecture.layout().describe() {
            return Err(NnError::CorruptFile(
                "layout descriptor does not match architecture".into(),
            ));
        }
        let raw = hex::decode(&body.parameters)
            .map_err(|e| NnError::CorruptFile(format!("invalid parameter hex: {e}")))?;
        if raw.len() % 4 != 0 {
            return Err(NnError::CorruptFile("parameter bytes not a multiple of 4".into()));
        }
        let params: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Model::new(
            body.architecture,
            params,
            body.dsp_config,
            body.standardization,
            body.train_meta,
        )
        .map_err(|e| NnError::CorruptFile(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|source| NnError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|source| NnError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}
