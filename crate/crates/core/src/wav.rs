//! 16-bit PCM mono WAV input/output.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dsp::SampleBuffer;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed WAV: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("{path}: unsupported encoding: {message}")]
    Unsupported { path: PathBuf, message: String },
    #[error("{path}: sample rate {found} Hz does not match declared {expected} Hz")]
    SampleRate {
        path: PathBuf,
        expected: u32,
        found: u32,
    },
}

impl WavError {
    fn from_hound(path: &Path, err: hound::Error) -> Self {
        match err {
            hound::Error::IoError(source) => WavError::Io {
                path: path.to_path_buf(),
                source,
            },
            hound::Error::Unsupported => WavError::Unsupported {
                path: path.to_path_buf(),
                message: "format not supported".into(),
            },
            other => WavError::Malformed {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        }
    }
}

const PCM_SCALE: f64 = 32768.0;

/// Reads a mono 16-bit PCM file at `expected_rate`. Any other encoding is an
/// error; nothing is resampled or downmixed.
pub fn read_wav(path: &Path, expected_rate: u32) -> Result<SampleBuffer, WavError> {
    let mut reader = hound::WavReader::open(path).map_err(|e| WavError::from_hound(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(WavError::Unsupported {
            path: path.to_path_buf(),
            message: format!(
                "{:?} {}-bit, expected 16-bit integer PCM",
                spec.sample_format, spec.bits_per_sample
            ),
        });
    }
    if spec.channels != 1 {
        return Err(WavError::Unsupported {
            path: path.to_path_buf(),
            message: format!("{} channels, expected mono", spec.channels),
        });
    }
    if spec.sample_rate != expected_rate {
        return Err(WavError::SampleRate {
            path: path.to_path_buf(),
            expected: expected_rate,
            found: spec.sample_rate,
        });
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / PCM_SCALE))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| WavError::from_hound(path, e))?;
    SampleBuffer::new(samples, spec.sample_rate).map_err(|e| WavError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Quantizes a [-1, 1] signal to 16-bit PCM (round to nearest, saturating).
pub fn quantize(x: f64) -> i16 {
    (x * PCM_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

pub fn write_wav(path: &Path, samples: &[f64], sample_rate_hz: u32) -> Result<(), WavError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer =
        hound::WavWriter::create(path, spec).map_err(|e| WavError::from_hound(path, e))?;
    {
        let mut w = writer.get_i16_writer(samples.len() as u32);
        for &x in samples {
            w.write_sample(quantize(x));
        }
        w.flush().map_err(|e| WavError::from_hound(path, e))?;
    }
    writer.finalize().map_err(|e| WavError::from_hound(path, e))
}
