//! Spectrogram front end: STFT magnitudes, silence gating, log compression
//! and slicing into fixed 8×513 fragments.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Analysis frame length. Fixed: it yields the 513-bin one-sided spectrum.
pub const FRAME_LEN: usize = 1024;
/// Number of one-sided frequency bins for a `FRAME_LEN`-point transform.
pub const NUM_BINS: usize = FRAME_LEN / 2 + 1;
/// Frames per fragment.
pub const FRAGMENT_FRAMES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("signal has {len} samples, need at least {frame_len} for one frame")]
    TooShort { len: usize, frame_len: usize },
    #[error("invalid sample buffer: {0}")]
    InvalidBuffer(String),
    #[error("invalid dsp config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

pub type Result<T> = std::result::Result<T, DspError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rect,
}

impl std::str::FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hann" => Ok(Window::Hann),
            "rect" | "rectangular" => Ok(Window::Rect),
            other => Err(format!("unknown window '{other}' (expected hann or rect)")),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Hann => f.write_str("hann"),
            Window::Rect => f.write_str("rect"),
        }
    }
}

/// Preprocessing parameters. Serialized into every model file so that
/// scoring replays exactly the preprocessing used at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DspConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
    /// Frames with energy below `gate_ratio` times the loudest frame are dropped.
    pub gate_ratio: f64,
    pub log_floor: f64,
    /// When false, fragments carry raw magnitudes.
    pub log_compress: bool,
    /// Stride, in frames, between consecutive fragment starts.
    pub fragment_hop: usize,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            frame_len: FRAME_LEN,
            hop: 256,
            window: Window::Hann,
            gate_ratio: 1e-4,
            log_floor: 1e-10,
            log_compress: true,
            fragment_hop: FRAGMENT_FRAMES,
        }
    }
}

impl DspConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame_len != FRAME_LEN {
            return Err(DspError::InvalidConfig(format!(
                "frame_len must be {FRAME_LEN}, got {}",
                self.frame_len
            )));
        }
        if self.hop == 0 || self.hop > self.frame_len {
            return Err(DspError::InvalidConfig(format!(
                "hop must be in 1..={}, got {}",
                self.frame_len, self.hop
            )));
        }
        if !(self.gate_ratio > 0.0 && self.gate_ratio < 1.0) {
            return Err(DspError::InvalidConfig(format!(
                "gate_ratio must be in (0, 1), got {}",
                self.gate_ratio
            )));
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return Err(DspError::InvalidConfig(format!(
                "log_floor must be positive, got {}",
                self.log_floor
            )));
        }
        if self.fragment_hop == 0 {
            return Err(DspError::InvalidConfig("fragment_hop must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mono audio normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl SampleBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(DspError::InvalidBuffer("empty buffer".into()));
        }
        if sample_rate_hz == 0 {
            return Err(DspError::InvalidBuffer("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(DspError::NonFinite(i));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Time-frequency magnitude matrix, `n_frames × NUM_BINS`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<f64>,
    n_frames: usize,
    hop: usize,
}

impl Spectrogram {
    pub fn from_frames(data: Vec<f64>, hop: usize) -> Result<Self> {
        if data.len() % NUM_BINS != 0 {
            return Err(DspError::ShapeMismatch {
                expected: (data.len() / NUM_BINS + 1) * NUM_BINS,
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(DspError::NonFinite(i));
        }
        let n_frames = data.len() / NUM_BINS;
        Ok(Self {
            data,
            n_frames,
            hop,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn is_empty(&self) -> bool {
        self.n_frames == 0
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * NUM_BINS..(t + 1) * NUM_BINS]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(NUM_BINS)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sum of squared magnitudes of frame `t`.
    pub fn frame_energy(&self, t: usize) -> f64 {
        self.frame(t).iter().map(|x| x * x).sum()
    }
}

/// Identifies where a fragment came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FragmentSource {
    pub patient_id: String,
    pub session_index: u32,
    pub syllable_id: String,
    pub fragment_index: usize,
}

/// One network input: `FRAGMENT_FRAMES × NUM_BINS` values, row-major by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    values: Vec<f64>,
    pub source: FragmentSource,
}

impl Fragment {
    pub const LEN: usize = FRAGMENT_FRAMES * NUM_BINS;

    pub fn new(values: Vec<f64>, source: FragmentSource) -> Result<Self> {
        if values.len() != Self::LEN {
            return Err(DspError::ShapeMismatch {
                expected: Self::LEN,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(DspError::NonFinite(i));
        }
        Ok(Self { values, source })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * NUM_BINS..(t + 1) * NUM_BINS]
    }
}

fn window_coefficients(window: Window, n: usize) -> Vec<f64> {
    match window {
        Window::Rect => vec![1.0; n],
        // periodic Hann
        Window::Hann => (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect(),
    }
}

/// Short-time Fourier transform of a recording, keeping one-sided magnitudes.
///
/// Frame `t` covers samples `t*hop .. t*hop + 1024`; trailing samples that do
/// not fill a whole frame are ignored.
pub fn stft_magnitude(buf: &SampleBuffer, cfg: &DspConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let len = buf.len();
    if len < cfg.frame_len {
        return Err(DspError::TooShort {
            len,
            frame_len: cfg.frame_len,
        });
    }
    let n_frames = (len - cfg.frame_len) / cfg.hop + 1;
    let window = window_coefficients(cfg.window, cfg.frame_len);
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(cfg.frame_len);
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    let mut frame = vec![Complex::default(); cfg.frame_len];
    let mut data = Vec::with_capacity(n_frames * NUM_BINS);
    let samples = buf.samples();
    for t in 0..n_frames {
        let start = t * cfg.hop;
        for (dst, (&x, &w)) in frame
            .iter_mut()
            .zip(samples[start..start + cfg.frame_len].iter().zip(&window))
        {
            *dst = Complex::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut frame, &mut scratch);
        data.extend(frame[..NUM_BINS].iter().map(|c| c.norm()));
    }
    Ok(Spectrogram {
        data,
        n_frames,
        hop: cfg.hop,
    })
}

/// Drops frames whose energy is below `gate_ratio` times the loudest frame.
///
/// An all-zero spectrogram gates to empty: a zero maximum counts as below
/// threshold.
pub fn gate_silence(spec: &Spectrogram, cfg: &DspConfig) -> Spectrogram {
    let energies: Vec<f64> = (0..spec.n_frames()).map(|t| spec.frame_energy(t)).collect();
    let max_energy = energies.iter().copied().fold(0.0_f64, f64::max);
    let mut data = Vec::with_capacity(spec.data.len());
    if max_energy > 0.0 {
        let threshold = cfg.gate_ratio * max_energy;
        for (t, &e) in energies.iter().enumerate() {
            if e >= threshold {
                data.extend_from_slice(spec.frame(t));
            }
        }
    }
    let n_frames = data.len() / NUM_BINS;
    Spectrogram {
        data,
        n_frames,
        hop: spec.hop,
    }
}

/// `x ↦ log10(x + log_floor)` on every entry.
pub fn log_compress(spec: &Spectrogram, cfg: &DspConfig) -> Spectrogram {
    Spectrogram {
        data: spec
            .data
            .iter()
            .map(|&x| (x + cfg.log_floor).log10())
            .collect(),
        n_frames: spec.n_frames,
        hop: spec.hop,
    }
}

/// Number of fragments `slice_fragments` yields for `n_frames` frames.
pub fn fragment_count(n_frames: usize, fragment_hop: usize) -> usize {
    if n_frames < FRAGMENT_FRAMES {
        0
    } else {
        (n_frames - FRAGMENT_FRAMES) / fragment_hop + 1
    }
}

/// Cuts windows of 8 consecutive frames every `fragment_hop` frames. A
/// trailing remainder shorter than 8 frames is discarded.
pub fn slice_fragments(
    spec: &Spectrogram,
    cfg: &DspConfig,
    patient_id: &str,
    session_index: u32,
    syllable_id: &str,
) -> Vec<Fragment> {
    let count = fragment_count(spec.n_frames(), cfg.fragment_hop);
    (0..count)
        .map(|k| {
            let start = k * cfg.fragment_hop * NUM_BINS;
            Fragment {
                values: spec.data[start..start + Fragment::LEN].to_vec(),
                source: FragmentSource {
                    patient_id: patient_id.to_string(),
                    session_index,
                    syllable_id: syllable_id.to_string(),
                    fragment_index: k,
                },
            }
        })
        .collect()
}

/// Full preprocessing chain for one recording: STFT, gating, optional log
/// compression, slicing.
pub fn pipeline(
    buf: &SampleBuffer,
    cfg: &DspConfig,
    patient_id: &str,
    session_index: u32,
    syllable_id: &str,
) -> Result<Vec<Fragment>> {
    let spec = stft_magnitude(buf, cfg)?;
    let gated = gate_silence(&spec, cfg);
    let compressed = if cfg.log_compress {
        log_compress(&gated, cfg)
    } else {
        gated
    };
    let fragments = slice_fragments(&compressed, cfg, patient_id, session_index, syllable_id);
    if fragments.is_empty() {
        log::debug!(
            "{patient_id}/{session_index}/{syllable_id}: {} frames after gating, no fragments",
            compressed.n_frames()
        );
    }
    Ok(fragments)
}
