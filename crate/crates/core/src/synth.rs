//! Deterministic synthetic corpus generator.
//!
//! Each syllable is a short band-noise consonant followed by a voiced vowel.
//! The vowel is a harmonic source (amplitude `1/h`, slight vibrato) shaped
//! by three formant resonators. A degradation severity `s ∈ [0, 1]` then
//!
//! * lowers F2 and F3 by `s·δ` Hz,
//! * applies a spectral tilt of `−s·β` dB/octave (zero-phase FFT filter,
//!   0 dB at 1 kHz), and
//! * adds white noise whose amplitude relative to the signal rms is
//!   interpolated linearly between the `snr_clean_db` (s = 0) and
//!   `snr_degraded_db` (s = 1) levels.
//!
//! Session 1 is rendered at s = 0, session 2 at s = 1. All randomness comes
//! from ChaCha8 streams seeded per file: the first 8 bytes (little endian) of
//! SHA-256 over `"sylscore-synth\0{seed}\0{patient}\0{session}\0{syllable}"`.
//! Output is peak-normalized to 0.8 and written as 16-bit PCM.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{DatasetError, Manifest, PatientInfo, Sex, SyllableRecord, SyllableSet};
use crate::wav::{write_wav, WavError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

pub type Result<T> = std::result::Result<T, SynthError>;

/// Degradation magnitudes at severity 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Degradation {
    /// δ: downward shift of F2 and F3, Hz.
    pub formant_shift_hz: f64,
    /// β: spectral tilt, dB per octave.
    pub tilt_db_per_octave: f64,
    /// `None` disables additive noise entirely.
    pub snr_clean_db: Option<f64>,
    pub snr_degraded_db: Option<f64>,
}

impl Default for Degradation {
    fn default() -> Self {
        Self {
            formant_shift_hz: 300.0,
            tilt_db_per_octave: 6.0,
            snr_clean_db: Some(35.0),
            snr_degraded_db: Some(15.0),
        }
    }
}

impl Degradation {
    /// Noise SNR at `severity`; the relative noise amplitude is linear in s.
    pub fn snr_db(&self, severity: f64) -> Option<f64> {
        match (self.snr_clean_db, self.snr_degraded_db) {
            (Some(c), Some(d)) => {
                let amp = |db: f64| 10f64.powf(-db / 20.0);
                Some(-20.0 * ((1.0 - severity) * amp(c) + severity * amp(d)).log10())
            }
            (Some(c), None) => Some(c),
            (None, Some(d)) if severity > 0.0 => Some(d),
            _ => None,
        }
    }
}

/// Per-recording nuisance variation, as half-widths of uniform draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variability {
    /// Relative pitch deviation.
    pub f0: f64,
    /// Relative deviation of each formant.
    pub formant: f64,
    /// Tilt added on top of the severity tilt, dB/octave.
    pub tilt_db_per_octave: f64,
    /// Offset added to the noise SNR, dB.
    pub snr_db: f64,
}

impl Default for Variability {
    fn default() -> Self {
        Self {
            f0: 0.03,
            formant: 0.04,
            tilt_db_per_octave: 0.0,
            snr_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_patients: usize,
    pub syllables_per_set: usize,
    pub sample_rate_hz: u32,
    pub duration_s: f64,
    pub syllable_set: SyllableSet,
    pub degradation: Degradation,
    pub variability: Variability,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_patients: 1,
            syllables_per_set: 20,
            sample_rate_hz: 16000,
            duration_s: 0.8,
            syllable_set: SyllableSet::Problem90,
            degradation: Degradation::default(),
            variability: Variability::default(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.n_patients == 0 {
            return bad("n_patients must be >= 1".into());
        }
        if self.syllables_per_set == 0 {
            return bad("syllables_per_set must be >= 1".into());
        }
        if self.sample_rate_hz < 8000 {
            return bad(format!("sample rate {} Hz is below 8000", self.sample_rate_hz));
        }
        let min_duration = 2.0 * crate::dsp::FRAME_LEN as f64 / self.sample_rate_hz as f64;
        if !(self.duration_s >= min_duration && self.duration_s <= 10.0) {
            return bad(format!(
                "duration must be in [{min_duration:.3}, 10] s, got {}",
                self.duration_s
            ));
        }
        let d = &self.degradation;
        if !(d.formant_shift_hz >= 0.0 && d.formant_shift_hz < 1000.0) {
            return bad(format!("formant shift {} Hz out of [0, 1000)", d.formant_shift_hz));
        }
        if !(d.tilt_db_per_octave >= 0.0 && d.tilt_db_per_octave <= 24.0) {
            return bad(format!("tilt {} dB/octave out of [0, 24]", d.tilt_db_per_octave));
        }
        let v = &self.variability;
        if !(v.f0 >= 0.0 && v.f0 < 0.5 && v.formant >= 0.0 && v.formant < 0.3) {
            return bad(format!("pitch/formant variability out of range: {v:?}"));
        }
        if !(v.tilt_db_per_octave >= 0.0 && v.snr_db >= 0.0) {
            return bad(format!("variability widths must be non-negative: {v:?}"));
        }
        Ok(())
    }

    pub fn patient_id(index: usize) -> String {
        format!("P{:02}", index + 1)
    }

    /// Even-indexed patients are male, odd-indexed female.
    pub fn patient_sex(index: usize) -> Sex {
        if index % 2 == 0 {
            Sex::Male
        } else {
            Sex::Female
        }
    }

    pub fn syllable_ids(&self) -> Vec<String> {
        (0..self.syllables_per_set).map(syllable_id).collect()
    }
}

const CONSONANTS: [&str; 8] = ["s", "sh", "t", "k", "p", "f", "ch", "h"];
const VOWELS: [&str; 6] = ["a", "o", "u", "e", "i", "y"];

/// Formants (Hz) per vowel.
const VOWEL_FORMANTS: [[f64; 3]; 6] = [
    [750.0, 1300.0, 2500.0],
    [500.0, 900.0, 2400.0],
    [320.0, 800.0, 2300.0],
    [500.0, 1800.0, 2550.0],
    [300.0, 2250.0, 3000.0],
    [350.0, 1550.0, 2450.0],
];
const FORMANT_BANDWIDTHS: [f64; 3] = [80.0, 100.0, 140.0];

/// Frication centre and bandwidth (Hz) per consonant, and duration (s).
const CONSONANT_NOISE: [(f64, f64, f64); 8] = [
    (5500.0, 2000.0, 0.08),
    (2800.0, 1200.0, 0.08),
    (4000.0, 2500.0, 0.03),
    (1800.0, 900.0, 0.035),
    (900.0, 1200.0, 0.025),
    (6000.0, 3000.0, 0.07),
    (3300.0, 1500.0, 0.06),
    (1200.0, 2500.0, 0.05),
];

fn syllable_id(k: usize) -> String {
    let n = CONSONANTS.len() * VOWELS.len();
    let base = format!(
        "{}{}",
        CONSONANTS[(k % n) / VOWELS.len()],
        VOWELS[k % VOWELS.len()]
    );
    if k < n {
        base
    } else {
        format!("{base}{}", k / n + 1)
    }
}

fn syllable_index(id: &str) -> Option<usize> {
    let (base, repeat) = match id.find(|c: char| c.is_ascii_digit()) {
        Some(p) => (&id[..p], id[p..].parse::<usize>().ok()?.checked_sub(1)?),
        None => (id, 0),
    };
    let n = CONSONANTS.len() * VOWELS.len();
    (0..n)
        .find(|&k| syllable_id(k) == base)
        .map(|k| k + repeat * n)
}

/// Seed of the random stream for one `(patient, session, syllable)`.
pub fn derive_seed(seed: u64, patient_id: &str, session_index: u32, syllable_id: &str) -> u64 {
    let digest = Sha256::digest(
        format!("sylscore-synth\0{seed}\0{patient_id}\0{session_index}\0{syllable_id}").as_bytes(),
    );
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Two-pole digital resonator, unity gain at DC.
struct Resonator {
    a: f64,
    b: f64,
    c: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bandwidth: f64, fs: f64) -> Self {
        let t = 1.0 / fs;
        let c = -(-2.0 * PI * bandwidth * t).exp();
        let b = 2.0 * (-PI * bandwidth * t).exp() * (2.0 * PI * freq * t).cos();
        Self {
            a: 1.0 - b - c,
            b,
            c,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.a * x + self.b * self.y1 + self.c * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Magnitude of an analog formant resonator at `f`, normalized to 1 at DC.
fn resonance_gain(f: f64, centre: f64, bandwidth: f64) -> f64 {
    let half = bandwidth / 2.0;
    (centre * centre + half * half)
        / (((f - centre).powi(2) + half * half) * ((f + centre).powi(2) + half * half)).sqrt()
}

/// Multiplies the spectrum of `x` by `(f / 1 kHz)^(−tilt/6.02)`, i.e. a
/// straight line of `−tilt` dB per octave through 0 dB at 1 kHz. Below
/// 50 Hz the gain is held constant.
pub fn apply_tilt(x: &[f64], tilt_db_per_octave: f64, fs: f64) -> Vec<f64> {
    if tilt_db_per_octave == 0.0 {
        return x.to_vec();
    }
    let n = (2 * x.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(n)
        .collect();
    fwd.process(&mut buf);
    let exponent = -tilt_db_per_octave / (20.0 * 2f64.log10());
    for (k, v) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        let f = (bin as f64 * fs / n as f64).max(50.0);
        *v *= (f / 1000.0).powf(exponent);
    }
    inv.process(&mut buf);
    buf[..x.len()].iter().map(|c| c.re / n as f64).collect()
}

/// Per-recording variation drawn from the file's random stream.
struct Variation {
    f0: f64,
    formant_scale: [f64; 3],
    tilt_offset: f64,
    snr_offset: f64,
}

impl Variation {
    /// Always consumes six uniforms, whatever the widths.
    fn draw(v: &Variability, f0: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut u = || rng.random_range(-1.0..1.0);
        Self {
            f0: f0 * (1.0 + v.f0 * u()),
            formant_scale: [1.0 + v.formant * u(), 1.0 + v.formant * u(), 1.0 + v.formant * u()],
            tilt_offset: v.tilt_db_per_octave * u(),
            snr_offset: v.snr_db * u(),
        }
    }
}

/// Renders one syllable at the given severity, before quantization.
///
/// `f0` is the speaker's mean pitch; `rng` supplies per-recording jitter and
/// the noise.
pub fn render_syllable(
    spec: &SynthSpec,
    syllable: &str,
    f0: f64,
    severity: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let fs = spec.sample_rate_hz as f64;
    let n = (spec.duration_s * fs).round() as usize;
    let k = syllable_index(syllable).unwrap_or(0);
    let (cons_freq, cons_bw, cons_dur) = CONSONANT_NOISE[(k / VOWELS.len()) % CONSONANTS.len()];
    let vowel = VOWEL_FORMANTS[k % VOWELS.len()];

    let var = Variation::draw(&spec.variability, f0, rng);
    let shift = severity * spec.degradation.formant_shift_hz;
    let formants = [
        vowel[0] * var.formant_scale[0],
        (vowel[1] * var.formant_scale[1] - shift).max(vowel[0] + 150.0),
        (vowel[2] * var.formant_scale[2] - shift).max(vowel[1] + 150.0),
    ];

    let lead = (0.04 * fs) as usize;
    let tail = (0.06 * fs) as usize;
    let cons_len = (cons_dur * fs) as usize;
    let vowel_start = lead + cons_len;
    let vowel_end = n.saturating_sub(tail).max(vowel_start + 1);

    let mut out = vec![0.0; n];

    // Consonant: resonator-filtered white noise with a raised-cosine envelope.
    let mut res = Resonator::new(cons_freq, cons_bw, fs);
    for i in 0..cons_len.min(n.saturating_sub(lead)) {
        let env = (PI * i as f64 / cons_len as f64).sin();
        out[lead + i] = 0.3 * env * res.tick(rng.random_range(-1.0..1.0));
    }

    // Vowel: harmonic sum shaped by the formant resonances.
    let nyquist = fs / 2.0;
    let harmonics: Vec<(f64, f64)> = (1..)
        .map(|h| h as f64)
        .take_while(|h| h * var.f0 < nyquist - 200.0)
        .map(|h| {
            let f = h * var.f0;
            let gain: f64 = formants
                .iter()
                .zip(FORMANT_BANDWIDTHS)
                .map(|(&c, b)| resonance_gain(f, c, b))
                .product();
            (h, gain / h)
        })
        .collect();
    let attack = 0.02 * fs;
    let release = 0.05 * fs;
    let mut phase = 0.0;
    for (i, sample) in out[vowel_start..vowel_end].iter_mut().enumerate() {
        let t = i as f64 / fs;
        let inst_f0 = var.f0 * (1.0 + 0.01 * (2.0 * PI * 5.0 * t).sin());
        phase += 2.0 * PI * inst_f0 / fs;
        let remaining = (vowel_end - vowel_start - i) as f64;
        let env = (i as f64 / attack).min(1.0) * (remaining / release).min(1.0);
        let v: f64 = harmonics.iter().map(|&(h, a)| a * (h * phase).sin()).sum();
        *sample += 0.1 * env * v;
    }

    let tilt = severity * spec.degradation.tilt_db_per_octave + var.tilt_offset;
    let mut signal = apply_tilt(&out, tilt, fs);

    if let Some(snr_db) = spec.degradation.snr_db(severity).map(|d| d + var.snr_offset) {
        let active = &signal[lead..vowel_end.min(n)];
        let rms = (active.iter().map(|x| x * x).sum::<f64>() / active.len().max(1) as f64).sqrt();
        let noise_rms = rms / 10f64.powf(snr_db / 20.0);
        // Uniform noise on [-a, a] has rms a/√3.
        let a = noise_rms * 3f64.sqrt();
        for x in signal.iter_mut() {
            *x += rng.random_range(-a..=a);
        }
    }

    let peak = signal.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        let g = 0.8 / peak;
        signal.iter_mut().for_each(|x| *x *= g);
    }
    signal
}

fn patient_f0(spec: &SynthSpec, index: usize) -> f64 {
    let id = SynthSpec::patient_id(index);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &id, 0, ""));
    match SynthSpec::patient_sex(index) {
        Sex::Male => rng.random_range(90.0..150.0),
        Sex::Female => rng.random_range(150.0..220.0),
    }
}

fn audio_rel_path(patient: &str, session: u32, syllable: &str) -> PathBuf {
    PathBuf::from("audio").join(format!("{patient}_s{session}_{syllable}.wav"))
}

/// Renders and writes one recording; returns its manifest-relative path.
fn write_recording(
    spec: &SynthSpec,
    out_dir: &Path,
    patient_index: usize,
    session: u32,
    syllable: &str,
    severity: f64,
) -> Result<PathBuf> {
    let patient = SynthSpec::patient_id(patient_index);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &patient, session, syllable));
    let samples = render_syllable(spec, syllable, patient_f0(spec, patient_index), severity, &mut rng);
    let rel = audio_rel_path(&patient, session, syllable);
    write_wav(&out_dir.join(&rel), &samples, spec.sample_rate_hz)?;
    Ok(rel)
}

pub const MANIFEST_FILE: &str = "manifest.csv";

/// Writes sessions 1 (severity 0, class 1) and 2 (severity 1, class 0) for
/// every patient plus `manifest.csv` under `out_dir`.
pub fn generate_corpus(spec: &SynthSpec, out_dir: &Path) -> Result<Manifest> {
    spec.validate()?;
    let audio = out_dir.join("audio");
    fs::create_dir_all(&audio).map_err(|source| SynthError::Io {
        path: audio.clone(),
        source,
    })?;
    let syllables = spec.syllable_ids();
    let mut patients = Vec::new();
    let mut records = Vec::new();
    for p in 0..spec.n_patients {
        let patient_id = SynthSpec::patient_id(p);
        patients.push(PatientInfo {
            id: patient_id.clone(),
            sex: SynthSpec::patient_sex(p),
        });
        for (session, severity) in [(1u32, 0.0), (2, 1.0)] {
            for syl in &syllables {
                let audio_path = write_recording(spec, out_dir, p, session, syl, severity)?;
                records.push(SyllableRecord {
                    patient_id: patient_id.clone(),
                    session_index: session,
                    syllable_id: syl.clone(),
                    syllable_set: spec.syllable_set,
                    audio_path,
                    class_label: SyllableRecord::expected_label(session),
                    expert_mark: None,
                });
            }
        }
    }
    let manifest = Manifest::new(spec.sample_rate_hz, patients, records, out_dir)?;
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Appends rehabilitation sessions for one patient at the given severities
/// (sessions numbered after the patient's last session). With
/// `expert_threshold`, each record gets a rule-based expert mark: 1 iff
/// severity < threshold. The updated manifest is saved back to `out_dir`.
pub fn generate_trajectory(
    spec: &SynthSpec,
    out_dir: &Path,
    patient_index: usize,
    severities: &[f64],
    expert_threshold: Option<f64>,
) -> Result<Manifest> {
    spec.validate()?;
    if let Some(s) = severities.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(SynthError::InvalidSpec(format!("severity {s} outside [0, 1]")));
    }
    if patient_index >= spec.n_patients {
        return Err(SynthError::InvalidSpec(format!(
            "patient index {patient_index} out of range for {} patients",
            spec.n_patients
        )));
    }
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut manifest = Manifest::load(&manifest_path)?;
    let patient_id = SynthSpec::patient_id(patient_index);
    let first = manifest
        .records
        .iter()
        .filter(|r| r.patient_id == patient_id)
        .map(|r| r.session_index)
        .max()
        .unwrap_or(0)
        + 1;
    let syllables = spec.syllable_ids();
    for (k, &severity) in severities.iter().enumerate() {
        let session = first.max(3) + k as u32;
        for syl in &syllables {
            let audio_path = write_recording(spec, out_dir, patient_index, session, syl, severity)?;
            manifest.records.push(SyllableRecord {
                patient_id: patient_id.clone(),
                session_index: session,
                syllable_id: syl.clone(),
                syllable_set: spec.syllable_set,
                audio_path,
                class_label: None,
                expert_mark: expert_threshold.map(|t| u8::from(severity < t)),
            });
        }
    }
    manifest.validate()?;
    manifest.save(&manifest_path)?;
    Ok(manifest)
}
