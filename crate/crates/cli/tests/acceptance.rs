//! Acceptance suite. Runs every criterion in order and prints one
//! `criterion N PASS|FAIL` line each; exits non-zero if any failed.

use std::f64::consts::PI;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sylscore::corpus::{self, Labelled};
use sylscore::dataset::{split_fragments, Manifest, SplitBy, DEFAULT_TRAIN_RATIO};
use sylscore::dsp::{
    fragment_count, slice_fragments, stft_magnitude, DspConfig, Fragment, FragmentSource,
    SampleBuffer, Spectrogram, Window, FRAGMENT_FRAMES, NUM_BINS,
};
use sylscore::nn::{
    bce_loss, forward_batch, initialize, loss_and_gradient, train, Architecture, Model,
    TrainConfig, STANDARD_PARAM_COUNT,
};
use sylscore::scoring::report::Document;
use sylscore::scoring::{pearson, score_session, spearman, Aggregation};
use sylscore::synth::{generate_corpus, generate_trajectory, SynthSpec, MANIFEST_FILE};

const BIN: &str = env!("CARGO_BIN_EXE_sylscore");

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

// Criterion 1: analytic gradients vs central differences.

fn mean_loss(arch: &Architecture, params: &[f64], inputs: &[f64], labels: &[u8]) -> f64 {
    let probs = forward_batch(arch, params, inputs).unwrap();
    probs.iter().zip(labels).map(|(&p, &y)| bce_loss(p, y)).sum::<f64>() / labels.len() as f64
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    // Input dim 2, LSTM 3, LSTM 3, dense 2, dense 2, output 1; 3 time steps.
    let arch = Architecture::reduced(3, 2, 3, 3, 2, 2);
    let step = 1e-5;
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = initialize(&arch, &mut rng);
        for p in params.iter_mut() {
            *p += rng.random_range(-0.3..0.3);
        }
        let batch = 3;
        let inputs: Vec<f64> = (0..batch * arch.input_len())
            .map(|_| rng.random_range(-1.5..1.5))
            .collect();
        let labels: Vec<u8> = (0..batch).map(|i| (i % 2) as u8).collect();
        let (_, grad) = loss_and_gradient(&arch, &params, &inputs, &labels).unwrap();
        for i in 0..params.len() {
            let orig = params[i];
            params[i] = orig + step;
            let up = mean_loss(&arch, &params, &inputs, &labels);
            params[i] = orig - step;
            let down = mean_loss(&arch, &params, &inputs, &labels);
            params[i] = orig;
            let numeric = (up - down) / (2.0 * step);
            // Floor of 1e-6 on the scale: below it central differences are
            // dominated by rounding noise (~1e-11).
            let err = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-6);
            check(
                err < 1e-4,
                format!("seed {seed} param {i}: analytic {} numeric {numeric}", grad[i]),
            )?;
            worst = worst.max(err);
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(10), format!("took {}", secs(elapsed)))?;
    Ok(format!(
        "{} params x 5 seeds, max relative error {worst:.2e}, {}",
        arch.param_count(),
        secs(elapsed)
    ))
}

// Criterion 2: parameter count and output range.

fn criterion_2() -> Outcome {
    let arch = Architecture::standard();
    let lstm = |i: usize, u: usize| 4 * (i + u + 1) * u;
    let dense = |i: usize, u: usize| (i + 1) * u;
    let closed = lstm(513, 128) + lstm(128, 64) + dense(64, 64) + dense(64, 16) + dense(16, 1);
    check(closed == 383_329, format!("closed form gives {closed}"))?;
    check(
        arch.param_count() == 383_329 && STANDARD_PARAM_COUNT == 383_329,
        format!("model reports {}", arch.param_count()),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut params = initialize(&arch, &mut rng);
    check(params.len() == 383_329, format!("initialized {} params", params.len()))?;
    // Widen the weights so the output layer is driven into both saturation
    // regions as well as the linear part.
    for p in params.iter_mut() {
        *p *= 4.0;
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut n = 0;
    for _ in 0..1000 / 50 {
        let mut batch = Vec::with_capacity(50 * arch.input_len());
        for _ in 0..50 {
            let scale = 10f64.powi(rng.random_range(-3..4));
            let kind = rng.random_range(0..4);
            for k in 0..arch.input_len() {
                batch.push(match kind {
                    0 => rng.random_range(-scale..scale),
                    1 => scale,
                    2 => -scale * (k % 7) as f64,
                    _ => 0.0,
                });
            }
        }
        for p in forward_batch(&arch, &params, &batch).unwrap() {
            check((0.0..=1.0).contains(&p), format!("output {p} outside [0, 1]"))?;
            lo = lo.min(p);
            hi = hi.max(p);
            n += 1;
        }
    }
    Ok(format!(
        "383329 params (closed form and layout agree); {n} fuzzed fragments, outputs in [{lo:.3}, {hi:.3}]"
    ))
}

// Criterion 3: DSP oracles.

fn naive_dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &v) in x.iter().enumerate() {
                let a = 2.0 * PI * (k * j % n) as f64 / n as f64;
                re += v * a.cos();
                im -= v * a.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let rect = DspConfig {
        window: Window::Rect,
        ..DspConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let samples: Vec<f64> = (0..1024 + 4 * 256).map(|_| rng.random_range(-1.0..1.0)).collect();
    let spec = stft_magnitude(&SampleBuffer::new(samples.clone(), 16000).unwrap(), &rect).unwrap();
    let mut worst_parseval = 0.0f64;
    let mut worst_dft = 0.0f64;
    for t in 0..spec.n_frames() {
        let x = &samples[t * 256..t * 256 + 1024];
        let mags = spec.frame(t);
        // One-sided Parseval: DC and Nyquist once, the rest twice.
        let spectral: f64 = mags
            .iter()
            .enumerate()
            .map(|(k, m)| if k == 0 || k == 512 { m * m } else { 2.0 * m * m })
            .sum::<f64>()
            / 1024.0;
        let temporal: f64 = x.iter().map(|v| v * v).sum();
        worst_parseval = worst_parseval.max((spectral - temporal).abs() / temporal);
        if t < 2 {
            for (a, b) in mags.iter().zip(naive_dft_magnitudes(x)) {
                worst_dft = worst_dft.max((a - b).abs() / b.max(1.0));
            }
        }
    }
    check(worst_parseval < 1e-6, format!("Parseval relative error {worst_parseval:e}"))?;
    check(worst_dft < 1e-9, format!("FFT vs naive DFT error {worst_dft:e}"))?;

    for k in [1usize, 64, 256, 511] {
        let x: Vec<f64> = (0..4096)
            .map(|n| (2.0 * PI * k as f64 * n as f64 / 1024.0).sin())
            .collect();
        let spec = stft_magnitude(&SampleBuffer::new(x, 16000).unwrap(), &DspConfig::default())
            .unwrap();
        for t in 0..spec.n_frames() {
            let f = spec.frame(t);
            let argmax = (0..NUM_BINS).max_by(|&a, &b| f[a].total_cmp(&f[b])).unwrap();
            check(argmax == k, format!("sine at bin {k}: frame {t} peaks at {argmax}"))?;
        }
    }

    let cfg = DspConfig::default();
    for t in 0..100usize {
        let brute = (0..t)
            .step_by(cfg.fragment_hop)
            .filter(|s| s + FRAGMENT_FRAMES <= t)
            .count();
        let formula = fragment_count(t, cfg.fragment_hop);
        let spec = Spectrogram::from_frames(vec![1.0; t * NUM_BINS], 256).unwrap();
        let sliced = slice_fragments(&spec, &cfg, "P", 1, "sa").len();
        check(
            formula == brute && sliced == brute,
            format!("T={t}: formula {formula}, sliced {sliced}, enumeration {brute}"),
        )?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(5), format!("took {}", secs(elapsed)))?;
    Ok(format!(
        "Parseval max rel error {worst_parseval:.1e}, FFT vs DFT {worst_dft:.1e}; sine argmax ok for k in 1,64,256,511; fragment count ok for T in 0..100; {}",
        secs(elapsed)
    ))
}

// Criterion 4: learning on the default individual corpus, plus a null-label control.

struct Trained {
    dir: tempfile::TempDir,
    model: Model,
    data: Labelled,
    train_time: Duration,
}

/// Labels independent of the true class: within each class, a seeded
/// shuffle then alternating 0/1.
fn null_labels(labels: &[u8], seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0u8; labels.len()];
    for c in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            out[i] = (j % 2) as u8;
        }
    }
    out
}

fn criterion_4(slot: &mut Option<Trained>) -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec::default();
    let manifest = generate_corpus(&spec, dir.path()).unwrap();
    let dsp = DspConfig::default();
    let data = corpus::labelled(&manifest, &dsp).unwrap();
    let split = data.split(SplitBy::Fragment, DEFAULT_TRAIN_RATIO, 0).unwrap();
    let tc = TrainConfig::default();
    let t0 = Instant::now();
    let (model, trace) = train(
        &data.fragments,
        &data.labels,
        &split,
        &tc,
        Architecture::standard(),
        &dsp,
    )
    .unwrap();
    let train_time = t0.elapsed();
    let last = *trace.last().unwrap();
    let (train_acc, test_acc) = (last.train_accuracy, last.test_accuracy);

    let mut null_accs = Vec::new();
    for k in 1..=5u64 {
        let labels = null_labels(&data.labels, k);
        let split = split_fragments(labels.len(), &labels, DEFAULT_TRAIN_RATIO, 0).unwrap();
        let (_, trace) = train(
            &data.fragments,
            &labels,
            &split,
            &tc,
            Architecture::standard(),
            &dsp,
        )
        .unwrap();
        null_accs.push(trace.last().unwrap().test_accuracy);
    }
    let null_mean = null_accs.iter().sum::<f64>() / null_accs.len() as f64;
    let elapsed = start.elapsed();
    let detail = format!(
        "{} fragments ({} train / {} test), epoch {}: train {train_acc:.4}, test {test_acc:.4}; null-label test accuracy {:?} mean {null_mean:.4}; training {}, total {}",
        data.fragments.len(),
        split.train.len(),
        split.test.len(),
        last.epoch,
        null_accs.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>(),
        secs(train_time),
        secs(elapsed)
    );
    *slot = Some(Trained {
        dir,
        model,
        data,
        train_time,
    });
    check(test_acc >= 0.95, format!("test accuracy below 0.95: {detail}"))?;
    check(train_acc >= 0.98, format!("train accuracy below 0.98: {detail}"))?;
    check(
        (0.4..=0.6).contains(&null_mean),
        format!("null control outside [0.4, 0.6]: {detail}"),
    )?;
    check(elapsed < Duration::from_secs(300), format!("too slow: {detail}"))?;
    Ok(detail)
}

// Criterion 5: trajectory monotonicity.

fn criterion_5(trained: Option<&Trained>) -> Outcome {
    let t = trained.ok_or("criterion 4 produced no model")?;
    let start = Instant::now();
    let severities = [0.9, 0.7, 0.5, 0.3, 0.1];
    let manifest =
        generate_trajectory(&SynthSpec::default(), t.dir.path(), 0, &severities, None).unwrap();
    let sessions = corpus::sessions(&manifest, &t.model.dsp, |s| s >= 3).unwrap();
    check(sessions.len() == 5, format!("{} sessions", sessions.len()))?;
    let qs: Vec<f64> = sessions
        .iter()
        .map(|s| score_session(&t.model, s, Aggregation::SyllableMean).unwrap().score)
        .collect();
    let rho = spearman(&severities, &qs).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed() + t.train_time;
    let detail = format!(
        "Q by severity 0.9..0.1 = {:?}, spearman {rho:.4}; {} including training",
        qs.iter().map(|q| format!("{q:.4}")).collect::<Vec<_>>(),
        secs(elapsed)
    );
    check(rho <= -0.9, detail.clone())?;
    check(elapsed < Duration::from_secs(300), format!("too slow: {detail}"))?;
    Ok(detail)
}

// Criterion 6: determinism of full CLI runs.

fn sylscore(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "sylscore {args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn full_run(dir: &Path) -> Result<(), String> {
    sylscore(
        dir,
        &[
            "synth", "--out", "corpus", "--seed", "11", "--severities", "0.9,0.7,0.5,0.3,0.1",
            "--expert-threshold", "0.5",
        ],
    )?;
    sylscore(
        dir,
        &[
            "train", "--manifest", "corpus/manifest.csv", "--cohort", "individual:P01", "--seed",
            "11", "--out", "model.json",
        ],
    )?;
    sylscore(
        dir,
        &[
            "score", "--manifest", "corpus/manifest.csv", "--model", "model.json",
            "--expert-marks", "--out", "scores.json",
        ],
    )
}

fn criterion_6(runs: &mut Vec<PathBuf>, keep: &mut Vec<tempfile::TempDir>) -> Outcome {
    let start = Instant::now();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        full_run(dir.path())?;
        runs.push(dir.path().to_path_buf());
        keep.push(dir);
    }
    let read = |run: &Path, f: &str| fs::read(run.join(f)).unwrap();
    for f in ["model.json", "model.trace.csv", "scores.json", "corpus/manifest.csv"] {
        check(read(&runs[0], f) == read(&runs[1], f), format!("{f} differs between runs"))?;
    }
    let wavs = fs::read_dir(runs[0].join("corpus/audio")).unwrap().count();
    for e in fs::read_dir(runs[0].join("corpus/audio")).unwrap() {
        let name = e.unwrap().file_name();
        let a = fs::read(runs[0].join("corpus/audio").join(&name)).unwrap();
        let b = fs::read(runs[1].join("corpus/audio").join(&name)).unwrap();
        check(a == b, format!("{name:?} differs between runs"))?;
    }
    Ok(format!(
        "two synth -> train -> score runs: model, trace, scores, manifest and {wavs} WAV files byte-identical; {}",
        secs(start.elapsed())
    ))
}

// Criterion 7: correlation machinery.

fn closed_form_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn criterion_7(runs: &[PathBuf]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_closed, mut worst_affine) = (0.0f64, 0.0f64);
    for case in 0..100 {
        let n = rng.random_range(3..20);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let y: Vec<f64> = if case % 4 == 0 {
            // Binary second argument, as with expert marks.
            let mut y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
            y.shuffle(&mut rng);
            y
        } else {
            (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()
        };
        let r = pearson(&x, &y).map_err(|e| e.to_string())?;
        worst_closed = worst_closed.max((r - closed_form_pearson(&x, &y)).abs());
        let a = rng.random_range(0.1..10.0);
        let b = rng.random_range(-5.0..5.0);
        let xa: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let ya: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        worst_affine = worst_affine
            .max((pearson(&xa, &y).unwrap() - r).abs())
            .max((pearson(&x, &ya).unwrap() - r).abs());
    }
    check(worst_closed <= 1e-12, format!("closed-form deviation {worst_closed:e}"))?;
    check(worst_affine <= 1e-12, format!("affine deviation {worst_affine:e}"))?;

    let run = runs.first().ok_or("criterion 6 produced no run")?;
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("scores.json")).unwrap()).unwrap();
    let r = doc["expert"]["pearson"]
        .as_f64()
        .ok_or("score report has no expert correlation")?;
    let n = doc["expert"]["n_pairs"].as_u64().unwrap_or(0);
    let detail = format!(
        "closed form max deviation {worst_closed:.1e}, affine max deviation {worst_affine:.1e} over 100 cases; --expert-marks (mark = 1 iff severity < 0.5) pearson {r:.4} over {n} syllables"
    );
    check((-1.0..=1.0).contains(&r) && r >= 0.8, detail.clone())?;
    Ok(detail)
}

// Criterion 8: round trips.

fn criterion_8(trained: Option<&Trained>, runs: &[PathBuf]) -> Outcome {
    let t = trained.ok_or("criterion 4 produced no model")?;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    t.model.save(&path).unwrap();
    let loaded = Model::load(&path).unwrap();
    check(loaded.params() == t.model.params(), "parameters changed on reload")?;
    let before = t.model.forward_many(&t.data.fragments).unwrap();
    let after = loaded.forward_many(&t.data.fragments).unwrap();
    let identical = before
        .iter()
        .zip(&after)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    check(identical, "forward outputs differ after reload")?;
    check(
        loaded.to_bytes().unwrap() == fs::read(&path).unwrap(),
        "re-saved model bytes differ",
    )?;
    let single = loaded.forward(&t.data.fragments[0]).unwrap();
    check(single.to_bits() == after[0].to_bits(), "single vs batched forward differ")?;

    let manifest_path = t.dir.path().join(MANIFEST_FILE);
    let original = fs::read_to_string(&manifest_path).unwrap();
    let manifest = Manifest::load(&manifest_path).unwrap();
    let copy = dir.path().join("manifest.csv");
    manifest.save(&copy).unwrap();
    check(
        fs::read_to_string(&copy).unwrap() == original,
        "manifest text changed on load/save",
    )?;
    let reparsed = Manifest::parse(&original, t.dir.path()).unwrap();
    check(
        reparsed.records == manifest.records && reparsed.patients == manifest.patients,
        "manifest records changed on reparse",
    )?;

    let run = runs.first().ok_or("criterion 6 produced no run")?;
    let text = fs::read_to_string(run.join("scores.json")).unwrap();
    let doc = Document::from_json(&text).map_err(|e| e.to_string())?;
    check(doc.render(sylscore::scoring::report::Format::Json) == text, "score json re-render differs")?;
    let Document::Scores(summary) = &doc else {
        return Err("scores.json is not a score report".into());
    };
    let raw: serde_json::Value = serde_json::from_str(&text).unwrap();
    for (i, s) in summary.sessions.iter().enumerate() {
        let q = raw["sessions"][i]["score"].as_f64().unwrap();
        check(q.to_bits() == s.score.to_bits(), "session score not exact after parse")?;
    }

    let frag = Fragment::new(
        vec![0.25; Fragment::LEN],
        FragmentSource {
            patient_id: "P01".into(),
            session_index: 1,
            syllable_id: "sa".into(),
            fragment_index: 0,
        },
    )
    .unwrap();
    let p = loaded.forward(&frag).unwrap();
    check(p.to_bits() == t.model.forward(&frag).unwrap().to_bits(), "probe fragment differs")?;

    Ok(format!(
        "model reload: {} outputs bit-identical, file bytes stable; manifest ({} records) load/save identical; score report json round trip exact",
        after.len(),
        manifest.records.len()
    ))
}

fn report(n: usize, title: &str, outcome: std::thread::Result<Outcome>) -> bool {
    let (ok, detail) = match outcome {
        Ok(Ok(d)) => (true, d),
        Ok(Err(e)) => (false, e),
        Err(p) => (
            false,
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()),
        ),
    };
    println!(
        "criterion {n} {}: {title}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn main() {
    let mut results = Vec::new();
    let mut trained = None;
    let mut runs = Vec::new();
    let mut keep = Vec::new();

    results.push(report(1, "gradient check", catch_unwind(criterion_1)));
    results.push(report(2, "architecture", catch_unwind(criterion_2)));
    results.push(report(3, "dsp oracles", catch_unwind(criterion_3)));
    results.push(report(
        4,
        "learning on separable data",
        catch_unwind(AssertUnwindSafe(|| criterion_4(&mut trained))),
    ));
    results.push(report(
        5,
        "rehabilitation monotonicity",
        catch_unwind(AssertUnwindSafe(|| criterion_5(trained.as_ref()))),
    ));
    results.push(report(
        6,
        "determinism",
        catch_unwind(AssertUnwindSafe(|| criterion_6(&mut runs, &mut keep))),
    ));
    results.push(report(
        7,
        "correlation",
        catch_unwind(AssertUnwindSafe(|| criterion_7(&runs))),
    ));
    results.push(report(
        8,
        "round trips",
        catch_unwind(AssertUnwindSafe(|| criterion_8(trained.as_ref(), &runs))),
    ));

    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
