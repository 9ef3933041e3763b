use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;
use log::{info, warn};
use sylscore::corpus;
use sylscore::dataset::{Cohort, Completeness, Manifest, RecordKey};
use sylscore::dsp::DspConfig;
use sylscore::nn::{self, Architecture, Model, TrainConfig};
use sylscore::scoring::report::{Document, ExpertComparison, Format, ScoreSummary};
use sylscore::scoring::{evaluate, pearson, score_session, Aggregation, ScoringError};
use sylscore::synth::{generate_corpus, generate_trajectory, SynthSpec};

use crate::args::{DspArgs, EvalArgs, OutputArgs, ReportArgs, ScoreArgs, SynthArgs, TrainArgs};
use crate::exit::{coded, io_error, usage, DEGENERATE, VALIDATION};

fn format_for(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
        Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Text,
    }
}

fn emit(doc: &Document, out: &OutputArgs) -> Result<()> {
    let format = out
        .format
        .or_else(|| out.out.as_deref().map(format_for))
        .unwrap_or_default();
    let text = doc.render(format);
    match &out.out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_error(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_manifest(path: &Path, drop_incomplete: bool) -> Result<Manifest> {
    let completeness = if drop_incomplete {
        Completeness::DropPatient
    } else {
        Completeness::Reject
    };
    let (manifest, dropped) = Manifest::load_with(path, completeness)?;
    for p in dropped {
        warn!("dropped patient {p}: missing session 1 or 2 recordings");
    }
    Ok(manifest)
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let mut spec = SynthSpec {
        n_patients: a.patients,
        syllables_per_set: a.syllables,
        sample_rate_hz: a.sample_rate,
        duration_s: a.duration,
        syllable_set: a.syllable_set,
        seed: a.seed,
        ..Default::default()
    };
    let d = &mut spec.degradation;
    if let Some(v) = a.formant_shift {
        d.formant_shift_hz = v;
    }
    if let Some(v) = a.tilt {
        d.tilt_db_per_octave = v;
    }
    if let Some(v) = a.snr_clean {
        d.snr_clean_db = Some(v);
    }
    if let Some(v) = a.snr_degraded {
        d.snr_degraded_db = Some(v);
    }
    if a.no_noise {
        d.snr_clean_db = None;
        d.snr_degraded_db = None;
    }
    spec.validate()?;
    let mut manifest = generate_corpus(&spec, &a.out)?;
    if a.severities.is_empty() {
        if a.expert_threshold.is_some() {
            warn!("--expert-threshold has no effect without --severities");
        }
    } else {
        for p in 0..spec.n_patients {
            manifest = generate_trajectory(&spec, &a.out, p, &a.severities, a.expert_threshold)?;
        }
    }
    println!(
        "wrote {} recordings for {} patient(s) to {}",
        manifest.records.len(),
        manifest.patients.len(),
        a.out.display()
    );
    Ok(())
}

fn dsp_config(a: &DspArgs) -> Result<DspConfig> {
    let cfg = DspConfig {
        hop: a.hop,
        window: a.window,
        gate_ratio: a.gate_ratio,
        log_compress: !a.no_log,
        fragment_hop: a.fragment_hop,
        ..Default::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let dsp = dsp_config(&a.dsp)?;
    let tc = TrainConfig {
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        epochs: a.epochs,
        seed: a.seed,
        clip_norm: (!a.no_clip).then_some(a.clip_norm),
        standardize: a.standardize,
        ..Default::default()
    };
    tc.validate().map_err(|e| usage(e.to_string()))?;

    let manifest = load_manifest(&a.manifest.manifest, a.manifest.drop_incomplete)?
        .filter_cohort(&a.cohort)?;
    let data = corpus::labelled(&manifest, &dsp)?;
    for k in &data.empty {
        warn!("{k}: no fragments after silence gating");
    }
    if data.fragments.is_empty() {
        return Err(coded(DEGENERATE, format!("cohort {} yields no fragments", a.cohort)));
    }
    let split = data.split(a.split_by, a.train_ratio, a.seed)?;
    info!(
        "cohort {}: {} fragments, {} train / {} test",
        a.cohort,
        data.fragments.len(),
        split.train.len(),
        split.test.len()
    );
    let (mut model, trace) = nn::train(
        &data.fragments,
        &data.labels,
        &split,
        &tc,
        Architecture::standard(),
        &dsp,
    )?;
    model.meta.cohort = Some(a.cohort.clone());
    model.meta.split_by = a.split_by;
    model.meta.train_ratio = a.train_ratio;
    model.meta.drop_incomplete = a.manifest.drop_incomplete;
    model.save(&a.out)?;

    let trace_path = a
        .trace
        .clone()
        .unwrap_or_else(|| a.out.with_extension("trace.csv"));
    let doc = Document::Trace(trace);
    std::fs::write(&trace_path, doc.render(format_for(&trace_path)))
        .map_err(|e| io_error(&trace_path, e))?;

    if let Some(m) = model.meta.final_metrics {
        println!(
            "{}: train accuracy {:.4}, test accuracy {:.4} after {} epochs",
            a.cohort.label(),
            m.train_accuracy,
            m.test_accuracy,
            m.epoch
        );
    }
    println!("model: {}", a.out.display());
    println!("trace: {}", trace_path.display());
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let mut reports = Vec::new();
    for path in &a.models {
        let model = Model::load(path)?;
        let cohort = model.meta.cohort.clone().unwrap_or(Cohort::All);
        let manifest =
            load_manifest(&a.manifest, model.meta.drop_incomplete)?.filter_cohort(&cohort)?;
        let data = corpus::labelled(&manifest, &model.dsp)?;
        let split = data.split(model.meta.split_by, model.meta.train_ratio, model.meta.seed)?;
        reports.push(evaluate(&model, &data.fragments, &data.labels, &split)?);
    }
    emit(&Document::Eval { reports }, &a.output)
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let mut manifest = load_manifest(&a.manifest, model.meta.drop_incomplete)?;
    if a.patients.is_empty() {
        let cohort = model.meta.cohort.clone().unwrap_or(Cohort::All);
        manifest = manifest.filter_cohort(&cohort)?;
    } else {
        for p in &a.patients {
            if manifest.sex_of(p).is_none() {
                return Err(coded(VALIDATION, format!("patient {p} is not in the manifest")));
            }
        }
        manifest.records.retain(|r| a.patients.contains(&r.patient_id));
        manifest.patients.retain(|p| a.patients.contains(&p.id));
    }
    let keep = |s: u32| {
        if a.sessions.is_empty() {
            s >= 3
        } else {
            a.sessions.contains(&s)
        }
    };
    let sessions = corpus::sessions(&manifest, &model.dsp, keep)?;
    if sessions.is_empty() {
        return Err(coded(DEGENERATE, "no sessions to score"));
    }
    let aggregation = if a.fragment_mean {
        Aggregation::FragmentMean
    } else {
        Aggregation::SyllableMean
    };

    let mut reports = Vec::new();
    let mut unscored = Vec::new();
    for s in &sessions {
        match score_session(&model, s, aggregation) {
            Ok(r) => {
                if !r.missing_syllables.is_empty() {
                    warn!(
                        "{}/{}: no fragments for syllables {}",
                        r.patient_id,
                        r.session_index,
                        r.missing_syllables.join(", ")
                    );
                }
                reports.push(r);
            }
            Err(ScoringError::EmptySession {
                patient_id,
                session_index,
            }) => {
                warn!("{patient_id}/{session_index}: no fragments after gating; session not scored");
                unscored.push((patient_id, session_index));
            }
            Err(e) => return Err(e.into()),
        }
    }

    let expert = if a.expert_marks {
        let marks: BTreeMap<RecordKey, u8> = manifest
            .records
            .iter()
            .filter_map(|r| r.expert_mark.map(|m| (r.key(), m)))
            .collect();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for r in &reports {
            for y in &r.syllables {
                let key = RecordKey {
                    patient_id: r.patient_id.clone(),
                    session_index: r.session_index,
                    syllable_id: y.syllable_id.clone(),
                };
                if let Some(&m) = marks.get(&key) {
                    xs.push(y.score);
                    ys.push(f64::from(m));
                }
            }
        }
        if xs.is_empty() {
            return Err(coded(
                VALIDATION,
                "--expert-marks: the manifest has no expert marks for the scored sessions",
            ));
        }
        Some(match pearson(&xs, &ys) {
            Ok(r) => ExpertComparison {
                n_pairs: xs.len(),
                pearson: Some(r),
                note: None,
            },
            Err(e) => {
                warn!("expert correlation undefined: {e}");
                ExpertComparison {
                    n_pairs: xs.len(),
                    pearson: None,
                    note: Some(e.to_string()),
                }
            }
        })
    } else {
        None
    };

    let doc = Document::Scores(ScoreSummary {
        aggregation,
        sessions: reports,
        unscored_sessions: unscored,
        expert,
    });
    emit(&doc, &a.output)
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| io_error(&a.input, e))?;
    let doc = Document::from_json(&text)
        .map_err(|e| coded(VALIDATION, format!("{}: not a report: {e}", a.input.display())))?;
    emit(&doc, &a.output)
}
