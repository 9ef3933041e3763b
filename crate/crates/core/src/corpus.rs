//! Turns manifest records into spectrogram fragments.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dataset::{
    split_by_group, split_fragments, DatasetError, Manifest, RecordKey, SplitAssignment, SplitBy,
    SyllableRecord,
};
use crate::dsp::{pipeline, DspConfig, DspError, Fragment};
use crate::wav::{read_wav, WavError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("{record}: {source}")]
    Dsp {
        record: RecordKey,
        #[source]
        source: DspError,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Fragments of the selected recordings, in canonical order (sorted by
/// source), plus the recordings that produced none.
#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub fragments: Vec<Fragment>,
    pub empty: Vec<RecordKey>,
}

/// Reads and preprocesses every record accepted by `keep`.
pub fn extract(
    manifest: &Manifest,
    dsp: &DspConfig,
    keep: impl Fn(&SyllableRecord) -> bool,
) -> Result<Extraction> {
    let mut out = Extraction::default();
    for record in manifest.records.iter().filter(|r| keep(r)) {
        let buf = read_wav(&manifest.resolve_audio(record), manifest.sample_rate_hz)?;
        let frags = pipeline(
            &buf,
            dsp,
            &record.patient_id,
            record.session_index,
            &record.syllable_id,
        )
        .map_err(|source| CorpusError::Dsp {
            record: record.key(),
            source,
        })?;
        if frags.is_empty() {
            out.empty.push(record.key());
        }
        out.fragments.extend(frags);
    }
    out.fragments.sort_by(|a, b| a.source.cmp(&b.source));
    out.empty.sort();
    Ok(out)
}

/// Labelled training material: fragments of every record that carries a
/// class label, with the label of its record.
#[derive(Debug, Clone)]
pub struct Labelled {
    pub fragments: Vec<Fragment>,
    pub labels: Vec<u8>,
    pub empty: Vec<RecordKey>,
}

pub fn labelled(manifest: &Manifest, dsp: &DspConfig) -> Result<Labelled> {
    let label_of: BTreeMap<RecordKey, u8> = manifest
        .records
        .iter()
        .filter_map(|r| r.class_label.map(|l| (r.key(), l)))
        .collect();
    let ex = extract(manifest, dsp, |r| r.class_label.is_some())?;
    let labels = ex
        .fragments
        .iter()
        .map(|f| {
            let s = &f.source;
            label_of[&RecordKey {
                patient_id: s.patient_id.clone(),
                session_index: s.session_index,
                syllable_id: s.syllable_id.clone(),
            }]
        })
        .collect();
    Ok(Labelled {
        fragments: ex.fragments,
        labels,
        empty: ex.empty,
    })
}

impl Labelled {
    pub fn split(&self, by: SplitBy, ratio: f64, seed: u64) -> Result<SplitAssignment> {
        let split = match by {
            SplitBy::Fragment => split_fragments(self.fragments.len(), &self.labels, ratio, seed)?,
            SplitBy::Syllable => {
                let groups: Vec<(&str, u32, &str)> = self
                    .fragments
                    .iter()
                    .map(|f| {
                        let s = &f.source;
                        (s.patient_id.as_str(), s.session_index, s.syllable_id.as_str())
                    })
                    .collect();
                split_by_group(&groups, &self.labels, ratio, seed)?
            }
        };
        Ok(split)
    }
}

/// Fragments of one session grouped by syllable. Syllables listed in the
/// manifest but yielding no fragments appear with an empty list.
#[derive(Debug, Clone)]
pub struct SessionFragments {
    pub patient_id: String,
    pub session_index: u32,
    pub syllables: Vec<(String, Vec<Fragment>)>,
}

/// Groups the fragments of every session accepted by `keep_session`.
/// Sessions are ordered by (patient, session), syllables by id.
pub fn sessions(
    manifest: &Manifest,
    dsp: &DspConfig,
    keep_session: impl Fn(u32) -> bool,
) -> Result<Vec<SessionFragments>> {
    let ex = extract(manifest, dsp, |r| keep_session(r.session_index))?;
    let mut grouped: BTreeMap<(String, u32), BTreeMap<String, Vec<Fragment>>> = BTreeMap::new();
    for r in manifest.records.iter().filter(|r| keep_session(r.session_index)) {
        grouped
            .entry((r.patient_id.clone(), r.session_index))
            .or_default()
            .entry(r.syllable_id.clone())
            .or_default();
    }
    for f in ex.fragments {
        let s = &f.source;
        grouped
            .get_mut(&(s.patient_id.clone(), s.session_index))
            .and_then(|m| m.get_mut(&s.syllable_id))
            .expect("fragment from a selected record")
            .push(f);
    }
    Ok(grouped
        .into_iter()
        .map(|((patient_id, session_index), syl)| SessionFragments {
            patient_id,
            session_index,
            syllables: syl.into_iter().collect(),
        })
        .collect())
}
