use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DatasetError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SyllableSet {
    Gost100,
    Problem90,
    Other,
}

impl FromStr for SyllableSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gost100" => Ok(SyllableSet::Gost100),
            "problem90" => Ok(SyllableSet::Problem90),
            "other" => Ok(SyllableSet::Other),
            _ => Err(format!(
                "unknown syllable set '{s}' (expected Gost100, Problem90 or Other)"
            )),
        }
    }
}

impl fmt::Display for SyllableSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyllableSet::Gost100 => "Gost100",
            SyllableSet::Problem90 => "Problem90",
            SyllableSet::Other => "Other",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
}

impl FromStr for Sex {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "m" | "male" => Ok(Sex::Male),
            "f" | "female" => Ok(Sex::Female),
            _ => Err(format!("unknown sex '{s}' (expected m or f)")),
        }
    }
}

impl Sex {
    fn code(self) -> &'static str {
        match self {
            Sex::Male => "m",
            Sex::Female => "f",
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sex::Male => "male",
            Sex::Female => "female",
        })
    }
}

/// `(patient, session, syllable)`, unique within a manifest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordKey {
    pub patient_id: String,
    pub session_index: u32,
    pub syllable_id: String,
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, \"{}\")",
            self.patient_id, self.session_index, self.syllable_id
        )
    }
}

/// One syllable recording.
///
/// Session 1 is the pre-operation reference (class 1), session 2 the
/// immediate post-operation recording (class 0); later sessions are
/// rehabilitation recordings and carry no class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyllableRecord {
    pub patient_id: String,
    pub session_index: u32,
    pub syllable_id: String,
    pub syllable_set: SyllableSet,
    /// As written in the manifest; relative paths resolve against the
    /// manifest's directory.
    pub audio_path: PathBuf,
    pub class_label: Option<u8>,
    pub expert_mark: Option<u8>,
}

impl SyllableRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            patient_id: self.patient_id.clone(),
            session_index: self.session_index,
            syllable_id: self.syllable_id.clone(),
        }
    }

    /// Class label implied by the session index.
    pub fn expected_label(session_index: u32) -> Option<u8> {
        match session_index {
            1 => Some(1),
            2 => Some(0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientInfo {
    pub id: String,
    pub sex: Sex,
}

/// What to do with patients missing a session-1 or session-2 recording of
/// one of their syllables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Completeness {
    #[default]
    Reject,
    DropPatient,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Cohort {
    Individual(String),
    Sex(Sex),
    All,
}

impl FromStr for Cohort {
    type Err = String;

    /// Accepts `all`, `individual:<patient>`, `sex:<m|f>`, `men`, `women`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "all" => return Ok(Cohort::All),
            "men" | "male" => return Ok(Cohort::Sex(Sex::Male)),
            "women" | "female" => return Ok(Cohort::Sex(Sex::Female)),
            _ => {}
        }
        match s.split_once(':') {
            Some((kind, id)) if kind.eq_ignore_ascii_case("individual") && !id.is_empty() => {
                Ok(Cohort::Individual(id.to_string()))
            }
            Some((kind, sex)) if kind.eq_ignore_ascii_case("sex") => Ok(Cohort::Sex(sex.parse()?)),
            _ => Err(format!(
                "invalid cohort '{s}' (expected all, individual:<id>, sex:m or sex:f)"
            )),
        }
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cohort::Individual(id) => write!(f, "individual:{id}"),
            Cohort::Sex(Sex::Male) => f.write_str("men"),
            Cohort::Sex(Sex::Female) => f.write_str("women"),
            Cohort::All => f.write_str("all"),
        }
    }
}

impl Cohort {
    /// Row label used in cohort grids.
    pub fn label(&self) -> String {
        match self {
            Cohort::Individual(id) => format!("Individual ({id})"),
            Cohort::Sex(Sex::Male) => "Men".into(),
            Cohort::Sex(Sex::Female) => "Women".into(),
            Cohort::All => "All".into(),
        }
    }
}

/// A validated corpus catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub sample_rate_hz: u32,
    pub patients: Vec<PatientInfo>,
    pub records: Vec<SyllableRecord>,
    root: PathBuf,
}

fn parse_err(line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        line,
        message: message.into(),
    }
}

fn invalid(record: Option<RecordKey>, message: impl Into<String>) -> DatasetError {
    DatasetError::Validation {
        record,
        message: message.into(),
    }
}

fn parse_binary(field: &str, name: &str, line: usize) -> Result<Option<u8>> {
    match field.trim() {
        "" => Ok(None),
        "0" => Ok(Some(0)),
        "1" => Ok(Some(1)),
        other => Err(parse_err(line, format!("{name} must be 0 or 1, got '{other}'"))),
    }
}

impl Manifest {
    /// Builds and validates a manifest from parts. `root` is the directory
    /// against which relative audio paths resolve.
    pub fn new(
        sample_rate_hz: u32,
        patients: Vec<PatientInfo>,
        records: Vec<SyllableRecord>,
        root: impl Into<PathBuf>,
    ) -> Result<Self> {
        let m = Self {
            sample_rate_hz,
            patients,
            records,
            root: root.into(),
        };
        m.validate()?;
        Ok(m)
    }

    /// Loads and validates; incomplete patients are an error.
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, Completeness::Reject).map(|(m, _)| m)
    }

    /// Loads and validates. With [`Completeness::DropPatient`], patients
    /// with missing session-1/2 recordings are removed instead of rejected;
    /// their ids are returned alongside the manifest.
    pub fn load_with(path: &Path, completeness: Completeness) -> Result<(Self, Vec<String>)> {
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let root = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let mut m = Self::parse(&text, root)?;
        let dropped = match completeness {
            Completeness::Reject => Vec::new(),
            Completeness::DropPatient => {
                let dropped = m.incomplete_patients();
                if !dropped.is_empty() {
                    log::warn!("dropping incomplete patients: {}", dropped.join(", "));
                    m.records.retain(|r| !dropped.contains(&r.patient_id));
                    m.patients.retain(|p| !dropped.contains(&p.id));
                }
                dropped
            }
        };
        m.validate()?;
        Ok((m, dropped))
    }

    /// Parses manifest text without validating it.
    pub fn parse(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let (first_no, first) = lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty())
            .ok_or_else(|| parse_err(1, "empty manifest"))?;
        let rate = first
            .trim()
            .strip_prefix("#sample_rate_hz=")
            .ok_or_else(|| parse_err(first_no, "first line must be #sample_rate_hz=<int>"))?;
        let sample_rate_hz: u32 = rate
            .trim()
            .parse()
            .ok()
            .filter(|&r: &u32| r > 0)
            .ok_or_else(|| parse_err(first_no, format!("invalid sample rate '{rate}'")))?;

        let mut patients = Vec::new();
        let mut records = Vec::new();
        for (no, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                match (parts.next(), parts.next(), parts.next(), parts.next()) {
                    (Some("patient"), Some(id), Some(attr), None) => {
                        let sex = attr
                            .strip_prefix("sex=")
                            .ok_or_else(|| parse_err(no, format!("expected sex=<m|f>, got '{attr}'")))?
                            .parse()
                            .map_err(|e: String| parse_err(no, e))?;
                        patients.push(PatientInfo {
                            id: id.to_string(),
                            sex,
                        });
                    }
                    _ => return Err(parse_err(no, format!("unrecognized directive '{line}'"))),
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if !(5..=7).contains(&fields.len()) {
                return Err(parse_err(
                    no,
                    format!("expected 5 to 7 comma-separated fields, got {}", fields.len()),
                ));
            }
            let nonempty = |i: usize, name: &str| -> Result<&str> {
                let f = fields[i].trim();
                if f.is_empty() {
                    Err(parse_err(no, format!("{name} is empty")))
                } else {
                    Ok(f)
                }
            };
            let patient_id = nonempty(0, "patient_id")?.to_string();
            let session_index: u32 = nonempty(1, "session_index")?
                .parse()
                .map_err(|_| parse_err(no, format!("invalid session_index '{}'", fields[1])))?;
            let syllable_id = nonempty(2, "syllable_id")?.to_string();
            let syllable_set = nonempty(3, "syllable_set")?
                .parse()
                .map_err(|e: String| parse_err(no, e))?;
            let audio_path = PathBuf::from(nonempty(4, "audio_path")?);
            let class_label = match fields.get(5) {
                Some(f) => parse_binary(f, "class_label", no)?,
                None => None,
            };
            let expert_mark = match fields.get(6) {
                Some(f) => parse_binary(f, "expert_mark", no)?,
                None => None,
            };
            records.push(SyllableRecord {
                patient_id,
                session_index,
                syllable_id,
                syllable_set,
                audio_path,
                class_label,
                expert_mark,
            });
        }
        Ok(Self {
            sample_rate_hz,
            patients,
            records,
            root: root.into(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn resolve_audio(&self, record: &SyllableRecord) -> PathBuf {
        if record.audio_path.is_absolute() {
            record.audio_path.clone()
        } else {
            self.root.join(&record.audio_path)
        }
    }

    /// Checks every manifest invariant and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        let mut seen_patients = HashSet::new();
        for p in &self.patients {
            if !seen_patients.insert(p.id.as_str()) {
                return Err(invalid(None, format!("patient '{}' declared twice", p.id)));
            }
        }
        for r in &self.records {
            if r.session_index == 0 {
                return Err(invalid(Some(r.key()), "session_index must be >= 1"));
            }
            let expected = SyllableRecord::expected_label(r.session_index);
            if r.class_label != expected {
                let msg = match expected {
                    Some(l) => format!("session {} requires class_label {l}", r.session_index),
                    None => format!(
                        "session {} must not carry a class_label",
                        r.session_index
                    ),
                };
                return Err(invalid(Some(r.key()), msg));
            }
        }
        let mut keys = HashSet::new();
        for r in &self.records {
            if !keys.insert(r.key()) {
                return Err(invalid(Some(r.key()), "duplicate record"));
            }
        }
        if let Some(missing) = self.first_missing_pair(&keys) {
            return Err(invalid(
                Some(missing),
                "missing recording: every syllable needs both session 1 and session 2",
            ));
        }
        for r in &self.records {
            let path = self.resolve_audio(r);
            if !path.is_file() {
                return Err(invalid(
                    Some(r.key()),
                    format!("audio file {} does not exist", path.display()),
                ));
            }
        }
        Ok(())
    }

    /// Syllables per patient across all sessions.
    fn syllables_by_patient(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut map: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for r in &self.records {
            map.entry(&r.patient_id).or_default().insert(&r.syllable_id);
        }
        map
    }

    fn first_missing_pair(&self, keys: &HashSet<RecordKey>) -> Option<RecordKey> {
        // Report in record order so the first offending patient is named.
        let syllables = self.syllables_by_patient();
        let mut checked = HashSet::new();
        for r in &self.records {
            if !checked.insert(r.patient_id.as_str()) {
                continue;
            }
            for syl in &syllables[r.patient_id.as_str()] {
                for session_index in [1, 2] {
                    let key = RecordKey {
                        patient_id: r.patient_id.clone(),
                        session_index,
                        syllable_id: syl.to_string(),
                    };
                    if !keys.contains(&key) {
                        return Some(key);
                    }
                }
            }
        }
        None
    }

    /// Patients lacking a session-1 or session-2 recording for any of their
    /// syllables.
    pub fn incomplete_patients(&self) -> Vec<String> {
        let keys: HashSet<RecordKey> = self.records.iter().map(SyllableRecord::key).collect();
        self.syllables_by_patient()
            .into_iter()
            .filter(|(p, syls)| {
                syls.iter().any(|s| {
                    [1, 2].iter().any(|&session_index| {
                        !keys.contains(&RecordKey {
                            patient_id: p.to_string(),
                            session_index,
                            syllable_id: s.to_string(),
                        })
                    })
                })
            })
            .map(|(p, _)| p.to_string())
            .collect()
    }

    /// Patient ids in first-appearance order.
    pub fn patient_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .map(|r| r.patient_id.as_str())
            .filter(|p| seen.insert(*p))
            .collect()
    }

    pub fn sex_of(&self, patient_id: &str) -> Option<Sex> {
        self.patients
            .iter()
            .find(|p| p.id == patient_id)
            .map(|p| p.sex)
    }

    /// Sub-manifest for a cohort. `All` returns the manifest unchanged.
    pub fn filter_cohort(&self, cohort: &Cohort) -> Result<Self> {
        let keep: HashSet<&str> = match cohort {
            Cohort::All => self.patient_ids().into_iter().collect(),
            Cohort::Individual(id) => self
                .patient_ids()
                .into_iter()
                .filter(|p| p == id)
                .collect(),
            Cohort::Sex(sex) => self
                .patient_ids()
                .into_iter()
                .filter(|p| self.sex_of(p) == Some(*sex))
                .collect(),
        };
        if keep.is_empty() {
            return Err(DatasetError::EmptyCohort(cohort.to_string()));
        }
        Ok(Self {
            sample_rate_hz: self.sample_rate_hz,
            patients: self
                .patients
                .iter()
                .filter(|p| keep.contains(p.id.as_str()))
                .cloned()
                .collect(),
            records: self
                .records
                .iter()
                .filter(|r| keep.contains(r.patient_id.as_str()))
                .cloned()
                .collect(),
            root: self.root.clone(),
        })
    }

    /// Renders the manifest file format.
    pub fn to_text(&self) -> String {
        let mut out = format!("#sample_rate_hz={}\n", self.sample_rate_hz);
        for p in &self.patients {
            out.push_str(&format!("#patient {} sex={}\n", p.id, p.sex.code()));
        }
        let bin = |v: Option<u8>| v.map(|b| b.to_string()).unwrap_or_default();
        for r in &self.records {
            let mut line = format!(
                "{},{},{},{},{}",
                r.patient_id,
                r.session_index,
                r.syllable_id,
                r.syllable_set,
                r.audio_path.display()
            );
            match (r.class_label, r.expert_mark) {
                (None, None) => {}
                (label, None) => line.push_str(&format!(",{}", bin(label))),
                (label, mark) => line.push_str(&format!(",{},{}", bin(label), bin(mark))),
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Corpus {
        dir: tempfile::TempDir,
    }

    impl Corpus {
        fn new(files: &[&str]) -> Self {
            let dir = tempfile::tempdir().unwrap();
            for f in files {
                fs::write(dir.path().join(f), b"RIFF").unwrap();
            }
            Self { dir }
        }

        fn write(&self, text: &str) -> PathBuf {
            let p = self.dir.path().join("manifest.csv");
            fs::write(&p, text).unwrap();
            p
        }
    }

    const BASIC: &str = "#sample_rate_hz=16000
#patient P sex=f
P,1,sa,Problem90,a.wav,1
P,1,so,Problem90,a.wav,1
P,1,su,Problem90,a.wav,1
P,2,sa,Problem90,a.wav,0
P,2,so,Problem90,a.wav,0
P,2,su,Problem90,a.wav,0
";

    #[test]
    fn loads_minimal_manifest() {
        let c = Corpus::new(&["a.wav"]);
        let m = Manifest::load(&c.write(BASIC)).unwrap();
        assert_eq!(m.records.len(), 6);
        assert_eq!(m.sample_rate_hz, 16000);
        assert_eq!(m.sex_of("P"), Some(Sex::Female));
    }

    #[test]
    fn missing_pair_names_record() {
        let c = Corpus::new(&["a.wav"]);
        let text = BASIC.replace("P,2,sa,Problem90,a.wav,0\n", "");
        match Manifest::load(&c.write(&text)) {
            Err(DatasetError::Validation {
                record: Some(key), ..
            }) => assert_eq!(
                key,
                RecordKey {
                    patient_id: "P".into(),
                    session_index: 2,
                    syllable_id: "sa".into()
                }
            ),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_is_rejected() {
        let c = Corpus::new(&["a.wav"]);
        let text = format!("{BASIC}P,1,sa,Problem90,a.wav,1\n");
        match Manifest::load(&c.write(&text)) {
            Err(DatasetError::Validation {
                record: Some(key),
                message,
            }) => {
                assert_eq!(key.to_string(), "(P, 1, \"sa\")");
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_audio_is_rejected() {
        let c = Corpus::new(&[]);
        assert!(matches!(
            Manifest::load(&c.write(BASIC)),
            Err(DatasetError::Validation { .. })
        ));
    }

    #[test]
    fn label_session_mismatch() {
        let c = Corpus::new(&["a.wav"]);
        let text = BASIC.replace("P,2,so,Problem90,a.wav,0", "P,2,so,Problem90,a.wav,1");
        assert!(matches!(
            Manifest::load(&c.write(&text)),
            Err(DatasetError::Validation { .. })
        ));
        let text = format!("{BASIC}P,3,sa,Problem90,a.wav,1\n");
        assert!(matches!(
            Manifest::load(&c.write(&text)),
            Err(DatasetError::Validation { .. })
        ));
    }

    #[test]
    fn parse_errors_carry_line() {
        let c = Corpus::new(&["a.wav"]);
        for (text, line) in [
            ("P,1,sa,Problem90,a.wav,1\n", 1),
            ("#sample_rate_hz=16000\nP,x,sa,Problem90,a.wav\n", 2),
            ("#sample_rate_hz=16000\nP,1,sa,Bogus,a.wav\n", 2),
            ("#sample_rate_hz=16000\n#patient P sex=x\n", 2),
            ("#sample_rate_hz=16000\nP,1,sa,Problem90,a.wav,2\n", 2),
            ("#sample_rate_hz=16000\nP,1,sa\n", 2),
        ] {
            match Manifest::load(&c.write(text)) {
                Err(DatasetError::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("unexpected {other:?} for {text}"),
            }
        }
    }

    #[test]
    fn expert_marks_for_later_sessions() {
        let c = Corpus::new(&["a.wav"]);
        let text = format!("{BASIC}P,3,sa,Problem90,a.wav,,1\nP,3,so,Problem90,a.wav\n");
        let m = Manifest::load(&c.write(&text)).unwrap();
        assert_eq!(m.records[6].expert_mark, Some(1));
        assert_eq!(m.records[6].class_label, None);
        assert_eq!(m.records[7].expert_mark, None);
    }

    #[test]
    fn drop_incomplete_patient() {
        let c = Corpus::new(&["a.wav"]);
        let text = format!("{BASIC}Q,1,sa,Problem90,a.wav,1\n");
        assert!(Manifest::load(&c.write(&text)).is_err());
        let (m, dropped) =
            Manifest::load_with(&c.write(&text), Completeness::DropPatient).unwrap();
        assert_eq!(dropped, vec!["Q".to_string()]);
        assert_eq!(m.records.len(), 6);
    }

    #[test]
    fn cohorts() {
        let c = Corpus::new(&["a.wav"]);
        let text = format!(
            "{BASIC}Q,1,sa,Problem90,a.wav,1\nQ,2,sa,Problem90,a.wav,0\n#patient Q sex=f\n"
        );
        let m = Manifest::load(&c.write(&text)).unwrap();
        assert_eq!(m.filter_cohort(&Cohort::All).unwrap(), m);
        let p = m.filter_cohort(&Cohort::Individual("P".into())).unwrap();
        assert_eq!(p.records.len(), 6);
        assert!(p.records.iter().all(|r| r.patient_id == "P"));
        assert_eq!(
            p.filter_cohort(&Cohort::Individual("P".into())).unwrap(),
            p
        );
        assert_eq!(m.filter_cohort(&Cohort::Sex(Sex::Female)).unwrap().records.len(), 8);
        assert!(matches!(
            m.filter_cohort(&Cohort::Sex(Sex::Male)),
            Err(DatasetError::EmptyCohort(_))
        ));
    }

    #[test]
    fn save_load_identity() {
        let c = Corpus::new(&["a.wav"]);
        let text = format!("{BASIC}P,3,sa,Problem90,a.wav,,1\nP,3,so,Problem90,a.wav\n");
        let m = Manifest::load(&c.write(&text)).unwrap();
        let out = c.dir.path().join("copy.csv");
        m.save(&out).unwrap();
        assert_eq!(Manifest::load(&out).unwrap(), m);
        assert_eq!(m.to_text(), text);
    }

    #[test]
    fn cohort_parsing() {
        assert_eq!("all".parse::<Cohort>().unwrap(), Cohort::All);
        assert_eq!(
            "individual:P01".parse::<Cohort>().unwrap(),
            Cohort::Individual("P01".into())
        );
        assert_eq!("sex:f".parse::<Cohort>().unwrap(), Cohort::Sex(Sex::Female));
        assert_eq!("men".parse::<Cohort>().unwrap(), Cohort::Sex(Sex::Male));
        assert!("bogus".parse::<Cohort>().is_err());
        for c in [Cohort::All, Cohort::Individual("X".into()), Cohort::Sex(Sex::Male)] {
            assert_eq!(c.to_string().parse::<Cohort>().unwrap(), c);
        }
    }
}
