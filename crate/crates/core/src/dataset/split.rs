use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, Result};

pub const DEFAULT_TRAIN_RATIO: f64 = 0.8;

/// Granularity of the train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitBy {
    /// Individual fragments are assigned independently.
    #[default]
    Fragment,
    /// All fragments of one recording land on the same side.
    Syllable,
}

impl FromStr for SplitBy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fragment" => Ok(SplitBy::Fragment),
            "syllable" | "recording" => Ok(SplitBy::Syllable),
            _ => Err(format!("invalid split granularity '{s}' (expected fragment or syllable)")),
        }
    }
}

impl fmt::Display for SplitBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitBy::Fragment => "fragment",
            SplitBy::Syllable => "syllable",
        })
    }
}

/// Disjoint, covering train/test index sets, both sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl SplitAssignment {
    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if ratio > 0.0 && ratio < 1.0 {
        Ok(())
    } else {
        Err(DatasetError::DegenerateInput(format!(
            "train ratio must be in (0, 1), got {ratio}"
        )))
    }
}

/// Splits `items` (already grouped by class) into train/test per class.
/// Each class contributes `round(ratio * n_class)` items to train.
fn stratify(by_class: [Vec<usize>; 2], ratio: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut members in by_class {
        members.shuffle(rng);
        let n_train = (ratio * members.len() as f64).round() as usize;
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn partition_by_label(labels: &[u8]) -> Result<[Vec<usize>; 2]> {
    let mut by_class = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        match l {
            0 | 1 => by_class[l as usize].push(i),
            _ => {
                return Err(DatasetError::DegenerateInput(format!(
                    "label {l} at index {i} is not binary"
                )))
            }
        }
    }
    if by_class.iter().any(Vec::is_empty) {
        return Err(DatasetError::DegenerateInput(
            "both classes must be present".into(),
        ));
    }
    Ok(by_class)
}

/// Stratified, seeded fragment-level split.
pub fn split_fragments(
    n_fragments: usize,
    labels: &[u8],
    ratio: f64,
    seed: u64,
) -> Result<SplitAssignment> {
    check_ratio(ratio)?;
    if labels.len() != n_fragments {
        return Err(DatasetError::DegenerateInput(format!(
            "{} labels for {n_fragments} fragments",
            labels.len()
        )));
    }
    if n_fragments < 5 {
        return Err(DatasetError::DegenerateInput(format!(
            "need at least 5 fragments, got {n_fragments}"
        )));
    }
    let by_class = partition_by_label(labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train, test) = stratify(by_class, ratio, &mut rng);
    Ok(SplitAssignment { train, test, seed })
}

/// Stratified split where items sharing a group key stay together. Every
/// group must carry a single label.
pub fn split_by_group<K: Ord + Clone + fmt::Debug>(
    groups: &[K],
    labels: &[u8],
    ratio: f64,
    seed: u64,
) -> Result<SplitAssignment> {
    check_ratio(ratio)?;
    if groups.len() != labels.len() {
        return Err(DatasetError::DegenerateInput(format!(
            "{} labels for {} items",
            labels.len(),
            groups.len()
        )));
    }
    if groups.len() < 5 {
        return Err(DatasetError::DegenerateInput(format!(
            "need at least 5 fragments, got {}",
            groups.len()
        )));
    }
    let mut members: BTreeMap<&K, (u8, Vec<usize>)> = BTreeMap::new();
    for (i, (g, &l)) in groups.iter().zip(labels).enumerate() {
        let entry = members.entry(g).or_insert((l, Vec::new()));
        if entry.0 != l {
            return Err(DatasetError::DegenerateInput(format!(
                "group {g:?} mixes labels"
            )));
        }
        entry.1.push(i);
    }
    let group_list: Vec<&(u8, Vec<usize>)> = members.values().collect();
    let group_labels: Vec<u8> = group_list.iter().map(|(l, _)| *l).collect();
    let by_class = partition_by_label(&group_labels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train_groups, test_groups) = stratify(by_class, ratio, &mut rng);
    let expand = |gs: Vec<usize>| {
        let mut v: Vec<usize> = gs
            .into_iter()
            .flat_map(|g| group_list[g].1.iter().copied())
            .collect();
        v.sort_unstable();
        v
    };
    Ok(SplitAssignment {
        train: expand(train_groups),
        test: expand(test_groups),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_balanced() {
        let labels = [1, 0, 1, 0, 1, 0, 1, 0, 1, 0];
        let s = split_fragments(10, &labels, 0.8, 42).unwrap();
        assert_eq!(s.train.len(), 8);
        assert_eq!(s.test.len(), 2);
        for class in [0, 1] {
            assert_eq!(s.train.iter().filter(|&&i| labels[i] == class).count(), 4);
            assert_eq!(s.test.iter().filter(|&&i| labels[i] == class).count(), 1);
        }
        assert_eq!(s, split_fragments(10, &labels, 0.8, 42).unwrap());
    }

    #[test]
    fn corpus_scale_count() {
        let n = 102_322;
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let s = split_fragments(n, &labels, 0.8, 0).unwrap();
        assert!(s.train.len().abs_diff(81_858) <= 1, "{}", s.train.len());
        assert_eq!(s.len(), n);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            split_fragments(6, &[1; 6], 0.8, 0),
            Err(DatasetError::DegenerateInput(_))
        ));
        assert!(split_fragments(4, &[1, 0, 1, 0], 0.8, 0).is_err());
        assert!(split_fragments(5, &[1, 0, 1, 0], 0.8, 0).is_err());
        assert!(split_fragments(6, &[1, 0, 1, 0, 1, 0], 1.0, 0).is_err());
    }

    #[test]
    fn groups_stay_together() {
        let groups: Vec<u32> = (0..40).map(|i| i / 4).collect();
        let labels: Vec<u8> = groups.iter().map(|g| (g % 2) as u8).collect();
        let s = split_by_group(&groups, &labels, 0.8, 3).unwrap();
        assert_eq!(s.len(), 40);
        for i in &s.train {
            assert!(!s.test.iter().any(|j| groups[*j] == groups[*i]));
        }
        assert_eq!(s.train.len(), 32);
        let mixed = [0u32, 0, 1, 1, 2, 2];
        assert!(split_by_group(&mixed, &[1, 0, 1, 1, 0, 0], 0.8, 0).is_err());
    }

    fn labels_strategy() -> impl Strategy<Value = Vec<u8>> {
        prop::collection::vec(0u8..2, 5..300)
            .prop_filter("both classes", |v| v.contains(&0) && v.contains(&1))
    }

    proptest! {
        #[test]
        fn disjoint_covering_stratified(labels in labels_strategy(), seed in any::<u64>()) {
            let n = labels.len();
            let s = split_fragments(n, &labels, 0.8, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            for class in [0u8, 1] {
                let n_c = labels.iter().filter(|&&l| l == class).count() as f64;
                let tr = s.train.iter().filter(|&&i| labels[i] == class).count() as f64;
                prop_assert!((tr - 0.8 * n_c).abs() <= 1.0);
            }
        }

        #[test]
        fn permutation_equivariant_counts(labels in labels_strategy(), seed in any::<u64>(), rot in 0usize..300) {
            // Permuting item order and mapping the split back yields a split
            // with identical per-class train/test sizes.
            let n = labels.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let permuted: Vec<u8> = perm.iter().map(|&i| labels[i]).collect();
            let a = split_fragments(n, &labels, 0.8, seed).unwrap();
            let b = split_fragments(n, &permuted, 0.8, seed).unwrap();
            let mut b_train: Vec<usize> = b.train.iter().map(|&j| perm[j]).collect();
            b_train.sort_unstable();
            let mut b_test: Vec<usize> = b.test.iter().map(|&j| perm[j]).collect();
            b_test.sort_unstable();
            for class in [0u8, 1] {
                let count = |v: &[usize]| v.iter().filter(|&&i| labels[i] == class).count();
                prop_assert_eq!(count(&a.train), count(&b_train));
                prop_assert_eq!(count(&a.test), count(&b_test));
            }
            prop_assert_eq!(b_train.len() + b_test.len(), n);
        }
    }
}
