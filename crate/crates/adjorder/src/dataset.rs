//! Seeded, reproducible corpus splitting and summaries.
//!
//! Two split styles: by token (a uniform random partition of phrases) and
//! by adjective type (hold out whole adjective types, so every test phrase
//! contains at least one adjective never seen in training). Sampling runs on
//! a seeded ChaCha8 stream and a Fisher-Yates shuffle, so a split is a pure
//! function of the corpus, the spec, and the seed.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phrase::Phrase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Token,
    Type,
}

/// Requested training-set size: an explicit phrase count (token mode) or a
/// fraction (of phrases in token mode, of adjective types in type mode).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrainSize {
    Count(usize),
    Fraction(f64),
}

/// Parameters of one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub train: TrainSize,
    /// Development phrases carved out by token sampling before the
    /// train/test split.
    pub dev_count: Option<usize>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn token(train: TrainSize, seed: u64) -> Self {
        SplitSpec {
            mode: SplitMode::Token,
            train,
            dev_count: None,
            seed,
        }
    }

    pub fn by_type(fraction: f64, seed: u64) -> Self {
        SplitSpec {
            mode: SplitMode::Type,
            train: TrainSize::Fraction(fraction),
            dev_count: None,
            seed,
        }
    }
}

/// A materialized split. Partitions are exhaustive:
/// `|train| + |test| + |dev| = |input|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<Phrase>,
    pub test: Vec<Phrase>,
    pub dev: Option<Vec<Phrase>>,
    pub spec: SplitSpec,
}

fn check_fraction(f: f64) -> Result<f64> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Split(format!(
            "fraction {f} must lie strictly between 0 and 1"
        )));
    }
    Ok(f)
}

/// Shuffle `0..n` under the spec seed and peel off the dev indices. The
/// generator is returned so later sampling continues the same stream.
fn shuffled_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>, ChaCha8Rng)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let dev_count = spec.dev_count.unwrap_or(0);
    if dev_count >= n {
        return Err(Error::Split(format!(
            "dev_count {dev_count} leaves no phrases to split (corpus has {n})"
        )));
    }
    let rest = indices.split_off(dev_count);
    Ok((indices, rest, rng))
}

/// Materialize an index set in original corpus order.
fn collect_sorted(phrases: &[Phrase], mut indices: Vec<usize>) -> Vec<Phrase> {
    indices.sort_unstable();
    indices.into_iter().map(|i| phrases[i].clone()).collect()
}

/// Uniform random partition of phrases under the spec seed.
pub fn split_by_token(phrases: &[Phrase], spec: &SplitSpec) -> Result<DatasetSplit> {
    if spec.mode != SplitMode::Token {
        return Err(Error::Split("split_by_token requires token mode".into()));
    }
    let (dev_idx, rest, _) = shuffled_indices(phrases.len(), spec)?;
    let train_count = match spec.train {
        TrainSize::Count(c) => c,
        TrainSize::Fraction(f) => (check_fraction(f)? * rest.len() as f64).floor() as usize,
    };
    if train_count == 0 {
        return Err(Error::Split("train set would be empty".into()));
    }
    if train_count >= rest.len() {
        return Err(Error::Split(format!(
            "train count {train_count} leaves no test phrases ({} available after dev)",
            rest.len()
        )));
    }
    let train_idx = rest[..train_count].to_vec();
    let test_idx = rest[train_count..].to_vec();
    Ok(DatasetSplit {
        train: collect_sorted(phrases, train_idx),
        test: collect_sorted(phrases, test_idx),
        dev: spec.dev_count.map(|_| collect_sorted(phrases, dev_idx)),
        spec: spec.clone(),
    })
}

fn type_key(phrase: &Phrase, adjective: &str) -> (String, String) {
    (phrase.language.clone(), adjective.to_string())
}

/// Hold out adjective types: sample a fraction of the types, send phrases
/// whose adjectives all fall inside the sample to train, the rest to test.
/// Every test phrase then contains at least one adjective type absent from
/// all training phrases.
pub fn split_by_type(phrases: &[Phrase], spec: &SplitSpec) -> Result<DatasetSplit> {
    if spec.mode != SplitMode::Type {
        return Err(Error::Split("split_by_type requires type mode".into()));
    }
    let fraction = match spec.train {
        TrainSize::Fraction(f) => check_fraction(f)?,
        TrainSize::Count(_) => {
            return Err(Error::Split(
                "type mode samples a fraction of adjective types, not a count".into(),
            ))
        }
    };

    let (dev_idx, rest_idx, mut rng) = shuffled_indices(phrases.len(), spec)?;

    let mut types: BTreeSet<(String, String)> = BTreeSet::new();
    for &i in &rest_idx {
        let phrase = &phrases[i];
        for adj in phrase.adjectives() {
            types.insert(type_key(phrase, adj));
        }
    }
    if types.len() < 2 {
        return Err(Error::Split(format!(
            "type split needs at least 2 adjective types, found {}",
            types.len()
        )));
    }

    let mut type_list: Vec<(String, String)> = types.into_iter().collect();
    type_list.shuffle(&mut rng);
    let sample_size = (fraction * type_list.len() as f64).floor() as usize;
    if sample_size == 0 {
        return Err(Error::Split(
            "no adjective types sampled for training".into(),
        ));
    }
    let sampled: BTreeSet<(String, String)> = type_list.into_iter().take(sample_size).collect();

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for &i in &rest_idx {
        let phrase = &phrases[i];
        let all_sampled = phrase
            .adjectives()
            .all(|adj| sampled.contains(&type_key(phrase, adj)));
        if all_sampled {
            train_idx.push(i);
        } else {
            test_idx.push(i);
        }
    }
    if train_idx.is_empty() {
        return Err(Error::Split(
            "every phrase contains a held-out adjective type; train set empty".into(),
        ));
    }
    if test_idx.is_empty() {
        return Err(Error::Split(
            "no phrase contains a held-out adjective type; test set empty".into(),
        ));
    }

    let split = DatasetSplit {
        train: collect_sorted(phrases, train_idx),
        test: collect_sorted(phrases, test_idx),
        dev: spec.dev_count.map(|_| collect_sorted(phrases, dev_idx)),
        spec: spec.clone(),
    };

    // Hard invariant: each test phrase carries a type unseen in training.
    let train_types: BTreeSet<(String, String)> = split
        .train
        .iter()
        .flat_map(|p| p.adjectives().map(|a| type_key(p, a)).collect::<Vec<_>>())
        .collect();
    for phrase in &split.test {
        assert!(
            phrase
                .adjectives()
                .any(|adj| !train_types.contains(&type_key(phrase, adj))),
            "type-split invariant violated for {:?}",
            phrase.source_id
        );
    }

    Ok(split)
}

/// Corpus summary: counts, type inventory, and length histograms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub phrases: usize,
    /// Distinct (language, adjective) pairs.
    pub adjective_types: usize,
    /// Phrases by total adjective count.
    pub k_histogram: std::collections::BTreeMap<usize, usize>,
    /// Phrases by left-side length.
    pub left_histogram: std::collections::BTreeMap<usize, usize>,
    /// Phrases by right-side length.
    pub right_histogram: std::collections::BTreeMap<usize, usize>,
}

pub fn dataset_stats(phrases: &[Phrase]) -> DatasetStats {
    let mut types = BTreeSet::new();
    let mut k_histogram = std::collections::BTreeMap::new();
    let mut left_histogram = std::collections::BTreeMap::new();
    let mut right_histogram = std::collections::BTreeMap::new();
    for phrase in phrases {
        for adj in phrase.adjectives() {
            types.insert(type_key(phrase, adj));
        }
        *k_histogram.entry(phrase.total_adjectives()).or_insert(0) += 1;
        *left_histogram.entry(phrase.left.len()).or_insert(0) += 1;
        *right_histogram.entry(phrase.right.len()).or_insert(0) += 1;
    }
    DatasetStats {
        phrases: phrases.len(),
        adjective_types: types.len(),
        k_histogram,
        left_histogram,
        right_histogram,
    }
}
