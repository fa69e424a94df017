//! Accuracy, exact random baselines, paired permutation significance tests,
//! class membership reports, and pairwise hierarchy agreement.

use std::collections::BTreeMap;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::model::{class_posterior, predict_order, ModelParams};
use crate::phrase::Phrase;

/// Default number of resampling rounds for significance tests.
pub const DEFAULT_PERMUTATIONS: usize = 10_000;

/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Per-phrase correctness and summary statistics for one system on one
/// test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// One entry per test phrase, in test-set order.
    pub correct: Vec<bool>,
    pub accuracy: f64,
    /// Exact expectation of a uniform random orderer on this test set.
    pub random_baseline: f64,
    pub n: usize,
    /// Phrases whose prediction involved a tie-break.
    pub ties: usize,
}

/// Outcome of a paired permutation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    /// Two-sided p-value with add-one smoothing, in (0, 1].
    pub p_value: f64,
    /// mean(a) - mean(b).
    pub observed_diff: f64,
    pub permutations: usize,
    pub alpha: f64,
}

impl SignificanceResult {
    pub fn significant(&self) -> bool {
        self.p_value < self.alpha
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).product::<usize>().max(1) as f64
}

/// Exact expected accuracy of ordering each side uniformly at random:
/// the mean over phrases of the product of `1/len!` per side.
pub fn random_baseline(test: &[Phrase]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Empty("random_baseline needs a test set".into()));
    }
    let total: f64 = test
        .iter()
        .map(|p| 1.0 / factorial(p.left.len()) / factorial(p.right.len()))
        .sum();
    Ok(total / test.len() as f64)
}

fn sequences_match(predicted: &[&str], observed: &[String]) -> bool {
    predicted.len() == observed.len()
        && predicted
            .iter()
            .zip(observed)
            .all(|(a, b)| *a == b.as_str())
}

/// Score a model on a test set. A phrase counts as correct only when the
/// predicted permutation of every side reproduces the observed surface
/// order. Test phrases must be in vocabulary; an OOV adjective here is a
/// pipeline bug and surfaces as an error.
pub fn evaluate(
    test: &[Phrase],
    tables: &BTreeMap<String, EmbeddingTable>,
    params: &ModelParams,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Empty("evaluate needs a non-empty test set".into()));
    }
    let mut correct = Vec::with_capacity(test.len());
    let mut ties = 0usize;
    for phrase in test {
        let table = tables
            .get(&phrase.language)
            .ok_or_else(|| Error::MissingTable(phrase.language.clone()))?;
        let prediction = predict_order(&phrase.left, &phrase.right, table, params)?;
        if prediction.tied {
            ties += 1;
        }
        let ok = sequences_match(&prediction.ordered_left(&phrase.left), &phrase.left)
            && sequences_match(&prediction.ordered_right(&phrase.right), &phrase.right);
        correct.push(ok);
    }
    let accuracy = correct.iter().filter(|&&c| c).count() as f64 / correct.len() as f64;
    Ok(EvalReport {
        accuracy,
        random_baseline: random_baseline(test)?,
        n: correct.len(),
        ties,
        correct,
    })
}

/// Correctness vector of a seeded uniform-random orderer on the same test
/// set, for paired comparisons against a model.
pub fn random_orderer_correct(test: &[Phrase], seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    test.iter()
        .map(|phrase| {
            let mut ok = true;
            for words in [&phrase.left, &phrase.right] {
                if words.len() < 2 {
                    continue;
                }
                let mut order: Vec<usize> = (0..words.len()).collect();
                order.shuffle(&mut rng);
                let shuffled: Vec<&str> = order.iter().map(|&i| words[i].as_str()).collect();
                ok &= sequences_match(&shuffled, words);
            }
            ok
        })
        .collect()
}

/// Two-sided paired permutation test on per-item correctness of two systems.
///
/// Each round flips every pair with probability one half; the p-value is
/// `(#{|perm| >= |observed|} + 1) / (rounds + 1)`. The statistic is
/// accumulated in integers, so ties against the observed value are exact.
pub fn paired_permutation_test(
    a: &[bool],
    b: &[bool],
    permutations: usize,
    seed: u64,
    alpha: f64,
) -> Result<SignificanceResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("paired test needs at least one pair".into()));
    }
    let diffs: Vec<i64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| i64::from(x) - i64::from(y))
        .collect();
    let observed: i64 = diffs.iter().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut at_least_as_extreme = 0usize;
    for _ in 0..permutations {
        let mut stat = 0i64;
        for &d in &diffs {
            stat += if rng.gen::<bool>() { -d } else { d };
        }
        if stat.abs() >= observed.abs() {
            at_least_as_extreme += 1;
        }
    }
    Ok(SignificanceResult {
        p_value: (at_least_as_extreme + 1) as f64 / (permutations + 1) as f64,
        observed_diff: observed as f64 / a.len() as f64,
        permutations,
        alpha,
    })
}

/// One adjective's class assignment under a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMembership {
    pub adjective: String,
    /// 1-based class label; class 1 is predicted to surface first on the
    /// left side under a fixed total order.
    pub class: usize,
    pub posterior: Vec<f64>,
}

/// Class memberships for a list of adjectives, sorted by class then
/// adjective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub rows: Vec<ClassMembership>,
    /// Adjectives without an embedding, listed rather than fatal.
    pub skipped: Vec<String>,
}

pub fn class_report(
    adjectives: &[String],
    table: &EmbeddingTable,
    params: &ModelParams,
) -> Result<ClassReport> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for adjective in adjectives {
        match table.lookup(adjective) {
            None => skipped.push(adjective.clone()),
            Some(embedding) => {
                let dist = class_posterior(embedding, params)?;
                rows.push(ClassMembership {
                    adjective: adjective.clone(),
                    class: dist.argmax() + 1,
                    posterior: dist.probabilities,
                });
            }
        }
    }
    rows.sort_by(|a, b| a.class.cmp(&b.class).then(a.adjective.cmp(&b.adjective)));
    Ok(ClassReport { rows, skipped })
}

/// Accuracy on a pairs file, where each row asserts that `first` should
/// precede `second` prenominally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsReport {
    pub accuracy: f64,
    pub evaluated: usize,
    /// Rows skipped for an out-of-vocabulary word.
    pub skipped: usize,
}

pub fn evaluate_pairs(
    pairs: &[(String, String)],
    table: &EmbeddingTable,
    params: &ModelParams,
) -> Result<PairsReport> {
    let mut evaluated = 0usize;
    let mut correct = 0usize;
    let mut skipped = 0usize;
    for (first, second) in pairs {
        if !table.contains(first) || !table.contains(second) {
            skipped += 1;
            continue;
        }
        let left = [first.clone(), second.clone()];
        let prediction = predict_order(&left, &[], table, params)?;
        evaluated += 1;
        if sequences_match(&prediction.ordered_left(&left), &left) {
            correct += 1;
        }
    }
    if evaluated == 0 {
        return Err(Error::Empty("no in-vocabulary pairs to evaluate".into()));
    }
    Ok(PairsReport {
        accuracy: correct as f64 / evaluated as f64,
        evaluated,
        skipped,
    })
}

/// Parse a pairs file: one `first<TAB>second` per line, `#` comments.
pub fn parse_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 || fields.iter().any(|f| f.trim().is_empty()) {
            return Err(Error::Parse {
                kind: "pairs",
                line: i + 1,
                msg: "expected two tab-separated words".into(),
            });
        }
        pairs.push((fields[0].trim().to_string(), fields[1].trim().to_string()));
    }
    Ok(pairs)
}
