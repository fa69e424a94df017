//! The latent-class ordering model.
//!
//! Every adjective gets a soft assignment over a small ordered set of latent
//! classes, computed as a softmax of a linear map `V` applied to its word
//! embedding. A candidate order of one side of the noun is scored by summing
//! interaction-matrix entries over consecutive class pairs; normalizing the
//! exponentiated scores over all permutations of that side and marginalizing
//! over class assignments yields a distribution over orders. Prenominal and
//! postnominal sides use separate interaction matrices and factorize
//! independently, so a phrase's probability is the product of its sides'.
//!
//! All probability arithmetic is carried out in log space with log-sum-exp;
//! probabilities are exponentiated only at reporting boundaries.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::OnceLock;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::phrase::Phrase;

/// Longest side the permutation machinery accepts; `6! = 720` candidate
/// orders is the practical ceiling, and extraction caps phrases there too.
pub const MAX_SIDE: usize = 6;

/// Log-probability gap under which two candidate orders count as tied.
const TIE_EPS: f64 = 1e-9;

/// Whether the interaction matrices are learned or frozen to a total order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WMode {
    Learned,
    FixedTotalOrder,
}

/// Which side of the noun a run of adjectives sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Model shape and marginalization limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Number of latent adjective classes.
    pub num_classes: usize,
    /// Embedding dimensionality.
    pub dim: usize,
    pub w_mode: WMode,
    /// Sides up to this length are marginalized exactly over all class
    /// assignments; longer sides switch to per-adjective class pruning.
    pub exact_side_limit: usize,
    /// Number of classes kept per adjective in the pruned regime.
    pub prune_top_m: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            num_classes: 15,
            dim: 300,
            w_mode: WMode::Learned,
            exact_side_limit: 4,
            prune_top_m: 5,
        }
    }
}

impl ModelConfig {
    pub fn new(num_classes: usize, dim: usize, w_mode: WMode) -> Self {
        let defaults = ModelConfig::default();
        ModelConfig {
            num_classes,
            dim,
            w_mode,
            exact_side_limit: defaults.exact_side_limit,
            prune_top_m: defaults.prune_top_m.min(num_classes),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Config("num_classes must be >= 2".into()));
        }
        if self.dim == 0 {
            return Err(Error::Config("dim must be >= 1".into()));
        }
        if !(2..=MAX_SIDE).contains(&self.exact_side_limit) {
            return Err(Error::Config(format!(
                "exact_side_limit must be in [2, {MAX_SIDE}]"
            )));
        }
        if self.prune_top_m == 0 || self.prune_top_m > self.num_classes {
            return Err(Error::Config(
                "prune_top_m must be in [1, num_classes]".into(),
            ));
        }
        Ok(())
    }
}

/// The learned (or partially fixed) parameters.
///
/// `v` maps a `dim`-vector to `num_classes` logits (one row per class).
/// Under [`WMode::FixedTotalOrder`] the interaction matrices are the
/// off-upper-triangular / off-lower-triangular patterns and are never
/// updated by training.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub v: Mat,
    pub w_left: Mat,
    pub w_right: Mat,
}

impl ModelParams {
    /// Zero `V`; interaction matrices per `w_mode` (zeros when learned,
    /// triangular patterns when fixed).
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let c = config.num_classes;
        let (w_left, w_right) = match config.w_mode {
            WMode::Learned => (Mat::zeros(c, c), Mat::zeros(c, c)),
            WMode::FixedTotalOrder => (Mat::off_upper_triangular(c), Mat::off_lower_triangular(c)),
        };
        Ok(ModelParams {
            v: Mat::zeros(c, config.dim),
            w_left,
            w_right,
            config,
        })
    }

    /// The interaction matrix scoring the given side.
    pub fn w_for_side(&self, side: Side) -> &Mat {
        match side {
            Side::Left => &self.w_left,
            Side::Right => &self.w_right,
        }
    }
}

/// Posterior over latent classes for one adjective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub probabilities: Vec<f64>,
}

impl ClassDistribution {
    /// Index of the most probable class; ties break toward the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        best
    }
}

/// Argmax order for a phrase's two sides.
///
/// The orders are permutations of the *input* index lists handed to
/// [`predict_order`]; position `t` of a side's order names the input index
/// of the adjective predicted at surface position `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingPrediction {
    pub left_order: Vec<usize>,
    pub right_order: Vec<usize>,
    /// Log-probability of the chosen joint order (scorable sides only).
    pub log_prob: f64,
    /// True when another order came within tie tolerance on either side.
    pub tied: bool,
}

impl OrderingPrediction {
    /// The predicted left-side surface sequence over the input adjectives.
    pub fn ordered_left<'a>(&self, left: &'a [String]) -> Vec<&'a str> {
        self.left_order.iter().map(|&i| left[i].as_str()).collect()
    }

    /// The predicted right-side surface sequence over the input adjectives.
    pub fn ordered_right<'a>(&self, right: &'a [String]) -> Vec<&'a str> {
        self.right_order
            .iter()
            .map(|&i| right[i].as_str())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Numerics

pub(crate) fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let lse = logsumexp(logits);
    logits.iter().map(|&x| x - lse).collect()
}

/// Class posterior for one adjective embedding: `softmax(V e)`.
pub fn class_posterior(embedding: &[f64], params: &ModelParams) -> Result<ClassDistribution> {
    let log_probs = log_class_posterior(embedding, params)?;
    let mut probabilities: Vec<f64> = log_probs.iter().map(|&lp| lp.exp()).collect();
    let total: f64 = probabilities.iter().sum();
    for p in &mut probabilities {
        *p /= total;
    }
    Ok(ClassDistribution { probabilities })
}

pub(crate) fn log_class_posterior(embedding: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    let logits = params.v.matvec(embedding)?;
    Ok(log_softmax(&logits))
}

// ---------------------------------------------------------------------------
// Permutation scoring

/// Sum of interaction scores over consecutive class pairs in surface order.
/// Empty and singleton sequences score 0.
pub fn side_score(classes: &[usize], w: &Mat) -> Result<f64> {
    for &c in classes {
        if c >= w.rows() {
            return Err(Error::ClassIndex {
                index: c,
                num_classes: w.rows(),
            });
        }
    }
    Ok(classes.windows(2).map(|pair| w.get(pair[0], pair[1])).sum())
}

/// All permutations of `0..m` in lexicographic order; the identity first.
pub(crate) fn perm_table(m: usize) -> Result<&'static [Vec<usize>]> {
    static TABLES: OnceLock<Vec<Vec<Vec<usize>>>> = OnceLock::new();
    if m < 2 {
        return Err(Error::SideTooShort(m));
    }
    if m > MAX_SIDE {
        return Err(Error::Config(format!(
            "side length {m} exceeds the supported maximum of {MAX_SIDE}"
        )));
    }
    let tables = TABLES.get_or_init(|| {
        (0..=MAX_SIDE)
            .map(|n| (0..n).permutations(n).collect())
            .collect()
    });
    Ok(&tables[m])
}

/// Per-adjective class supports and (renormalized) log posteriors for one
/// side. In the exact regime the support is every class; above
/// `exact_side_limit` each adjective keeps its `prune_top_m` most probable
/// classes, posteriors renormalized over that support.
pub(crate) struct SidePosteriors {
    pub support: Vec<Vec<usize>>,
    pub log_q: Vec<Vec<f64>>,
}

pub(crate) fn side_posteriors(
    embeddings: &[&[f64]],
    params: &ModelParams,
) -> Result<SidePosteriors> {
    let m = embeddings.len();
    let num_classes = params.config.num_classes;
    let exact = m <= params.config.exact_side_limit;
    let keep = params.config.prune_top_m.min(num_classes);

    let mut support = Vec::with_capacity(m);
    let mut log_q = Vec::with_capacity(m);
    for emb in embeddings {
        let full = log_class_posterior(emb, params)?;
        if exact {
            support.push((0..num_classes).collect());
            log_q.push(full);
        } else {
            let mut order: Vec<usize> = (0..num_classes).collect();
            order.sort_by(|&a, &b| full[b].partial_cmp(&full[a]).unwrap().then(a.cmp(&b)));
            let mut chosen: Vec<usize> = order.into_iter().take(keep).collect();
            chosen.sort_unstable();
            let selected: Vec<f64> = chosen.iter().map(|&c| full[c]).collect();
            let norm = logsumexp(&selected);
            log_q.push(selected.iter().map(|&x| x - norm).collect());
            support.push(chosen);
        }
    }
    Ok(SidePosteriors { support, log_q })
}

/// Enumerate every class assignment over the side's supports. For each
/// assignment the callback receives the class tuple, its log weight
/// `sum_i log q_i(c_i)`, the raw scores of every permutation, and their
/// log normalizer.
pub(crate) fn sweep_assignments<F>(
    posteriors: &SidePosteriors,
    w: &Mat,
    perms: &[Vec<usize>],
    mut visit: F,
) where
    F: FnMut(&[usize], f64, &[f64], f64),
{
    let m = posteriors.support.len();
    let mut slot = vec![0usize; m];
    let mut classes: Vec<usize> = posteriors.support.iter().map(|s| s[0]).collect();
    let mut scores = vec![0.0; perms.len()];

    loop {
        let log_weight: f64 = (0..m).map(|i| posteriors.log_q[i][slot[i]]).sum();
        for (p, perm) in perms.iter().enumerate() {
            let mut score = 0.0;
            for t in 0..m - 1 {
                score += w.get(classes[perm[t]], classes[perm[t + 1]]);
            }
            scores[p] = score;
        }
        let log_z = logsumexp(&scores);
        visit(&classes, log_weight, &scores, log_z);

        let mut i = 0;
        loop {
            slot[i] += 1;
            if slot[i] < posteriors.support[i].len() {
                classes[i] = posteriors.support[i][slot[i]];
                break;
            }
            slot[i] = 0;
            classes[i] = posteriors.support[i][0];
            i += 1;
            if i == m {
                return;
            }
        }
    }
}

fn side_log_probs(embeddings: &[&[f64]], w: &Mat, params: &ModelParams) -> Result<Vec<f64>> {
    let m = embeddings.len();
    let perms = perm_table(m)?;
    for emb in embeddings {
        if emb.len() != params.config.dim {
            return Err(Error::DimMismatch {
                expected: params.config.dim,
                found: emb.len(),
            });
        }
    }
    let posteriors = side_posteriors(embeddings, params)?;
    let mut out = vec![f64::NEG_INFINITY; perms.len()];
    sweep_assignments(
        &posteriors,
        w,
        perms,
        |_classes, log_weight, scores, log_z| {
            for (acc, &score) in out.iter_mut().zip(scores) {
                *acc = logaddexp(*acc, log_weight + score - log_z);
            }
        },
    );
    Ok(out)
}

/// Log-probability of every order of one side, marginalized over classes.
///
/// Returns `(permutation, log_probability)` pairs; each permutation maps a
/// surface position to an index into `embeddings`. In the exact regime the
/// probabilities sum to one.
pub fn side_order_distribution(
    embeddings: &[&[f64]],
    side: Side,
    params: &ModelParams,
) -> Result<Vec<(Vec<usize>, f64)>> {
    let log_probs = side_log_probs(embeddings, params.w_for_side(side), params)?;
    let perms = perm_table(embeddings.len())?;
    Ok(perms.iter().cloned().zip(log_probs).collect())
}

/// Log-probability that one side surfaces in the order given by `observed`,
/// a permutation mapping surface positions to indices into `embeddings`.
pub fn side_permutation_log_prob(
    embeddings: &[&[f64]],
    observed: &[usize],
    side: Side,
    params: &ModelParams,
) -> Result<f64> {
    let m = embeddings.len();
    if observed.len() != m {
        return Err(Error::LengthMismatch {
            left: observed.len(),
            right: m,
        });
    }
    let mut seen = vec![false; m];
    for &i in observed {
        if i >= m || seen[i] {
            return Err(Error::Config(format!(
                "observed order {observed:?} is not a permutation of 0..{m}"
            )));
        }
        seen[i] = true;
    }
    // Reorder so the observed surface order is the identity permutation,
    // which is first in the lexicographic table.
    let reordered: Vec<&[f64]> = observed.iter().map(|&i| embeddings[i]).collect();
    let log_probs = side_log_probs(&reordered, params.w_for_side(side), params)?;
    Ok(log_probs[0])
}

/// Log-probability of a phrase's observed surface order: the sum of its
/// sides' terms. Sides shorter than two adjectives carry no ordering signal
/// and contribute zero.
pub fn phrase_log_prob(
    phrase: &Phrase,
    tables: &BTreeMap<String, EmbeddingTable>,
    params: &ModelParams,
) -> Result<f64> {
    let table = tables
        .get(&phrase.language)
        .ok_or_else(|| Error::MissingTable(phrase.language.clone()))?;
    let mut total = 0.0;
    for (words, side) in [(&phrase.left, Side::Left), (&phrase.right, Side::Right)] {
        if words.len() < 2 {
            continue;
        }
        let embeddings: Vec<&[f64]> = words
            .iter()
            .map(|w| table.require(w))
            .collect::<Result<_>>()?;
        let identity: Vec<usize> = (0..words.len()).collect();
        total += side_permutation_log_prob(&embeddings, &identity, side, params)?;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Prediction

struct SideChoice {
    order: Vec<usize>,
    log_prob: f64,
    tied: bool,
}

/// Argmax order of one side's multiset of adjectives. Candidates are
/// generated from the lexicographically sorted adjective list so the result
/// is a pure function of the multiset, not of input order.
fn predict_side(
    words: &[String],
    table: &EmbeddingTable,
    side: Side,
    params: &ModelParams,
) -> Result<SideChoice> {
    let m = words.len();
    if m < 2 {
        return Ok(SideChoice {
            order: (0..m).collect(),
            log_prob: 0.0,
            tied: false,
        });
    }

    // Canonical ordering: sort input indices by adjective string.
    let mut canonical: Vec<usize> = (0..m).collect();
    canonical.sort_by(|&a, &b| words[a].cmp(&words[b]).then(a.cmp(&b)));
    let embeddings: Vec<&[f64]> = canonical
        .iter()
        .map(|&i| table.require(&words[i]))
        .collect::<Result<_>>()?;

    let log_probs = side_log_probs(&embeddings, params.w_for_side(side), params)?;
    let perms = perm_table(m)?;

    let best = log_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Among near-ties, pick the lexicographically smallest word sequence.
    let mut chosen: Option<(Vec<&str>, usize)> = None;
    let mut distinct_sequences = 0usize;
    for (p, &lp) in log_probs.iter().enumerate() {
        if best - lp > TIE_EPS {
            continue;
        }
        let sequence: Vec<&str> = perms[p]
            .iter()
            .map(|&t| words[canonical[t]].as_str())
            .collect();
        match &chosen {
            Some((current, _)) if *current == sequence => {}
            Some((current, _)) if *current < sequence => distinct_sequences += 1,
            _ => {
                if chosen.is_some() {
                    distinct_sequences += 1;
                }
                chosen = Some((sequence, p));
            }
        }
    }
    let (_, perm_idx) = chosen.expect("at least one permutation exists");
    Ok(SideChoice {
        order: perms[perm_idx].iter().map(|&t| canonical[t]).collect(),
        log_prob: log_probs[perm_idx],
        tied: distinct_sequences > 0,
    })
}

/// Predict the surface order for a phrase's two sides of adjectives.
///
/// At least two adjectives in total are required. Each side of length two
/// or more gets its argmax permutation; shorter sides pass through. Ties
/// break toward the lexicographically smallest adjective sequence and set
/// the `tied` flag.
pub fn predict_order(
    left: &[String],
    right: &[String],
    table: &EmbeddingTable,
    params: &ModelParams,
) -> Result<OrderingPrediction> {
    if left.len() + right.len() < 2 {
        return Err(Error::Config(
            "prediction needs at least two adjectives in total".into(),
        ));
    }
    let left_choice = predict_side(left, table, Side::Left, params)?;
    let right_choice = predict_side(right, table, Side::Right, params)?;
    Ok(OrderingPrediction {
        left_order: left_choice.order,
        right_order: right_choice.order,
        log_prob: left_choice.log_prob + right_choice.log_prob,
        tied: left_choice.tied || right_choice.tied,
    })
}

// ---------------------------------------------------------------------------
// Serialization

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    config: ModelConfig,
    v: Vec<Vec<f64>>,
    w_left: Vec<Vec<f64>>,
    w_right: Vec<Vec<f64>>,
}

/// Write parameters as a versioned JSON document. `f64` values are printed
/// in shortest round-trip form, so load-after-save reproduces them exactly.
pub fn save_model<W: Write>(params: &ModelParams, mut writer: W) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        config: params.config.clone(),
        v: params.v.to_rows(),
        w_left: params.w_left.to_rows(),
        w_right: params.w_right.to_rows(),
    };
    serde_json::to_writer_pretty(&mut writer, &file)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Read parameters back, validating shapes and the fixed-W invariant.
pub fn load_model<R: Read>(reader: R) -> Result<ModelParams> {
    let file: ModelFile = serde_json::from_reader(reader)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {}",
            file.format_version
        )));
    }
    file.config.validate()?;
    let c = file.config.num_classes;
    let d = file.config.dim;

    let v = Mat::from_rows(file.v)?;
    let w_left = Mat::from_rows(file.w_left)?;
    let w_right = Mat::from_rows(file.w_right)?;
    let shape_ok = v.rows() == c
        && v.cols() == d
        && w_left.rows() == c
        && w_left.cols() == c
        && w_right.rows() == c
        && w_right.cols() == c;
    if !shape_ok {
        return Err(Error::ModelFormat(
            "matrix shapes disagree with the config".into(),
        ));
    }
    if file.config.w_mode == WMode::FixedTotalOrder
        && (w_left != Mat::off_upper_triangular(c) || w_right != Mat::off_lower_triangular(c))
    {
        return Err(Error::ModelFormat(
            "fixed_total_order model carries non-triangular interaction matrices".into(),
        ));
    }
    Ok(ModelParams {
        config: file.config,
        v,
        w_left,
        w_right,
    })
}
