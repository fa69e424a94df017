//! Batch gradient descent on the negative log-likelihood of observed orders.
//!
//! Gradients are analytic: the posterior over class assignments given the
//! observed order yields per-adjective class marginals for the `V` update,
//! and the gap between observed and expected consecutive-pair counts yields
//! the interaction-matrix update when `W` is learned.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::manifest::sha256_bytes;
use crate::mat::Mat;
use crate::model::{
    logaddexp, perm_table, save_model, side_posteriors, sweep_assignments, ModelConfig,
    ModelParams, Side, WMode,
};
use crate::phrase::Phrase;

/// Optimizer settings. Plain batch gradient descent, one shuffle per epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Half-width (scaled by `1/sqrt(dim)`) of the uniform init for `V`.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            batch_size: 32,
            epochs: 1,
            seed: 0,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// What a training run did: per-batch mean NLL, a digest of the final
/// parameters, and how many phrases were set aside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean NLL of each batch, in update order.
    pub batch_nll: Vec<f64>,
    /// Phrases skipped because of OOV adjectives or no scorable side.
    pub skipped: usize,
    /// SHA-256 of the serialized final model.
    pub params_digest: String,
}

/// Gradient of the mean batch NLL, shaped like [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub v: Mat,
    pub w_left: Mat,
    pub w_right: Mat,
}

impl Gradients {
    fn zeros(config: &ModelConfig) -> Self {
        Gradients {
            v: Mat::zeros(config.num_classes, config.dim),
            w_left: Mat::zeros(config.num_classes, config.num_classes),
            w_right: Mat::zeros(config.num_classes, config.num_classes),
        }
    }
}

/// Fresh parameters: `V` i.i.d. uniform in `[-init_scale/sqrt(d),
/// +init_scale/sqrt(d)]`, learned interaction matrices at zero so all
/// orders start equiprobable.
pub fn init_params_scaled<R: Rng>(
    config: &ModelConfig,
    rng: &mut R,
    init_scale: f64,
) -> Result<ModelParams> {
    let mut params = ModelParams::new(config.clone())?;
    let half_width = init_scale / (config.dim as f64).sqrt();
    for value in params.v.as_mut_slice() {
        *value = rng.gen_range(-half_width..=half_width);
    }
    Ok(params)
}

fn check_phrase(phrase: &Phrase, tables: &BTreeMap<String, EmbeddingTable>) -> Result<()> {
    if !phrase.has_scorable_side() {
        return Err(Error::Config(format!(
            "phrase {:?} has no side with >= 2 adjectives",
            phrase.source_id
        )));
    }
    let table = tables
        .get(&phrase.language)
        .ok_or_else(|| Error::MissingTable(phrase.language.clone()))?;
    for adj in phrase.adjectives() {
        table.require(adj)?;
    }
    Ok(())
}

/// Observed-order log-probability of one side, optionally accumulating the
/// NLL gradient scaled by `scale` into `grads`.
///
/// Two sweeps over class assignments: the first computes the marginal
/// log-probability of the observed order, the second turns each
/// assignment's posterior responsibility into gradient contributions.
fn side_log_prob_and_grad(
    words: &[String],
    table: &EmbeddingTable,
    side: Side,
    params: &ModelParams,
    grad: Option<(&mut Gradients, f64)>,
) -> Result<f64> {
    let m = words.len();
    debug_assert!(m >= 2);
    let embeddings: Vec<&[f64]> = words
        .iter()
        .map(|w| table.require(w))
        .collect::<Result<_>>()?;
    let w = params.w_for_side(side);
    let perms = perm_table(m)?;
    let posteriors = side_posteriors(&embeddings, params)?;

    // Pass 1: log p(observed) = LSE over assignments. The observed surface
    // order is the identity permutation, first in the table.
    let mut log_prob = f64::NEG_INFINITY;
    sweep_assignments(&posteriors, w, perms, |_, log_weight, scores, log_z| {
        log_prob = logaddexp(log_prob, log_weight + scores[0] - log_z);
    });

    let Some((grads, scale)) = grad else {
        return Ok(log_prob);
    };

    // Pass 2: responsibilities. marginals[i][c] is the posterior probability
    // that adjective i carries class c given the observed order.
    let num_classes = params.config.num_classes;
    let mut marginals = vec![vec![0.0f64; num_classes]; m];
    let learn_w = params.config.w_mode == WMode::Learned;
    let gw = match side {
        Side::Left => &mut grads.w_left,
        Side::Right => &mut grads.w_right,
    };
    sweep_assignments(
        &posteriors,
        w,
        perms,
        |classes, log_weight, scores, log_z| {
            let resp = (log_weight + scores[0] - log_z - log_prob).exp();
            if resp == 0.0 {
                return;
            }
            for (i, &c) in classes.iter().enumerate() {
                marginals[i][c] += resp;
            }
            if learn_w {
                // d(-log p)/dW = expected pair counts under p(pi | c) minus
                // observed pair counts, weighted by the responsibility.
                for t in 0..m - 1 {
                    gw.add_assign_at(classes[t], classes[t + 1], -scale * resp);
                }
                for (p, perm) in perms.iter().enumerate() {
                    let coef = resp * (scores[p] - log_z).exp();
                    for t in 0..m - 1 {
                        gw.add_assign_at(classes[perm[t]], classes[perm[t + 1]], scale * coef);
                    }
                }
            }
        },
    );

    // V update: for each adjective, (prior - posterior) class mass times its
    // embedding, restricted to the side's class support.
    for (i, emb) in embeddings.iter().enumerate() {
        for (slot, &c) in posteriors.support[i].iter().enumerate() {
            let prior = posteriors.log_q[i][slot].exp();
            let coeff = scale * (prior - marginals[i][c]);
            if coeff == 0.0 {
                continue;
            }
            for (j, &e) in emb.iter().enumerate() {
                grads.v.add_assign_at(c, j, coeff * e);
            }
        }
    }

    Ok(log_prob)
}

fn phrase_nll_and_grad(
    phrase: &Phrase,
    tables: &BTreeMap<String, EmbeddingTable>,
    params: &ModelParams,
    mut grad: Option<(&mut Gradients, f64)>,
) -> Result<f64> {
    check_phrase(phrase, tables)?;
    let table = &tables[&phrase.language];
    let mut log_prob = 0.0;
    for (words, side) in [(&phrase.left, Side::Left), (&phrase.right, Side::Right)] {
        if words.len() < 2 {
            continue;
        }
        let passthrough = grad.as_mut().map(|(g, s)| (&mut **g, *s));
        log_prob += side_log_prob_and_grad(words, table, side, params, passthrough)?;
    }
    Ok(-log_prob)
}

/// Mean negative log-likelihood of a batch's observed orders.
pub fn nll_loss(
    batch: &[Phrase],
    tables: &BTreeMap<String, EmbeddingTable>,
    params: &ModelParams,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("nll_loss needs a non-empty batch".into()));
    }
    let mut total = 0.0;
    for phrase in batch {
        total += phrase_nll_and_grad(phrase, tables, params, None)?;
    }
    Ok(total / batch.len() as f64)
}

/// Exact gradient of [`nll_loss`] with respect to the parameters. Under
/// [`WMode::FixedTotalOrder`] the interaction gradients are identically zero.
pub fn gradients(
    batch: &[Phrase],
    tables: &BTreeMap<String, EmbeddingTable>,
    params: &ModelParams,
) -> Result<Gradients> {
    if batch.is_empty() {
        return Err(Error::Empty("gradients needs a non-empty batch".into()));
    }
    let mut grads = Gradients::zeros(&params.config);
    let scale = 1.0 / batch.len() as f64;
    for phrase in batch {
        phrase_nll_and_grad(phrase, tables, params, Some((&mut grads, scale)))?;
    }
    Ok(grads)
}

/// Fit parameters on a phrase corpus.
///
/// Phrases with an out-of-vocabulary adjective or no scorable side are
/// skipped and counted, not errors. Each epoch shuffles the usable phrases
/// under the seeded generator, walks them in sequential batches, and applies
/// `theta <- theta - lr * grad` to the learnable parameters. The final
/// ragged batch is kept, weighted by its own mean. Two runs with the same
/// seed and data produce identical parameters and reports.
pub fn train(
    dataset: &[Phrase],
    tables: &BTreeMap<String, EmbeddingTable>,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<(ModelParams, TrainReport)> {
    model_config.validate()?;
    train_config.validate()?;

    let usable: Vec<&Phrase> = dataset
        .iter()
        .filter(|p| check_phrase(p, tables).is_ok())
        .collect();
    let skipped = dataset.len() - usable.len();
    if usable.is_empty() {
        return Err(Error::Empty(
            "no trainable phrases left after filtering".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
    let mut params = init_params_scaled(model_config, &mut rng, train_config.init_scale)?;
    let learn_w = model_config.w_mode == WMode::Learned;

    let mut batch_nll = Vec::new();
    let mut order: Vec<usize> = (0..usable.len()).collect();
    for _ in 0..train_config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(train_config.batch_size) {
            let mut grads = Gradients::zeros(model_config);
            let scale = 1.0 / chunk.len() as f64;
            let mut loss = 0.0;
            for &idx in chunk {
                loss +=
                    phrase_nll_and_grad(usable[idx], tables, &params, Some((&mut grads, scale)))?;
            }
            batch_nll.push(loss * scale);

            let lr = train_config.learning_rate;
            params.v.axpy(-lr, &grads.v);
            if learn_w {
                params.w_left.axpy(-lr, &grads.w_left);
                params.w_right.axpy(-lr, &grads.w_right);
            }
        }
    }

    let mut model_bytes = Vec::new();
    save_model(&params, &mut model_bytes)?;
    let report = TrainReport {
        batch_nll,
        skipped,
        params_digest: sha256_bytes(&model_bytes),
    };
    Ok((params, report))
}
