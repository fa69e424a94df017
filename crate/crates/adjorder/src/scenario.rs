//! Experiment orchestration: English token/type runs and the mono-lingual,
//! transfer, and joint multilingual scenarios, plus evaluation of a trained
//! model on additional languages.
//!
//! Per-language splits derive their seed from the scenario seed and the
//! language code alone, so for a fixed test language the mono, transfer,
//! and joint scenarios evaluate on byte-identical test sets.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_by_token, split_by_type, SplitSpec, TrainSize};
use crate::embeddings::{filter_phrases_by_vocab, EmbeddingTable};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, paired_permutation_test, EvalReport, SignificanceResult};
use crate::manifest::{derive_seed, sha256_bytes, RunManifest};
use crate::model::{save_model, ModelConfig, ModelParams, WMode};
use crate::phrase::{phrases_to_bytes, write_phrases, Phrase};
use crate::training::{train, TrainConfig, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    EnglishToken,
    EnglishType,
    Mono,
    Transfer,
    Joint,
    Additional,
}

/// Model variant: mono-/multi-lingual crossed with learned/fixed W.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "EL")]
    El,
    #[serde(rename = "EF")]
    Ef,
    #[serde(rename = "ML")]
    Ml,
    #[serde(rename = "MF")]
    Mf,
}

impl Variant {
    pub fn w_mode(self) -> WMode {
        match self {
            Variant::El | Variant::Ml => WMode::Learned,
            Variant::Ef | Variant::Mf => WMode::FixedTotalOrder,
        }
    }
}

/// How the multi-language training pool is assembled before the trainer's
/// own per-epoch shuffle. The two orders hold the same multiset of phrases;
/// they differ only in the seeded shuffle they induce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PoolOrder {
    #[default]
    Concatenate,
    Alternate,
}

/// A complete description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: ScenarioKind,
    pub variant: Variant,
    pub train_languages: Vec<String>,
    pub test_language: String,
    /// Token-mode cap on each language's training split.
    pub per_language_train: usize,
    /// Token-mode cap on each language's test split.
    pub per_language_test: usize,
    /// Development carve-out, used by the English token scenario.
    #[serde(default)]
    pub dev_count: Option<usize>,
    /// Fraction of adjective types sampled for training in the English type
    /// scenario.
    #[serde(default = "default_type_fraction")]
    pub type_fraction: f64,
    #[serde(default)]
    pub pool_order: PoolOrder,
    pub seed: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

fn default_type_fraction() -> f64 {
    0.9
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if self.train_languages.is_empty() {
            return Err(Error::Config("scenario needs training languages".into()));
        }
        let holds_test = self
            .train_languages
            .iter()
            .any(|l| l == &self.test_language);
        match self.name {
            ScenarioKind::Mono => {
                if self.train_languages.len() != 1 || !holds_test {
                    return Err(Error::Config(
                        "mono scenario trains exactly on the test language".into(),
                    ));
                }
            }
            ScenarioKind::Transfer | ScenarioKind::Additional => {
                if holds_test {
                    return Err(Error::Config(format!(
                        "{:?} scenario must hold out the test language",
                        self.name
                    )));
                }
            }
            ScenarioKind::Joint => {
                if !holds_test {
                    return Err(Error::Config(
                        "joint scenario must include the test language in training".into(),
                    ));
                }
            }
            ScenarioKind::EnglishToken | ScenarioKind::EnglishType => {
                if self.train_languages.len() != 1 || !holds_test {
                    return Err(Error::Config(
                        "English scenarios train and test on one language".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Sizes and digests of one language's split, for manifesting and for the
/// identical-test-set assertion across scenarios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDigest {
    pub train_len: usize,
    pub test_len: usize,
    pub train_sha256: String,
    pub test_sha256: String,
}

/// Everything a scenario run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub spec: ScenarioSpec,
    pub report: EvalReport,
    pub train_report: TrainReport,
    pub params: ModelParams,
    pub splits: BTreeMap<String, SplitDigest>,
    /// The test split the report was computed on.
    pub test_set: Vec<Phrase>,
}

/// Token split with caps: up to `train_cap` training phrases, then up to
/// `test_cap` test phrases from the remainder. Short corpora simply yield
/// the test phrases they have.
fn capped_token_split(
    phrases: &[Phrase],
    train_cap: usize,
    test_cap: usize,
    seed: u64,
) -> Result<(Vec<Phrase>, Vec<Phrase>)> {
    if phrases.len() < 2 {
        return Err(Error::Split(format!(
            "need at least 2 phrases to split, found {}",
            phrases.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..phrases.len()).collect();
    indices.shuffle(&mut rng);
    let train_n = train_cap.min(phrases.len() - 1);
    let test_n = test_cap.min(phrases.len() - train_n);
    let mut train_idx = indices[..train_n].to_vec();
    let mut test_idx = indices[train_n..train_n + test_n].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((
        train_idx.iter().map(|&i| phrases[i].clone()).collect(),
        test_idx.iter().map(|&i| phrases[i].clone()).collect(),
    ))
}

fn digest_split(train: &[Phrase], test: &[Phrase]) -> SplitDigest {
    SplitDigest {
        train_len: train.len(),
        test_len: test.len(),
        train_sha256: sha256_bytes(&phrases_to_bytes(train)),
        test_sha256: sha256_bytes(&phrases_to_bytes(test)),
    }
}

/// Up to `cap` phrases sampled uniformly under the seed, returned in
/// original corpus order.
fn capped_sample(phrases: &[Phrase], cap: usize, seed: u64) -> Vec<Phrase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..phrases.len()).collect();
    indices.shuffle(&mut rng);
    indices.truncate(cap);
    indices.sort_unstable();
    indices.into_iter().map(|i| phrases[i].clone()).collect()
}

/// Run one scenario end to end: filter corpora to vocabulary, split per
/// language, assemble the training pool, train, and evaluate on the test
/// language's test split.
pub fn run_scenario(
    spec: &ScenarioSpec,
    corpora: &BTreeMap<String, Vec<Phrase>>,
    tables: &BTreeMap<String, EmbeddingTable>,
) -> Result<ScenarioRun> {
    spec.validate()?;

    let mut languages: Vec<String> = spec.train_languages.clone();
    if !languages.contains(&spec.test_language) {
        languages.push(spec.test_language.clone());
    }
    for language in &languages {
        if !corpora.contains_key(language) {
            return Err(Error::Config(format!(
                "no corpus for language {language:?}"
            )));
        }
        if !tables.contains_key(language) {
            return Err(Error::MissingTable(language.clone()));
        }
    }

    // Per-language splits; the split depends only on (corpus, seed,
    // language), never on the scenario kind, so sibling scenarios share
    // test sets.
    let mut trains: BTreeMap<String, Vec<Phrase>> = BTreeMap::new();
    let mut tests: BTreeMap<String, Vec<Phrase>> = BTreeMap::new();
    let mut splits: BTreeMap<String, SplitDigest> = BTreeMap::new();
    for language in &languages {
        let filtered = filter_phrases_by_vocab(&corpora[language], tables)?;
        let lang_seed = derive_seed(spec.seed, language);
        let (train_part, test_part) = match spec.name {
            ScenarioKind::EnglishToken => {
                // Dev and train counts determine the split; the remainder
                // is the test set.
                let split_spec = SplitSpec {
                    dev_count: spec.dev_count,
                    ..SplitSpec::token(TrainSize::Count(spec.per_language_train), lang_seed)
                };
                let split = split_by_token(&filtered, &split_spec)?;
                (split.train, split.test)
            }
            ScenarioKind::EnglishType => {
                let split_spec = SplitSpec::by_type(spec.type_fraction, lang_seed);
                let split = split_by_type(&filtered, &split_spec)?;
                (split.train, split.test)
            }
            ScenarioKind::Additional if language == &spec.test_language => {
                // Additional-language corpora are small; the whole corpus
                // (capped) is the test set.
                let test = capped_sample(&filtered, spec.per_language_test, lang_seed);
                (Vec::new(), test)
            }
            _ => capped_token_split(
                &filtered,
                spec.per_language_train,
                spec.per_language_test,
                lang_seed,
            )?,
        };
        splits.insert(language.clone(), digest_split(&train_part, &test_part));
        trains.insert(language.clone(), train_part);
        tests.insert(language.clone(), test_part);
    }

    let test_set = &tests[&spec.test_language];
    if test_set.is_empty() {
        return Err(Error::Empty(format!(
            "test split for {:?} is empty",
            spec.test_language
        )));
    }

    // Assemble the training pool; the trainer reshuffles per epoch either way.
    let mut pool: Vec<Phrase> = Vec::new();
    match spec.pool_order {
        PoolOrder::Concatenate => {
            for language in &spec.train_languages {
                pool.extend(trains[language].iter().cloned());
            }
        }
        PoolOrder::Alternate => {
            let mut cursors: Vec<std::slice::Iter<Phrase>> = spec
                .train_languages
                .iter()
                .map(|l| trains[l].iter())
                .collect();
            loop {
                let mut emitted = false;
                for cursor in &mut cursors {
                    if let Some(phrase) = cursor.next() {
                        pool.push(phrase.clone());
                        emitted = true;
                    }
                }
                if !emitted {
                    break;
                }
            }
        }
    }

    let mut model_config = spec.model.clone();
    model_config.w_mode = spec.variant.w_mode();
    let (params, train_report) = train(&pool, tables, &model_config, &spec.train)?;
    let report = evaluate(test_set, tables, &params)?;

    Ok(ScenarioRun {
        spec: spec.clone(),
        report,
        train_report,
        params,
        splits,
        test_set: tests
            .remove(&spec.test_language)
            .expect("test split exists"),
    })
}

/// Evaluate an already-trained model on a held-out language: its whole
/// vocabulary-filtered corpus, capped like the additional scenario's test
/// split and sampled under the same per-language seed derivation. This is
/// how one transfer-trained model is reused across many small languages.
pub fn evaluate_on_language(
    spec: &ScenarioSpec,
    params: &ModelParams,
    language: &str,
    corpora: &BTreeMap<String, Vec<Phrase>>,
    tables: &BTreeMap<String, EmbeddingTable>,
) -> Result<(EvalReport, SplitDigest)> {
    let corpus = corpora
        .get(language)
        .ok_or_else(|| Error::Config(format!("no corpus for language {language:?}")))?;
    if !tables.contains_key(language) {
        return Err(Error::MissingTable(language.to_string()));
    }
    let filtered = filter_phrases_by_vocab(corpus, tables)?;
    let lang_seed = derive_seed(spec.seed, language);
    let test = capped_sample(&filtered, spec.per_language_test, lang_seed);
    if test.is_empty() {
        return Err(Error::Empty(format!(
            "test split for {language:?} is empty"
        )));
    }
    let report = evaluate(&test, tables, params)?;
    let digest = digest_split(&[], &test);
    Ok((report, digest))
}

/// Paired permutation test between two runs that share a test set.
pub fn compare_runs(
    a: &ScenarioRun,
    b: &ScenarioRun,
    permutations: usize,
    seed: u64,
    alpha: f64,
) -> Result<SignificanceResult> {
    let test_a = &a.splits[&a.spec.test_language].test_sha256;
    let test_b = &b.splits[&b.spec.test_language].test_sha256;
    if test_a != test_b {
        return Err(Error::Config(
            "runs evaluate different test sets; paired comparison is invalid".into(),
        ));
    }
    paired_permutation_test(
        &a.report.correct,
        &b.report.correct,
        permutations,
        seed,
        alpha,
    )
}

/// Write the run's artifacts under `dir`: `model.json`, `report.json`,
/// `metrics.jsonl`, the evaluated test split, and `manifest.json`.
pub fn write_artifacts(run: &ScenarioRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let model_path = dir.join("model.json");
    let mut model_bytes = Vec::new();
    save_model(&run.params, &mut model_bytes)?;
    fs::write(&model_path, &model_bytes)?;

    let report_path = dir.join("report.json");
    let mut report_bytes = serde_json::to_vec_pretty(&run.report)?;
    report_bytes.push(b'\n');
    fs::write(&report_path, &report_bytes)?;

    let metrics_path = dir.join("metrics.jsonl");
    let mut metrics = String::new();
    for (batch, nll) in run.train_report.batch_nll.iter().enumerate() {
        metrics.push_str(&serde_json::json!({ "batch": batch, "nll": nll }).to_string());
        metrics.push('\n');
    }
    fs::write(&metrics_path, metrics)?;

    let mut manifest = RunManifest::new("scenario").with_seed(run.spec.seed);
    manifest.set_param("spec", &run.spec);
    manifest.set_param("splits", &run.splits);
    manifest.set_param("skipped_phrases", run.train_report.skipped);
    manifest.set_param("params_digest", &run.train_report.params_digest);
    manifest.record_output(&model_path)?;
    manifest.record_output(&report_path)?;
    manifest.record_output(&metrics_path)?;
    manifest.write(&dir.join("manifest.json"))?;
    Ok(())
}

/// Convenience for tests and callers that assemble corpora in memory.
pub fn write_corpus(path: &Path, phrases: &[Phrase]) -> Result<()> {
    let file = fs::File::create(path)?;
    write_phrases(std::io::BufWriter::new(file), phrases)
}
