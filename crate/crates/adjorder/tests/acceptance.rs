//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`).

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, UnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use adjorder::conllu::{extract_phrases, parse_conllu, ExtractionConfig};
use adjorder::dataset::{split_by_token, SplitSpec, TrainSize};
use adjorder::embeddings::{filter_phrases_by_vocab, load_embeddings, EmbeddingTable};
use adjorder::evaluation::{
    evaluate, paired_permutation_test, random_baseline, random_orderer_correct,
};
use adjorder::manifest::sha256_bytes;
use adjorder::model::{
    predict_order, save_model, side_order_distribution, side_permutation_log_prob, ModelConfig,
    ModelParams, Side, WMode,
};
use adjorder::phrase::phrases_to_bytes;
use adjorder::scenario::{
    run_scenario, write_artifacts, PoolOrder, ScenarioKind, ScenarioSpec, Variant,
};
use adjorder::training::{gradients, nll_loss, train, TrainConfig};
use adjorder::{Mat, Phrase};

use common::{
    all_permutations, class_prototypes, oracle_side_log_prob, planted_language, planted_phrases,
    synth_english_treebank, PlantedLanguage, SideStyle,
};

fn criterion<F: FnOnce() + UnwindSafe>(number: usize, name: &str, body: F) {
    let outcome = catch_unwind(body);
    match &outcome {
        Ok(()) => println!("acceptance criterion {number} ({name}): PASS"),
        Err(_) => println!("acceptance criterion {number} ({name}): FAIL"),
    }
    if let Err(payload) = outcome {
        std::panic::resume_unwind(payload);
    }
}

fn assert_runtime(start: Instant, budget: Duration, what: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "{what} took {elapsed:?}, budget {budget:?}"
    );
}

/// Random model instance for the oracle and gradient criteria.
fn random_params(
    num_classes: usize,
    dim: usize,
    w_mode: WMode,
    rng: &mut ChaCha8Rng,
) -> ModelParams {
    let mut config = ModelConfig::new(num_classes, dim, w_mode);
    config.exact_side_limit = 4;
    let mut params = ModelParams::new(config).unwrap();
    for v in params.v.as_mut_slice() {
        *v = rng.gen_range(-2.0..2.0);
    }
    if w_mode == WMode::Learned {
        for v in params.w_left.as_mut_slice() {
            *v = rng.gen_range(-1.5..1.5);
        }
        for v in params.w_right.as_mut_slice() {
            *v = rng.gen_range(-1.5..1.5);
        }
    }
    params
}

#[test]
fn criterion_1_oracle_equivalence() {
    criterion(1, "oracle equivalence", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE01);
        for case in 0..1000 {
            let num_classes = rng.gen_range(2..=4);
            let dim = rng.gen_range(1..=8);
            let m = rng.gen_range(2..=4usize);
            let w_mode = if rng.gen::<bool>() {
                WMode::Learned
            } else {
                WMode::FixedTotalOrder
            };
            let params = random_params(num_classes, dim, w_mode, &mut rng);
            let embeddings: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let embs: Vec<&[f64]> = embeddings.iter().map(Vec::as_slice).collect();

            let perms = all_permutations(m);
            let observed = &perms[rng.gen_range(0..perms.len())];
            let (side, w) = if rng.gen::<bool>() {
                (Side::Left, &params.w_left)
            } else {
                (Side::Right, &params.w_right)
            };

            let got = side_permutation_log_prob(&embs, observed, side, &params).unwrap();
            let want =
                oracle_side_log_prob(&embeddings, observed, &params.v.to_rows(), &w.to_rows());
            assert!(
                (got - want).abs() < 1e-10,
                "case {case}: {got} vs oracle {want}"
            );
        }
        assert_runtime(start, Duration::from_secs(60), "oracle equivalence");
    });
}

#[test]
fn criterion_2_gradient_correctness() {
    criterion(2, "gradient correctness", || {
        let start = Instant::now();
        let num_classes = 3;
        let dim = 4;
        let eps = 1e-4;
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE02);

        for case in 0..100 {
            let w_mode = if case % 2 == 0 {
                WMode::Learned
            } else {
                WMode::FixedTotalOrder
            };
            let params = random_params(num_classes, dim, w_mode, &mut rng);

            let vocab: Vec<(String, Vec<f64>)> = (0..5)
                .map(|i| {
                    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    (format!("w{i}"), v)
                })
                .collect();
            let words: Vec<String> = vocab.iter().map(|(w, _)| w.clone()).collect();
            let table = EmbeddingTable::from_entries("xx", dim, vocab).unwrap();
            let mut tables = BTreeMap::new();
            tables.insert("xx".to_string(), table);

            let m = rng.gen_range(2..=3usize);
            let batch = vec![Phrase {
                language: "xx".into(),
                noun: "n".into(),
                left: words[..m].to_vec(),
                right: if rng.gen::<bool>() {
                    words[3..5].to_vec()
                } else {
                    vec![]
                },
                source_id: format!("g{case}"),
            }];

            let grads = gradients(&batch, &tables, &params).unwrap();
            let fd = |set: &dyn Fn(&mut ModelParams, f64), base: f64| -> f64 {
                let mut plus = params.clone();
                set(&mut plus, base + eps);
                let mut minus = params.clone();
                set(&mut minus, base - eps);
                (nll_loss(&batch, &tables, &plus).unwrap()
                    - nll_loss(&batch, &tables, &minus).unwrap())
                    / (2.0 * eps)
            };
            let close = |analytic: f64, numeric: f64| {
                let denom = analytic.abs().max(numeric.abs()).max(1e-6);
                assert!(
                    ((analytic - numeric) / denom).abs() < 1e-4,
                    "case {case}: analytic {analytic} vs numeric {numeric}"
                );
            };

            for c in 0..num_classes {
                for j in 0..dim {
                    let numeric = fd(&move |p, x| p.v.set(c, j, x), params.v.get(c, j));
                    close(grads.v.get(c, j), numeric);
                }
            }
            match w_mode {
                WMode::FixedTotalOrder => {
                    assert_eq!(grads.w_left, Mat::zeros(num_classes, num_classes));
                    assert_eq!(grads.w_right, Mat::zeros(num_classes, num_classes));
                }
                WMode::Learned => {
                    for c in 0..num_classes {
                        for j in 0..num_classes {
                            let numeric =
                                fd(&move |p, x| p.w_left.set(c, j, x), params.w_left.get(c, j));
                            close(grads.w_left.get(c, j), numeric);
                            let numeric = fd(
                                &move |p, x| p.w_right.set(c, j, x),
                                params.w_right.get(c, j),
                            );
                            close(grads.w_right.get(c, j), numeric);
                        }
                    }
                }
            }
        }
        assert_runtime(start, Duration::from_secs(60), "gradient check");
    });
}

#[test]
fn criterion_3_normalization() {
    criterion(3, "per-side normalization", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE03);
        for _ in 0..400 {
            let num_classes = rng.gen_range(2..=5);
            let dim = rng.gen_range(1..=6);
            let m = rng.gen_range(2..=4usize);
            let w_mode = if rng.gen::<bool>() {
                WMode::Learned
            } else {
                WMode::FixedTotalOrder
            };
            let params = random_params(num_classes, dim, w_mode, &mut rng);
            let embeddings: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let embs: Vec<&[f64]> = embeddings.iter().map(Vec::as_slice).collect();
            for side in [Side::Left, Side::Right] {
                let dist = side_order_distribution(&embs, side, &params).unwrap();
                let total: f64 = dist.iter().map(|(_, lp)| lp.exp()).sum();
                assert!((total - 1.0).abs() < 1e-10, "sum = {total}");
            }
        }
    });
}

/// Deterministic-class fixture: word `w{c}` maps to class c with posterior
/// mass effectively 1.
fn deterministic_fixture(num_classes: usize) -> (EmbeddingTable, ModelParams) {
    let config = ModelConfig::new(num_classes, num_classes, WMode::FixedTotalOrder);
    let mut params = ModelParams::new(config).unwrap();
    for c in 0..num_classes {
        params.v.set(c, c, 100.0);
    }
    let entries: Vec<(String, Vec<f64>)> = (0..num_classes)
        .map(|c| {
            let mut v = vec![0.0; num_classes];
            v[c] = 1.0;
            (format!("w{c}"), v)
        })
        .collect();
    let table = EmbeddingTable::from_entries("xx", num_classes, entries).unwrap();
    (table, params)
}

#[test]
fn criterion_4_total_order_behavior() {
    criterion(4, "fixed total-order behavior", || {
        // Exhaustive over all distinct class subsets for m <= 4, |C| = 6.
        let (table, params) = deterministic_fixture(6);
        let mut checked = 0usize;
        let subsets: Vec<Vec<usize>> = (2..=4usize)
            .flat_map(|m| itertools::Itertools::combinations(0..6usize, m))
            .collect();
        for subset in &subsets {
            // Feed the words in reversed (worst-case) input order.
            let words: Vec<String> = subset.iter().rev().map(|c| format!("w{c}")).collect();
            let expected_left: Vec<String> = subset.iter().map(|c| format!("w{c}")).collect();
            let expected_right: Vec<String> =
                subset.iter().rev().map(|c| format!("w{c}")).collect();

            let pred = predict_order(&words, &[], &table, &params).unwrap();
            assert_eq!(
                pred.ordered_left(&words),
                expected_left.iter().map(String::as_str).collect::<Vec<_>>()
            );
            let pred = predict_order(&[], &words, &table, &params).unwrap();
            assert_eq!(
                pred.ordered_right(&words),
                expected_right
                    .iter()
                    .map(String::as_str)
                    .collect::<Vec<_>>()
            );
            checked += 1;
        }
        assert!(checked >= 50, "only {checked} exhaustive subsets");

        // Randomized cases at full class count.
        let (table, params) = deterministic_fixture(15);
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE04);
        for _ in 0..150 {
            let m = rng.gen_range(2..=4usize);
            let mut classes: Vec<usize> = Vec::new();
            while classes.len() < m {
                let c = rng.gen_range(0..15);
                if !classes.contains(&c) {
                    classes.push(c);
                }
            }
            let words: Vec<String> = classes.iter().map(|c| format!("w{c}")).collect();
            let mut sorted = classes.clone();
            sorted.sort_unstable();

            let pred = predict_order(&words, &[], &table, &params).unwrap();
            let left_seq: Vec<String> = pred
                .ordered_left(&words)
                .iter()
                .map(|s| s.to_string())
                .collect();
            let expect: Vec<String> = sorted.iter().map(|c| format!("w{c}")).collect();
            assert_eq!(left_seq, expect, "left not ascending for {classes:?}");

            let pred = predict_order(&[], &words, &table, &params).unwrap();
            let right_seq: Vec<String> = pred
                .ordered_right(&words)
                .iter()
                .map(|s| s.to_string())
                .collect();
            let expect: Vec<String> = sorted.iter().rev().map(|c| format!("w{c}")).collect();
            assert_eq!(right_seq, expect, "right not descending for {classes:?}");
        }
    });
}

#[test]
fn criterion_5_planted_model_recovery() {
    criterion(5, "planted-model recovery", || {
        let start = Instant::now();
        let prototypes = class_prototypes(15, 50, 0xACCE05);
        let lang = planted_language("pl", &prototypes, 10, 0.05, 0xACCE15);
        let train_set = planted_phrases(&lang, SideStyle::Prenominal, 5000, 0.3, 0.0, 0xACCE25);
        let test_set = planted_phrases(&lang, SideStyle::Prenominal, 1000, 0.3, 0.0, 0xACCE35);

        let mut tables = BTreeMap::new();
        tables.insert(lang.language.clone(), lang.table.clone());

        let model_config = ModelConfig {
            num_classes: 15,
            dim: 50,
            w_mode: WMode::FixedTotalOrder,
            ..ModelConfig::default()
        };
        let train_config = TrainConfig {
            learning_rate: 0.1,
            batch_size: 32,
            epochs: 1,
            seed: 0xACCE45,
            init_scale: 0.1,
        };
        let (params, report) = train(&train_set, &tables, &model_config, &train_config).unwrap();
        assert_eq!(report.skipped, 0);

        let eval = evaluate(&test_set, &tables, &params).unwrap();
        println!("  planted recovery: held-out accuracy {:.4}", eval.accuracy);
        assert!(
            eval.accuracy >= 0.9,
            "held-out accuracy {} below 0.9",
            eval.accuracy
        );

        // Smoothed first-epoch loss must end lower than it started.
        let window = 10;
        let smoothed: Vec<f64> = report
            .batch_nll
            .windows(window)
            .map(|w| w.iter().sum::<f64>() / window as f64)
            .collect();
        assert!(
            smoothed.last().unwrap() < smoothed.first().unwrap(),
            "loss did not decrease: {:?} -> {:?}",
            smoothed.first(),
            smoothed.last()
        );

        assert_runtime(start, Duration::from_secs(600), "planted recovery");
    });
}

#[test]
fn criterion_6_desk_scale_corpus() {
    criterion(6, "desk-scale corpus significance", || {
        let start = Instant::now();
        let (conllu, vec_text) = synth_english_treebank(2000, 0xACCE06);

        let sentences = parse_conllu(conllu.as_bytes()).unwrap();
        let phrases = extract_phrases(&sentences, &ExtractionConfig::default(), "en").unwrap();
        assert!(
            phrases.len() >= 1000,
            "treebank yielded only {} phrases",
            phrases.len()
        );
        for phrase in &phrases {
            assert!(phrase.has_scorable_side(), "{phrase:?}");
            assert!(phrase.total_adjectives() <= 6, "{phrase:?}");
            let mut seen = std::collections::BTreeSet::new();
            for adj in phrase.adjectives() {
                assert!(seen.insert(adj), "duplicate adjective in {phrase:?}");
            }
        }

        let table = load_embeddings(vec_text.as_bytes(), "en", None).unwrap();
        let mut tables = BTreeMap::new();
        tables.insert("en".to_string(), table);
        let filtered = filter_phrases_by_vocab(&phrases, &tables).unwrap();
        assert!(filtered.len() >= 1000);

        let spec = SplitSpec::token(TrainSize::Fraction(0.9), 0xACCE16);
        let split = split_by_token(&filtered, &spec).unwrap();

        let model_config = ModelConfig {
            num_classes: 15,
            dim: 50,
            w_mode: WMode::FixedTotalOrder,
            ..ModelConfig::default()
        };
        let train_config = TrainConfig {
            seed: 0xACCE26,
            ..TrainConfig::default()
        };
        let (params, _) = train(&split.train, &tables, &model_config, &train_config).unwrap();
        let report = evaluate(&split.test, &tables, &params).unwrap();

        let margin = report.accuracy - report.random_baseline;
        println!(
            "  desk-scale: accuracy {:.4}, exact baseline {:.4}, margin {margin:.4}",
            report.accuracy, report.random_baseline
        );
        assert!(
            margin >= 0.15,
            "accuracy {} exceeds baseline {} by only {margin}",
            report.accuracy,
            report.random_baseline
        );

        let random = random_orderer_correct(&split.test, 0xACCE36);
        let sig =
            paired_permutation_test(&report.correct, &random, 10_000, 0xACCE46, 0.05).unwrap();
        println!("  desk-scale: p-value vs random orderer {:.6}", sig.p_value);
        assert!(sig.p_value < 0.01, "p = {}", sig.p_value);
        assert!(sig.observed_diff > 0.0);

        assert_runtime(start, Duration::from_secs(3600), "desk-scale corpus");
    });
}

/// Four aligned planted languages: three prenominal, one postnominal.
fn transfer_world(
    seed: u64,
) -> (
    BTreeMap<String, Vec<Phrase>>,
    BTreeMap<String, EmbeddingTable>,
) {
    let prototypes = class_prototypes(15, 30, seed);
    let mut corpora = BTreeMap::new();
    let mut tables = BTreeMap::new();
    for (i, (code, style)) in [
        ("aa", SideStyle::Prenominal),
        ("bb", SideStyle::Prenominal),
        ("cc", SideStyle::Prenominal),
        ("dd", SideStyle::Postnominal),
    ]
    .into_iter()
    .enumerate()
    {
        let lang: PlantedLanguage =
            planted_language(code, &prototypes, 8, 0.05, seed ^ (i as u64 + 1));
        let phrases = planted_phrases(&lang, style, 600, 0.3, 0.05, seed ^ (0x100 + i as u64));
        corpora.insert(code.to_string(), phrases);
        tables.insert(code.to_string(), lang.table);
    }
    (corpora, tables)
}

#[test]
fn criterion_7_transfer_property() {
    criterion(7, "cross-lingual transfer", || {
        let (corpora, tables) = transfer_world(0xACCE07);
        let spec = ScenarioSpec {
            name: ScenarioKind::Transfer,
            variant: Variant::Mf,
            train_languages: vec!["aa".into(), "bb".into(), "cc".into()],
            test_language: "dd".into(),
            per_language_train: 450,
            per_language_test: 150,
            dev_count: None,
            type_fraction: 0.9,
            pool_order: PoolOrder::Concatenate,
            seed: 0xACCE17,
            model: ModelConfig {
                num_classes: 15,
                dim: 30,
                w_mode: WMode::FixedTotalOrder,
                ..ModelConfig::default()
            },
            train: TrainConfig {
                seed: 0xACCE27,
                ..TrainConfig::default()
            },
        };
        let run = run_scenario(&spec, &corpora, &tables).unwrap();
        println!(
            "  transfer to dd: accuracy {:.4}, baseline {:.4}",
            run.report.accuracy, run.report.random_baseline
        );
        assert!(
            run.report.accuracy > run.report.random_baseline,
            "transfer accuracy {} not above baseline {}",
            run.report.accuracy,
            run.report.random_baseline
        );

        let random = random_orderer_correct(&run.test_set, 0xACCE37);
        let sig =
            paired_permutation_test(&run.report.correct, &random, 10_000, 0xACCE47, 0.05).unwrap();
        println!("  transfer: p-value vs random orderer {:.6}", sig.p_value);
        assert!(sig.p_value < 0.05, "p = {}", sig.p_value);
        assert!(sig.significant());
    });
}

#[test]
fn criterion_8_baseline_exactness() {
    criterion(8, "exact random baseline", || {
        let pair = |left: &[&str], right: &[&str]| Phrase {
            language: "xx".into(),
            noun: "n".into(),
            left: left.iter().map(|s| s.to_string()).collect(),
            right: right.iter().map(|s| s.to_string()).collect(),
            source_id: "b".into(),
        };

        // Pairs only (left or right): exactly one half.
        let pairs_only = vec![
            pair(&["a", "b"], &[]),
            pair(&[], &["c", "d"]),
            pair(&["e", "f"], &[]),
            pair(&[], &["g", "h"]),
        ];
        assert_eq!(random_baseline(&pairs_only).unwrap(), 0.5);

        // Mixed sides: mean of per-phrase products of 1/len!.
        let mixed = vec![
            pair(&["a", "b"], &[]),              // 1/2
            pair(&["a", "b", "c"], &[]),         // 1/6
            pair(&["a", "b"], &["c", "d"]),      // 1/4
            pair(&["a", "b"], &["c", "d", "e"]), // 1/12
        ];
        let expected = (0.5 + 1.0 / 6.0 + 0.25 + 1.0 / 12.0) / 4.0;
        let got = random_baseline(&mixed).unwrap();
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");

        // Singleton sides contribute factor 1.
        let with_singletons = vec![pair(&["a"], &["b", "c"]), pair(&["a", "b"], &["c"])];
        assert_eq!(random_baseline(&with_singletons).unwrap(), 0.5);
    });
}

#[test]
fn criterion_9_reproducibility() {
    criterion(9, "byte-identical reruns", || {
        let (corpora, tables) = transfer_world(0xACCE09);

        // Splits: same seed, same bytes.
        let spec = SplitSpec::token(TrainSize::Fraction(0.8), 0xACCE19);
        let s1 = split_by_token(&corpora["aa"], &spec).unwrap();
        let s2 = split_by_token(&corpora["aa"], &spec).unwrap();
        assert_eq!(
            sha256_bytes(&phrases_to_bytes(&s1.train)),
            sha256_bytes(&phrases_to_bytes(&s2.train))
        );
        assert_eq!(
            sha256_bytes(&phrases_to_bytes(&s1.test)),
            sha256_bytes(&phrases_to_bytes(&s2.test))
        );

        // Models: training twice writes identical files.
        let model_config = ModelConfig {
            num_classes: 15,
            dim: 30,
            w_mode: WMode::FixedTotalOrder,
            ..ModelConfig::default()
        };
        let train_config = TrainConfig {
            seed: 0xACCE29,
            ..TrainConfig::default()
        };
        let (p1, r1) = train(&s1.train, &tables, &model_config, &train_config).unwrap();
        let (p2, r2) = train(&s2.train, &tables, &model_config, &train_config).unwrap();
        let mut bytes1 = Vec::new();
        save_model(&p1, &mut bytes1).unwrap();
        let mut bytes2 = Vec::new();
        save_model(&p2, &mut bytes2).unwrap();
        assert_eq!(bytes1, bytes2);
        assert_eq!(r1.params_digest, r2.params_digest);

        // Full scenario artifacts, file by file.
        let spec = ScenarioSpec {
            name: ScenarioKind::Transfer,
            variant: Variant::Mf,
            train_languages: vec!["aa".into(), "bb".into(), "cc".into()],
            test_language: "dd".into(),
            per_language_train: 200,
            per_language_test: 80,
            dev_count: None,
            type_fraction: 0.9,
            pool_order: PoolOrder::Concatenate,
            seed: 0xACCE39,
            model: model_config,
            train: train_config,
        };
        let run1 = run_scenario(&spec, &corpora, &tables).unwrap();
        let run2 = run_scenario(&spec, &corpora, &tables).unwrap();
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        write_artifacts(&run1, dir1.path()).unwrap();
        write_artifacts(&run2, dir2.path()).unwrap();
        for name in ["model.json", "report.json", "metrics.jsonl"] {
            let a = std::fs::read(dir1.path().join(name)).unwrap();
            let b = std::fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
    });
}
