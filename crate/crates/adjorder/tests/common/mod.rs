//! Shared test support: an independent brute-force oracle for the
//! permutation marginals, planted-model corpus generators, and a synthetic
//! English-like treebank in CoNLL-U format.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use adjorder::embeddings::EmbeddingTable;
use adjorder::Phrase;

// ---------------------------------------------------------------------------
// Brute-force oracle

/// Every permutation of `0..m`, built by straightforward backtracking; kept
/// deliberately separate from the library's permutation machinery.
pub fn all_permutations(m: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; m], &mut out);
    out
}

/// Reference probability of `observed` computed naively in probability
/// space: enumerate every class assignment, weight by the product of
/// per-adjective softmax posteriors, normalize scores over all
/// permutations, and sum. `v` has one row of length `d` per class; `w` is
/// `classes x classes`.
pub fn oracle_side_log_prob(
    embeddings: &[Vec<f64>],
    observed: &[usize],
    v: &[Vec<f64>],
    w: &[Vec<f64>],
) -> f64 {
    let m = embeddings.len();
    let num_classes = v.len();

    let posteriors: Vec<Vec<f64>> = embeddings
        .iter()
        .map(|e| {
            let logits: Vec<f64> = v
                .iter()
                .map(|row| row.iter().zip(e).map(|(a, b)| a * b).sum())
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            exps.into_iter().map(|x| x / z).collect()
        })
        .collect();

    let perms = all_permutations(m);
    let score = |perm: &[usize], assignment: &[usize]| -> f64 {
        (0..m - 1)
            .map(|t| w[assignment[perm[t]]][assignment[perm[t + 1]]])
            .sum()
    };

    let mut total = 0.0;
    let mut assignment = vec![0usize; m];
    'outer: loop {
        let weight: f64 = (0..m).map(|i| posteriors[i][assignment[i]]).product();
        let z: f64 = perms.iter().map(|p| score(p, &assignment).exp()).sum();
        total += weight * score(observed, &assignment).exp() / z;

        let mut i = 0;
        loop {
            assignment[i] += 1;
            if assignment[i] < num_classes {
                break;
            }
            assignment[i] = 0;
            i += 1;
            if i == m {
                break 'outer;
            }
        }
    }
    total.ln()
}

// ---------------------------------------------------------------------------
// Planted-model corpora

/// A vocabulary whose words carry known latent classes, embedded near
/// per-class prototype vectors in a shared space.
pub struct PlantedLanguage {
    pub language: String,
    pub table: EmbeddingTable,
    /// word -> true class index.
    pub classes: BTreeMap<String, usize>,
}

/// Orthonormal class prototypes (random vectors run through Gram-Schmidt);
/// shared across languages to emulate an aligned embedding space with
/// well-separated classes. Requires `dim >= num_classes`.
pub fn class_prototypes(num_classes: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim >= num_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prototypes: Vec<Vec<f64>> = Vec::with_capacity(num_classes);
    while prototypes.len() < num_classes {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for prev in &prototypes {
            let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (x, p) in v.iter_mut().zip(prev) {
                *x -= dot * p;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        prototypes.push(v.into_iter().map(|x| x / norm).collect());
    }
    prototypes
}

pub fn planted_language(
    language: &str,
    prototypes: &[Vec<f64>],
    words_per_class: usize,
    noise: f64,
    seed: u64,
) -> PlantedLanguage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = prototypes[0].len();
    let mut entries = Vec::new();
    let mut classes = BTreeMap::new();
    for (c, proto) in prototypes.iter().enumerate() {
        for k in 0..words_per_class {
            let word = format!("{language}_c{c}w{k}");
            let vector: Vec<f64> = proto
                .iter()
                .map(|&p| p + noise * rng.gen_range(-1.0..1.0))
                .collect();
            classes.insert(word.clone(), c);
            entries.push((word, vector));
        }
    }
    PlantedLanguage {
        language: language.to_string(),
        table: EmbeddingTable::from_entries(language, dim, entries).unwrap(),
        classes,
    }
}

/// Which side of the noun a generated corpus puts its adjectives on.
#[derive(Clone, Copy, PartialEq)]
pub enum SideStyle {
    Prenominal,
    Postnominal,
}

/// Generate phrases whose gold order follows the planted total order:
/// ascending class left of the noun, descending (noun-adjacent highest)
/// right of it. A `scramble` fraction of phrases is ordered uniformly at
/// random instead, making the corpus noisy like real text.
pub fn planted_phrases(
    lang: &PlantedLanguage,
    style: SideStyle,
    count: usize,
    triple_fraction: f64,
    scramble: f64,
    seed: u64,
) -> Vec<Phrase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<usize, Vec<&String>> = BTreeMap::new();
    for (word, &class) in &lang.classes {
        by_class.entry(class).or_default().push(word);
    }
    let class_ids: Vec<usize> = by_class.keys().copied().collect();

    (0..count)
        .map(|i| {
            let k = if rng.gen::<f64>() < triple_fraction {
                3
            } else {
                2
            };
            // Distinct classes, then one word from each.
            let mut chosen: Vec<usize> = Vec::new();
            while chosen.len() < k {
                let c = class_ids[rng.gen_range(0..class_ids.len())];
                if !chosen.contains(&c) {
                    chosen.push(c);
                }
            }
            chosen.sort_unstable();
            let mut words: Vec<String> = chosen
                .iter()
                .map(|c| {
                    let pool = &by_class[c];
                    pool[rng.gen_range(0..pool.len())].clone()
                })
                .collect();

            if style == SideStyle::Postnominal {
                // Noun-adjacent first means descending class order.
                words.reverse();
            }
            if rng.gen::<f64>() < scramble {
                for t in (1..words.len()).rev() {
                    words.swap(t, rng.gen_range(0..=t));
                }
            }

            let (left, right) = match style {
                SideStyle::Prenominal => (words, Vec::new()),
                SideStyle::Postnominal => (Vec::new(), words),
            };
            Phrase {
                language: lang.language.clone(),
                noun: "noun".into(),
                left,
                right,
                source_id: format!("{}:{}", lang.language, i),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Synthetic English-like treebank

const VALUE: &[&str] = &[
    "nice",
    "lovely",
    "beautiful",
    "ugly",
    "good",
    "bad",
    "wonderful",
    "awful",
    "fine",
    "great",
];
const SIZE: &[&str] = &[
    "big", "small", "large", "tiny", "huge", "little", "massive", "short", "tall", "long",
];
const SHAPE: &[&str] = &[
    "round", "square", "flat", "oval", "curved", "narrow", "wide", "thin", "thick", "pointed",
];
const COLOR: &[&str] = &[
    "red", "blue", "green", "black", "white", "yellow", "brown", "grey", "pink", "orange",
];
const PROVENANCE: &[&str] = &[
    "french", "italian", "chinese", "german", "spanish", "russian", "english", "japanese",
    "polish", "dutch",
];
const NOUNS: &[&str] = &[
    "dog", "house", "table", "car", "shirt", "book", "chair", "city", "garden", "road", "door",
    "lamp", "street", "wall", "box", "cup", "hat", "coat", "boat", "tree",
];
/// Adjectives used in sentences but deliberately left out of the embedding
/// table, to exercise vocabulary filtering.
const OOV_ADJECTIVES: &[&str] = &["quixotic", "zany"];

pub fn hierarchy_classes() -> Vec<&'static [&'static str]> {
    vec![VALUE, SIZE, SHAPE, COLOR, PROVENANCE]
}

fn conllu_token(id: usize, form: &str, upos: &str, head: usize, deprel: &str) -> String {
    format!("{id}\t{form}\t{form}\t{upos}\t_\t_\t{head}\t{deprel}\t_\t_\n")
}

/// A synthetic English-like treebank whose multi-adjective noun phrases
/// follow a value < size < shape < color < provenance hierarchy, with a
/// small scrambled fraction, filler sentences, occasional out-of-vocabulary
/// adjectives, and some deliberately junky sentences (seven-adjective runs,
/// duplicated adjectives). Returns the CoNLL-U text and the matching
/// embedding table text (adjectives only, class-prototype based).
pub fn synth_english_treebank(multi_adj_sentences: usize, seed: u64) -> (String, String) {
    let classes = hierarchy_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conllu = String::new();
    let mut sentence_no = 0usize;

    let mut push_np_sentence = |adjectives: &[&str], noun: &str, conllu: &mut String| {
        sentence_no += 1;
        conllu.push_str(&format!("# sent_id = synth-{sentence_no}\n"));
        let noun_id = adjectives.len() + 2;
        conllu.push_str(&conllu_token(1, "the", "DET", noun_id, "det"));
        for (i, adj) in adjectives.iter().enumerate() {
            conllu.push_str(&conllu_token(i + 2, adj, "ADJ", noun_id, "amod"));
        }
        conllu.push_str(&conllu_token(noun_id, noun, "NOUN", 0, "root"));
        conllu.push_str(&conllu_token(noun_id + 1, ".", "PUNCT", noun_id, "punct"));
        conllu.push('\n');
    };

    for _ in 0..multi_adj_sentences {
        let k = if rng.gen::<f64>() < 0.25 { 3 } else { 2 };
        let mut class_ids: Vec<usize> = Vec::new();
        while class_ids.len() < k {
            let c = rng.gen_range(0..classes.len());
            if !class_ids.contains(&c) {
                class_ids.push(c);
            }
        }
        class_ids.sort_unstable();
        let mut adjectives: Vec<&str> = class_ids
            .iter()
            .map(|&c| classes[c][rng.gen_range(0..classes[c].len())])
            .collect();
        // A slice of real-corpus noise: scrambled orders and OOV words.
        if rng.gen::<f64>() < 0.08 {
            for t in (1..adjectives.len()).rev() {
                adjectives.swap(t, rng.gen_range(0..=t));
            }
        }
        if rng.gen::<f64>() < 0.03 {
            let slot = rng.gen_range(0..adjectives.len());
            adjectives[slot] = OOV_ADJECTIVES[rng.gen_range(0..OOV_ADJECTIVES.len())];
        }
        let noun = NOUNS[rng.gen_range(0..NOUNS.len())];
        push_np_sentence(&adjectives, noun, &mut conllu);

        // Interleave filler sentences without usable phrases.
        if rng.gen::<f64>() < 0.25 {
            let adj = classes[rng.gen_range(0..classes.len())][0];
            let noun = NOUNS[rng.gen_range(0..NOUNS.len())];
            push_np_sentence(&[adj], noun, &mut conllu);
        }
    }

    // Junk the extractor must drop: a seven-adjective run and a duplicate.
    push_np_sentence(
        &["big", "red", "nice", "flat", "french", "tall", "round"],
        "box",
        &mut conllu,
    );
    push_np_sentence(&["red", "red"], "door", &mut conllu);

    // Embedding table: class prototype plus per-word noise, 50 dimensions.
    let dim = 50;
    let prototypes = class_prototypes(classes.len(), dim, seed ^ 0x5eed);
    let mut vec_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xeeed);
    let mut rows = Vec::new();
    for (c, class_words) in classes.iter().enumerate() {
        for word in class_words.iter() {
            let vector: Vec<String> = prototypes[c]
                .iter()
                .map(|&p| format!("{}", p + 0.1 * vec_rng.gen_range(-1.0..1.0)))
                .collect();
            rows.push(format!("{word} {}", vector.join(" ")));
        }
    }
    let vec_text = format!("{} {dim}\n{}\n", rows.len(), rows.join("\n"));

    (conllu, vec_text)
}
