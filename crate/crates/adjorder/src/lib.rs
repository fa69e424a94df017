//! Corpus-driven multilingual adjective ordering.
//!
//! This crate trains and evaluates a latent-class model of adjective order.
//! Each adjective is softly assigned to one of a small set of latent classes
//! from its word embedding, and an interaction matrix scores consecutive
//! class pairs in a candidate order. The interaction matrix may be learned or
//! fixed to a total order of classes, and prenominal and postnominal
//! adjectives are scored by separate matrices so the model covers languages
//! on both sides of the noun.
//!
//! The pipeline end to end:
//!
//! * [`conllu`] parses Universal Dependencies treebanks and extracts
//!   multi-adjective noun phrases.
//! * [`embeddings`] loads aligned word-vector tables and filters phrases to
//!   the embedding vocabulary.
//! * [`dataset`] splits phrase corpora by token or by adjective type, with
//!   seeded, reproducible sampling.
//! * [`model`] scores permutations, marginalizes over latent classes, and
//!   predicts orders.
//! * [`training`] fits parameters by batch gradient descent on the negative
//!   log-likelihood of observed orders.
//! * [`evaluation`] measures accuracy against exact random baselines and runs
//!   paired permutation significance tests.
//! * [`scenario`] orchestrates mono-lingual, transfer, and joint experiments.
//!
//! The `adjorder` command-line tool in this workspace wires these modules
//! together; the book under `book/` walks through the concepts with runnable
//! snippets.

pub mod conllu;
pub mod dataset;
pub mod embeddings;
mod error;
pub mod evaluation;
pub mod manifest;
pub mod mat;
pub mod model;
pub mod phrase;
pub mod scenario;
pub mod training;

pub use error::{Error, Result};
pub use mat::Mat;
pub use phrase::Phrase;

// Book chapters double as doc-tests so the guide cannot drift from the API.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(model, "../../../book/src/model.md");
    chapter!(total_order, "../../../book/src/total_order.md");
    chapter!(treebanks, "../../../book/src/treebanks.md");
    chapter!(embeddings, "../../../book/src/embeddings.md");
    chapter!(datasets, "../../../book/src/datasets.md");
    chapter!(training, "../../../book/src/training.md");
    chapter!(evaluation, "../../../book/src/evaluation.md");
    chapter!(scenarios, "../../../book/src/scenarios.md");
    chapter!(cli, "../../../book/src/cli.md");
}
