//! Aligned word-embedding tables in the word2vec/fastText text format.
//!
//! The text format starts with a `count dim` header line; every following
//! line is a word and `dim` space-separated components. Tables for several
//! languages aligned in one vector space let a single model order adjectives
//! across languages. Vectors are stored as `f64` after parse; words absent
//! from a table are misses, never imputed.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::phrase::Phrase;

/// Word vectors for one language.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    language: String,
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
    duplicates_ignored: usize,
}

impl EmbeddingTable {
    /// Build a table from explicit entries; every vector must have `dim`
    /// components. Duplicate words keep their first vector.
    pub fn from_entries(
        language: &str,
        dim: usize,
        entries: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self> {
        let mut table = EmbeddingTable {
            language: language.to_string(),
            dim,
            entries: HashMap::new(),
            duplicates_ignored: 0,
        };
        for (word, vector) in entries {
            table.insert(word, vector)?;
        }
        Ok(table)
    }

    fn insert(&mut self, word: String, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        match self.entries.entry(word) {
            std::collections::hash_map::Entry::Occupied(_) => self.duplicates_ignored += 1,
            std::collections::hash_map::Entry::Vacant(slot) => {
                slot.insert(vector);
            }
        }
        Ok(())
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// How many later duplicates of already-seen words were ignored on load.
    pub fn duplicates_ignored(&self) -> usize {
        self.duplicates_ignored
    }

    /// Look up a word; a miss is `None`, never a default vector.
    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    /// Lookup that promotes a miss to an error.
    pub fn require(&self, word: &str) -> Result<&[f64]> {
        self.lookup(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))
    }
}

/// Load a table from the text format, keeping at most `limit` entries.
///
/// The header's count is advisory (real files are occasionally off by a
/// few); rows are read until EOF or `limit`. A row whose component count
/// disagrees with the header dimension is an error naming that line.
pub fn load_embeddings<R: BufRead>(
    reader: R,
    language: &str,
    limit: Option<usize>,
) -> Result<EmbeddingTable> {
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        kind: "embeddings",
        line: 1,
        msg: "empty file, expected `count dim` header".into(),
    })?;
    let header = header?;
    let mut parts = header.split_whitespace();
    let count: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse {
            kind: "embeddings",
            line: 1,
            msg: format!("bad header {header:?}, expected `count dim`"),
        })?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse {
            kind: "embeddings",
            line: 1,
            msg: format!("bad header {header:?}, expected `count dim`"),
        })?;

    let capacity = limit.map_or(count, |l| l.min(count));
    let mut table = EmbeddingTable {
        language: language.to_string(),
        dim,
        entries: HashMap::with_capacity(capacity),
        duplicates_ignored: 0,
    };

    for (i, line) in lines {
        if let Some(limit) = limit {
            if table.len() >= limit {
                break;
            }
        }
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line has a first field");
        let mut vector = Vec::with_capacity(dim);
        for field in fields {
            let value: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    kind: "embeddings",
                    line: line_no,
                    msg: format!("bad component {field:?} for word {word:?}"),
                })?;
            vector.push(value);
        }
        if vector.len() != dim {
            return Err(Error::Parse {
                kind: "embeddings",
                line: line_no,
                msg: format!(
                    "word {word:?} has {} components, header says {dim}",
                    vector.len()
                ),
            });
        }
        table.insert(word.to_string(), vector)?;
    }

    Ok(table)
}

/// Keep exactly the phrases whose every adjective is in its language's table.
///
/// The noun is never embedded, so it is not required to be in vocabulary.
/// Output preserves input order. A phrase whose language has no table is an
/// error; an out-of-vocabulary adjective just drops the phrase.
pub fn filter_phrases_by_vocab(
    phrases: &[Phrase],
    tables: &BTreeMap<String, EmbeddingTable>,
) -> Result<Vec<Phrase>> {
    let mut kept = Vec::new();
    for phrase in phrases {
        let table = tables
            .get(&phrase.language)
            .ok_or_else(|| Error::MissingTable(phrase.language.clone()))?;
        if phrase.adjectives().all(|adj| table.contains(adj)) {
            kept.push(phrase.clone());
        }
    }
    Ok(kept)
}
