//! CoNLL-U parsing and multi-adjective noun phrase extraction.
//!
//! Universal Dependencies releases ship one file per treebank in the CoNLL-U
//! format: ten tab-separated columns per token, blank lines between
//! sentences, `#` comments. We read only ID, FORM, UPOS, HEAD and DEPREL,
//! then mine each sentence for nouns with a run of consecutive adjectives
//! immediately before and/or after them.
//!
//! [`Token`] is the adapter point for other corpus formats: anything that
//! can produce per-sentence token lists can feed [`extract_phrases`]
//! directly.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phrase::Phrase;

/// One syntactic word from a CoNLL-U sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// 1-based position within the sentence (the ID column).
    pub index: usize,
    /// Surface form.
    pub form: String,
    /// Universal POS tag, e.g. `ADJ`, `NOUN`.
    pub upos: String,
    /// Head token index; 0 means the sentence root.
    pub head: usize,
    /// Dependency relation to the head.
    pub deprel: String,
}

/// Knobs for phrase extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Require each adjective in a run to attach to the noun via `amod`.
    /// Useful for treebanks with reliable parses; turn off for web corpora
    /// where only the POS layer can be trusted.
    pub require_amod: bool,
    /// Minimum length of the longer side for a phrase to qualify.
    pub min_side: usize,
    /// Phrases with more total adjectives than this are dropped; very long
    /// runs are almost always tagging noise.
    pub max_total_adjectives: usize,
    /// Lowercase adjective and noun forms on extraction.
    pub lowercase: bool,
    /// Drop a phrase entirely when the same adjective form appears twice.
    pub drop_duplicate_adjectives: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            require_amod: true,
            min_side: 2,
            max_total_adjectives: 6,
            lowercase: true,
            drop_duplicate_adjectives: true,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_side < 2 {
            return Err(Error::Config("min_side must be >= 2".into()));
        }
        if self.max_total_adjectives < self.min_side {
            return Err(Error::Config(
                "max_total_adjectives must be >= min_side".into(),
            ));
        }
        Ok(())
    }
}

/// Parse a CoNLL-U document into one token list per sentence.
///
/// Multiword-token ranges (ID like `3-4`) and empty nodes (ID like `3.1`)
/// are skipped; they duplicate or annotate the syntactic words we keep.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<Vec<Token>>> {
    let mut sentences = Vec::new();
    let mut current: Vec<Token> = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;

        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Parse {
                kind: "conllu",
                line: line_no,
                msg: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }

        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            // Multiword-token range or empty node.
            continue;
        }
        let index: usize = id.parse().map_err(|_| Error::Parse {
            kind: "conllu",
            line: line_no,
            msg: format!("invalid token ID {id:?}"),
        })?;
        if index == 0 {
            return Err(Error::Parse {
                kind: "conllu",
                line: line_no,
                msg: "token ID must be >= 1".into(),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| Error::Parse {
            kind: "conllu",
            line: line_no,
            msg: format!("invalid HEAD {:?}", cols[6]),
        })?;

        current.push(Token {
            index,
            form: cols[1].to_string(),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

fn is_amod(deprel: &str) -> bool {
    deprel == "amod" || deprel.starts_with("amod:")
}

/// Extract multi-adjective noun phrases from parsed sentences.
///
/// A candidate is a `NOUN` token with a maximal run of consecutive `ADJ`
/// tokens immediately before it and/or immediately after it. Candidates
/// failing the side-length, total-count, duplicate, or (when configured)
/// `amod` attachment rules are silently dropped. Output order follows
/// sentence order, so extraction is deterministic.
pub fn extract_phrases(
    sentences: &[Vec<Token>],
    config: &ExtractionConfig,
    language: &str,
) -> Result<Vec<Phrase>> {
    config.validate()?;
    let mut phrases = Vec::new();

    for (sent_no, sentence) in sentences.iter().enumerate() {
        for (pos, token) in sentence.iter().enumerate() {
            if token.upos != "NOUN" {
                continue;
            }

            // Maximal adjective runs by surface adjacency.
            let mut left_start = pos;
            while left_start > 0 && sentence[left_start - 1].upos == "ADJ" {
                left_start -= 1;
            }
            let mut right_end = pos + 1;
            while right_end < sentence.len() && sentence[right_end].upos == "ADJ" {
                right_end += 1;
            }
            let left_run = &sentence[left_start..pos];
            let right_run = &sentence[pos + 1..right_end];

            if left_run.len().max(right_run.len()) < config.min_side {
                continue;
            }
            if left_run.len() + right_run.len() > config.max_total_adjectives {
                continue;
            }
            if config.require_amod
                && !left_run
                    .iter()
                    .chain(right_run)
                    .all(|adj| adj.head == token.index && is_amod(&adj.deprel))
            {
                continue;
            }

            let shape = |t: &Token| {
                if config.lowercase {
                    t.form.to_lowercase()
                } else {
                    t.form.clone()
                }
            };
            let left: Vec<String> = left_run.iter().map(shape).collect();
            let right: Vec<String> = right_run.iter().map(shape).collect();

            if config.drop_duplicate_adjectives {
                let mut seen: Vec<&str> = Vec::new();
                let mut duplicate = false;
                for adj in left.iter().chain(&right) {
                    if seen.contains(&adj.as_str()) {
                        duplicate = true;
                        break;
                    }
                    seen.push(adj);
                }
                if duplicate {
                    continue;
                }
            }

            phrases.push(Phrase {
                language: language.to_string(),
                noun: shape(token),
                left,
                right,
                source_id: format!("s{}:t{}", sent_no + 1, token.index),
            });
        }
    }
    Ok(phrases)
}
