//! The phrase record: one noun with its ordered adjective sequences.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One noun together with the adjectives that modify it, tagged by language.
///
/// `left` holds prenominal adjectives in surface order, leftmost first, so
/// the last element is adjacent to the noun. `right` holds postnominal
/// adjectives in surface order, so the first element is adjacent to the noun.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phrase {
    /// ISO language code, e.g. `"en"`.
    pub language: String,
    pub noun: String,
    pub left: Vec<String>,
    pub right: Vec<String>,
    /// Document/sentence locator for provenance.
    pub source_id: String,
}

impl Phrase {
    /// Total number of adjectives across both sides.
    pub fn total_adjectives(&self) -> usize {
        self.left.len() + self.right.len()
    }

    /// Iterate over all adjectives, left side first.
    pub fn adjectives(&self) -> impl Iterator<Item = &str> {
        self.left
            .iter()
            .chain(self.right.iter())
            .map(String::as_str)
    }

    /// True when at least one side is long enough to carry ordering signal.
    pub fn has_scorable_side(&self) -> bool {
        self.left.len() >= 2 || self.right.len() >= 2
    }
}

/// Read phrases from a line-delimited JSON stream, one record per line.
pub fn read_phrases<R: BufRead>(reader: R) -> Result<Vec<Phrase>> {
    let mut phrases = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let phrase: Phrase = serde_json::from_str(&line).map_err(|e| Error::Parse {
            kind: "phrase",
            line: i + 1,
            msg: e.to_string(),
        })?;
        phrases.push(phrase);
    }
    Ok(phrases)
}

/// Write phrases as line-delimited JSON, one record per line.
pub fn write_phrases<W: Write>(mut writer: W, phrases: &[Phrase]) -> Result<()> {
    for phrase in phrases {
        serde_json::to_writer(&mut writer, phrase)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Serialize phrases to the line-delimited form as bytes (used for digests).
pub fn phrases_to_bytes(phrases: &[Phrase]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_phrases(&mut buf, phrases).expect("writing to Vec cannot fail");
    buf
}
