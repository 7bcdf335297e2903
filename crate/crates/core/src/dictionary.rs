//! Word lists used for usernames and sentences.
//!
//! Lists are UTF-8 text, one entry per line. Blank lines and lines starting
//! with `#` are skipped; surrounding whitespace is trimmed.

use std::path::Path;

use crate::error::{Error, Result};

const USERNAMES: &str = include_str!("../data/usernames.txt");
const WORDS: &str = include_str!("../data/words.txt");

/// Names that resolve to a list compiled into the binary.
pub const BUNDLED: &[&str] = &["usernames", "words"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordList {
    pub name: String,
    words: Vec<String>,
}

impl WordList {
    pub fn new(name: impl Into<String>, words: Vec<String>) -> Result<Self> {
        let name = name.into();
        if words.is_empty() {
            return Err(Error::config(format!("word list `{name}` is empty")));
        }
        Ok(Self { name, words })
    }

    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_owned)
            .collect();
        Self::new(name, words)
    }

    pub fn bundled(name: &str) -> Option<Self> {
        let text = match name {
            "usernames" => USERNAMES,
            "words" => WORDS,
            _ => return None,
        };
        Some(Self::parse(name, text).expect("bundled word list is non-empty"))
    }

    /// Resolve a dictionary reference: a bundled list name, or a file path
    /// interpreted relative to `base_dir`.
    pub fn resolve(reference: &str, base_dir: Option<&Path>) -> Result<Self> {
        if let Some(list) = Self::bundled(reference) {
            return Ok(list);
        }
        let path = match base_dir {
            Some(dir) => dir.join(reference),
            None => Path::new(reference).to_path_buf(),
        };
        let text = std::fs::read_to_string(&path).map_err(|e| {
            Error::config(format!("cannot read word list `{}`: {e}", path.display()))
        })?;
        Self::parse(reference, &text)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.iter().any(|w| w == word)
    }
}
