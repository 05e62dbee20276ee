//! Dictionary-based correction of recognized character strings.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_EDIT: usize = 2;

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    strsim::levenshtein(a, b)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    words: BTreeSet<String>,
    pub max_edit: usize,
}

impl Dictionary {
    /// Words are lowercased; blank entries are dropped.
    pub fn new<I, S>(words: I, max_edit: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> =
            words.into_iter().map(|w| w.as_ref().trim().to_lowercase()).filter(|w| !w.is_empty()).collect();
        if words.is_empty() {
            return Err(Error::InvalidDataset("dictionary is empty".into()));
        }
        Ok(Dictionary { words, max_edit })
    }

    /// One word per line, UTF-8.
    pub fn load(path: &Path, max_edit: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::new(text.lines(), max_edit)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, w: &str) -> bool {
        self.words.contains(w)
    }
}

/// Nearest dictionary word within `max_edit`, ties to the lexicographically
/// smallest. Returns the input and `-1` when nothing is close enough.
pub fn correct_word(chars: &str, dict: &Dictionary) -> (String, i64) {
    let mut best: Option<(usize, &str)> = None;
    // BTreeSet iterates in lexicographic order, so strict `<` keeps the smallest tie.
    for w in dict.words() {
        let d = edit_distance(chars, w);
        if d <= dict.max_edit && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, w));
            if d == 0 {
                break;
            }
        }
    }
    match best {
        Some((d, w)) => (w.to_string(), d as i64),
        None => (chars.to_string(), -1),
    }
}

/// Exact-match fraction.
pub fn word_accuracy<A: AsRef<str>, B: AsRef<str>>(pred: &[A], truth: &[B]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p.as_ref() == t.as_ref()).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert_eq!(edit_distance("a", "a"), 0);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("ანა", "ან"), 1);
    }

    #[test]
    fn correction_examples() {
        let d = Dictionary::new(["cat", "car"], 2).unwrap();
        assert_eq!(correct_word("cat", &d), ("cat".into(), 0));
        assert_eq!(correct_word("cap", &d), ("car".into(), 1));
        assert_eq!(correct_word("elephant", &d), ("elephant".into(), -1));
        assert!(Dictionary::new(["", "  "], 2).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(word_accuracy(&["a", "b"], &["a", "b"]).unwrap(), 1.0);
        assert_eq!(word_accuracy(&["a", "b"], &["c", "d"]).unwrap(), 0.0);
        assert_eq!(word_accuracy(&["a", "b"], &["a", "d"]).unwrap(), 0.5);
        assert!(word_accuracy(&["a"], &["a", "b"]).is_err());
    }
}
