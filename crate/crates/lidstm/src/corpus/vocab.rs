//! Character vocabulary: dense indices with reserved PAD and UNK slots.

use super::CorpusError;
use std::collections::HashMap;

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

/// Maps characters to dense indices `2..V`; index 0 is PAD, index 1 is UNK.
/// Characters outside the vocabulary encode to UNK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from sample texts, keeping characters whose
    /// frequency is at least `min_count`, ordered by frequency descending
    /// then codepoint ascending.
    pub fn build<'a, I>(texts: I, min_count: usize) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut freq: HashMap<char, u64> = HashMap::new();
        let mut any_text = false;
        for text in texts {
            any_text = true;
            for c in text.chars() {
                *freq.entry(c).or_insert(0) += 1;
            }
        }
        if !any_text || freq.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut kept: Vec<(char, u64)> = freq
            .into_iter()
            .filter(|&(_, n)| n as usize >= min_count)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        Self::from_chars(kept.into_iter().map(|(c, _)| c).collect())
    }

    /// Rebuilds a vocabulary from an ordered character list (as stored in a
    /// model file). Characters must be unique.
    pub fn from_chars(chars: Vec<char>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(chars.len());
        for (i, &c) in chars.iter().enumerate() {
            if index.insert(c, i + 2).is_some() {
                return Err(CorpusError::DuplicateVocabChar(c));
            }
        }
        Ok(Vocabulary { chars, index })
    }

    /// Total number of indices, including PAD and UNK.
    pub fn size(&self) -> usize {
        self.chars.len() + 2
    }

    /// The kept characters in index order (index 2 first).
    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn encode_char(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(UNK_INDEX)
    }

    pub fn encode_text(&self, text: &str) -> Vec<usize> {
        text.chars().map(|c| self.encode_char(c)).collect()
    }

    /// The character at a real index; PAD, UNK, and out-of-range indices
    /// have no character.
    pub fn decode(&self, index: usize) -> Option<char> {
        if index < 2 {
            None
        } else {
            self.chars.get(index - 2).copied()
        }
    }
}
