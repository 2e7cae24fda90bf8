//! Corpus handling: cleaning, ingestion, vocabulary, and fold assignment.

mod clean;
mod dataset;
mod ingest;
mod vocab;

pub use clean::{clean_text, make_eval_string, trim_sample, MAX_SAMPLE_CHARS};
pub use dataset::{cap_per_language, FoldedDataset, DATASET_HEADER};
pub use ingest::{read_conllu, read_lines, IngestOutcome, IngestStats};
pub use vocab::{Vocabulary, PAD_INDEX, UNK_INDEX};

use std::path::PathBuf;
use thiserror::Error;

/// One training/evaluation example: cleaned, trimmed text plus the class
/// index of its language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub text: String,
    pub lang: usize,
}

/// The ordered set of language codes the identifier distinguishes.
///
/// The ordering is fixed at construction, defines class indices everywhere
/// (datasets, model head, confusion matrices), and is preserved through
/// serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageSet {
    codes: Vec<String>,
}

/// The 20 default language codes, in class order.
pub const DEFAULT_LANGUAGES: [&str; 20] = [
    "ca", "cs", "da", "de", "en", "es", "et", "fi", "fr", "hr", "hu", "it", "lt", "nl", "no",
    "pl", "pt", "ro", "sv", "tr",
];

impl LanguageSet {
    /// Builds a language set from codes, preserving the given order.
    /// Codes must be unique, two lowercase ASCII letters each.
    pub fn new<I, S>(codes: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let codes: Vec<String> = codes.into_iter().map(Into::into).collect();
        if codes.is_empty() {
            return Err(CorpusError::EmptyLanguageSet);
        }
        for code in &codes {
            let ok = code.len() == 2 && code.bytes().all(|b| b.is_ascii_lowercase());
            if !ok {
                return Err(CorpusError::BadLanguageCode(code.clone()));
            }
        }
        let mut seen = codes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != codes.len() {
            return Err(CorpusError::DuplicateLanguageCode);
        }
        Ok(LanguageSet { codes })
    }

    /// The default 20-language set.
    pub fn default_set() -> Self {
        LanguageSet::new(DEFAULT_LANGUAGES).expect("default codes are valid")
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn code(&self, class: usize) -> Option<&str> {
        self.codes.get(class).map(String::as_str)
    }

    /// Class index for a code, or `None` if the code is not in the set.
    pub fn index(&self, code: &str) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }
}

/// Errors produced by corpus construction and dataset I/O.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("language set must not be empty")]
    EmptyLanguageSet,
    #[error("bad language code {0:?}: expected two lowercase ASCII letters")]
    BadLanguageCode(String),
    #[error("duplicate language code in language set")]
    DuplicateLanguageCode,
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    FileUnwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    BadDatasetFormat {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("language {code:?} has {available} samples, fewer than {folds} folds")]
    TooFewSamples {
        code: String,
        available: usize,
        folds: usize,
    },
    #[error("corpus is empty after cleaning; cannot build a vocabulary")]
    EmptyCorpus,
    #[error("duplicate character {0:?} in vocabulary")]
    DuplicateVocabChar(char),
    #[error("sample shorter than evaluation length {eval_len}: {chars} chars")]
    SampleTooShort { chars: usize, eval_len: usize },
}
