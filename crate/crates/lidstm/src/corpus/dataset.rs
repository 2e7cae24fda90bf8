//! Stratified fold assignment and the TSV dataset format.

use super::clean::clean_text;
use super::{CorpusError, LanguageSet, Sample};
use crate::fsutil::write_atomic;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// First line of every dataset TSV file.
pub const DATASET_HEADER: &str = "#lidstm-dataset v1";

/// A labeled corpus with a per-sample cross-validation fold assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldedDataset {
    samples: Vec<Sample>,
    folds: Vec<u8>,
    n_folds: usize,
    langs: LanguageSet,
}

impl FoldedDataset {
    /// Assigns each sample to one of `k` folds, stratified per language:
    /// within every language the fold sizes differ by at most one.
    /// Deterministic for a given seed.
    pub fn assign_folds(
        samples: Vec<Sample>,
        langs: LanguageSet,
        k: usize,
        seed: u64,
    ) -> Result<Self, CorpusError> {
        assert!(k >= 2, "need at least 2 folds");
        assert!(k <= u8::MAX as usize + 1, "fold index must fit in u8");
        let mut by_lang: Vec<Vec<usize>> = vec![Vec::new(); langs.len()];
        for (i, s) in samples.iter().enumerate() {
            assert!(s.lang < langs.len(), "sample language index out of range");
            by_lang[s.lang].push(i);
        }
        for (lang, members) in by_lang.iter().enumerate() {
            if members.len() < k {
                return Err(CorpusError::TooFewSamples {
                    code: langs.code(lang).unwrap_or("?").to_string(),
                    available: members.len(),
                    folds: k,
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut folds = vec![0u8; samples.len()];
        for members in &mut by_lang {
            members.shuffle(&mut rng);
            for (pos, &i) in members.iter().enumerate() {
                folds[i] = (pos % k) as u8;
            }
        }
        Ok(FoldedDataset {
            samples,
            folds,
            n_folds: k,
            langs,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.folds[i] as usize
    }

    pub fn languages(&self) -> &LanguageSet {
        &self.langs
    }

    /// Indices of samples outside fold `fold` (the training split).
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.samples.len())
            .filter(|&i| self.fold_of(i) != fold)
            .collect()
    }

    /// Indices of samples in fold `fold` (the held-out split).
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.samples.len())
            .filter(|&i| self.fold_of(i) == fold)
            .collect()
    }

    /// Sample counts per language, in class order.
    pub fn counts_by_language(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.langs.len()];
        for s in &self.samples {
            counts[s.lang] += 1;
        }
        counts
    }

    /// Writes the dataset as `<lang_code>\t<fold>\t<text>` records under the
    /// versioned header. The write is atomic.
    pub fn write_tsv(&self, path: &Path) -> Result<(), CorpusError> {
        write_atomic(path, |w| {
            writeln!(w, "{DATASET_HEADER}")?;
            for (s, &fold) in self.samples.iter().zip(&self.folds) {
                let code = self.langs.code(s.lang).expect("sample language in set");
                writeln!(w, "{code}\t{fold}\t{}", s.text)?;
            }
            Ok(())
        })
        .map_err(|source| CorpusError::FileUnwritable {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads a dataset TSV. The language set is reconstructed as the
    /// lexicographically sorted distinct codes in the file, so loading is
    /// deterministic regardless of record order.
    pub fn read_tsv(path: &Path) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path).map_err(|source| CorpusError::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        let mut lines = BufReader::new(file).lines().enumerate();

        let bad = |line: usize, reason: String| CorpusError::BadDatasetFormat {
            path: path.to_path_buf(),
            line: line + 1,
            reason,
        };
        let read_err = |source| CorpusError::FileUnreadable {
            path: path.to_path_buf(),
            source,
        };

        let header = match lines.next() {
            Some((_, line)) => line.map_err(read_err)?,
            None => return Err(bad(0, "empty file".into())),
        };
        if header.trim_end_matches('\r') != DATASET_HEADER {
            return Err(bad(0, format!("expected header {DATASET_HEADER:?}")));
        }

        let mut records: Vec<(String, u8, String)> = Vec::new();
        for (ln, line) in lines {
            let line = line.map_err(read_err)?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (code, fold, text) = match (parts.next(), parts.next(), parts.next()) {
                (Some(c), Some(f), Some(t)) => (c, f, t),
                _ => return Err(bad(ln, "expected 3 tab-separated fields".into())),
            };
            let fold: u8 = fold
                .parse()
                .map_err(|_| bad(ln, format!("bad fold index {fold:?}")))?;
            if text.is_empty() {
                return Err(bad(ln, "empty sample text".into()));
            }
            if text.chars().count() > super::MAX_SAMPLE_CHARS {
                return Err(bad(ln, "sample text longer than 50 characters".into()));
            }
            if clean_text(text) != text {
                return Err(bad(ln, "sample text is not in cleaned form".into()));
            }
            records.push((code.to_string(), fold, text.to_string()));
        }
        if records.is_empty() {
            return Err(bad(1, "dataset contains no records".into()));
        }

        let mut codes: Vec<String> = records.iter().map(|(c, _, _)| c.clone()).collect();
        codes.sort();
        codes.dedup();
        let langs = LanguageSet::new(codes).map_err(|e| bad(1, e.to_string()))?;

        let mut samples = Vec::with_capacity(records.len());
        let mut folds = Vec::with_capacity(records.len());
        let mut max_fold = 0u8;
        for (code, fold, text) in records {
            let lang = langs.index(&code).expect("code collected above");
            samples.push(Sample { text, lang });
            folds.push(fold);
            max_fold = max_fold.max(fold);
        }
        Ok(FoldedDataset {
            samples,
            folds,
            n_folds: max_fold as usize + 1,
            langs,
        })
    }
}

/// Keeps at most `cap` samples per language, chosen by a seeded draw;
/// surviving samples keep their original relative order.
pub fn cap_per_language(samples: Vec<Sample>, n_langs: usize, cap: usize, seed: u64) -> Vec<Sample> {
    let mut by_lang: Vec<Vec<usize>> = vec![Vec::new(); n_langs];
    for (i, s) in samples.iter().enumerate() {
        by_lang[s.lang].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![true; samples.len()];
    for members in &mut by_lang {
        if members.len() > cap {
            members.shuffle(&mut rng);
            for &i in &members[cap..] {
                keep[i] = false;
            }
        }
    }
    samples
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect()
}
