//! Corpus readers: CoNLL-U treebanks and plain line-per-sentence files.

use super::clean::{clean_text, trim_sample, MAX_SAMPLE_CHARS};
use super::{CorpusError, Sample};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

/// Counters describing what an ingestion pass saw and kept.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    /// Sentences (CoNLL-U) or nonblank lines (line format) encountered.
    pub records: usize,
    /// Samples produced.
    pub kept: usize,
    /// Records whose text was empty after cleaning.
    pub dropped_empty: usize,
    /// CoNLL-U sentences skipped because a line violated the format.
    pub malformed: usize,
    /// CoNLL-U sentences without a `# text =` metadata line.
    pub missing_text: usize,
}

/// Samples plus ingestion counters for one input file.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub samples: Vec<Sample>,
    pub stats: IngestStats,
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = Result<String, std::io::Error>>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufReader::new(file).lines())
}

fn keep_cleaned(raw: &str, lang: usize, samples: &mut Vec<Sample>, stats: &mut IngestStats) {
    let cleaned = clean_text(raw);
    if cleaned.is_empty() {
        stats.dropped_empty += 1;
    } else {
        samples.push(Sample {
            text: trim_sample(&cleaned, MAX_SAMPLE_CHARS),
            lang,
        });
        stats.kept += 1;
    }
}

/// Reads a CoNLL-U file and produces one sample per sentence from its
/// `# text = ...` metadata line.
///
/// Sentences containing a line that violates the CoNLL-U comment/token
/// grammar are skipped and counted in `stats.malformed`; sentences without a
/// text metadata line are counted in `stats.missing_text`.
pub fn read_conllu(path: &Path, lang: usize) -> Result<IngestOutcome, CorpusError> {
    let mut samples = Vec::new();
    let mut stats = IngestStats::default();
    let mut block: Vec<String> = Vec::new();

    let finish_block = |block: &mut Vec<String>, samples: &mut Vec<Sample>, stats: &mut IngestStats| {
        if block.is_empty() {
            return;
        }
        stats.records += 1;
        if block.iter().any(|line| !is_valid_conllu_line(line)) {
            stats.malformed += 1;
        } else {
            match block.iter().find_map(|line| text_metadata(line)) {
                Some(raw) => keep_cleaned(&raw, lang, samples, stats),
                None => stats.missing_text += 1,
            }
        }
        block.clear();
    };

    for line in open_lines(path)? {
        let line = line.map_err(|source| CorpusError::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            finish_block(&mut block, &mut samples, &mut stats);
        } else {
            block.push(line.to_string());
        }
    }
    finish_block(&mut block, &mut samples, &mut stats);

    Ok(IngestOutcome { samples, stats })
}

/// Reads a plain-text corpus with one sentence per line. Blank lines are
/// skipped; lines that clean to nothing are counted in `dropped_empty`.
pub fn read_lines(path: &Path, lang: usize) -> Result<IngestOutcome, CorpusError> {
    let mut samples = Vec::new();
    let mut stats = IngestStats::default();
    for line in open_lines(path)? {
        let line = line.map_err(|source| CorpusError::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        stats.records += 1;
        keep_cleaned(line, lang, &mut samples, &mut stats);
    }
    Ok(IngestOutcome { samples, stats })
}

/// Extracts the raw sentence text from a `# text = ...` comment line.
fn text_metadata(line: &str) -> Option<String> {
    let rest = line.strip_prefix('#')?.trim_start();
    let rest = rest.strip_prefix("text")?.trim_start();
    let value = rest.strip_prefix('=')?;
    Some(value.trim().to_string())
}

/// A CoNLL-U line is a comment (`# ...`) or a token line: 10 tab-separated
/// fields whose ID field is an integer, an integer range `n-m`, or an empty
/// node ID `n.m`.
fn is_valid_conllu_line(line: &str) -> bool {
    if line.starts_with('#') {
        return true;
    }
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 10 || fields.iter().any(|f| f.is_empty()) {
        return false;
    }
    valid_token_id(fields[0])
}

fn valid_token_id(id: &str) -> bool {
    let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if all_digits(id) {
        return true;
    }
    for sep in ['-', '.'] {
        if let Some((a, b)) = id.split_once(sep) {
            return all_digits(a) && all_digits(b);
        }
    }
    false
}
