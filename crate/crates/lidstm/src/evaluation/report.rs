//! Report files: versioned metrics JSON plus confusion-count, thresholded
//! confusion-percentage, and per-language CSVs. Floats are written with
//! Rust's shortest round-trip formatting, so parsing a file recovers the
//! exact values.

use super::{thresholded_display, ConfusionMatrix, EvalError, EvalReport};
use crate::corpus::LanguageSet;
use crate::fsutil::write_atomic;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Schema tag carried by every metrics JSON document.
pub const REPORT_SCHEMA: &str = "lidstm-report/1";

/// The serialized form of an [`EvalReport`]'s metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub schema: String,
    pub n: u64,
    pub acc: AccDoc,
    pub weighted_f1: f64,
    pub macro_f1: f64,
    pub per_language: Vec<PerLanguageDoc>,
}

/// Top-k accuracies keyed `"1"`, `"3"`, `"5"` in the JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccDoc {
    #[serde(rename = "1")]
    pub at1: f64,
    #[serde(rename = "3")]
    pub at3: f64,
    #[serde(rename = "5")]
    pub at5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerLanguageDoc {
    pub code: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

impl MetricsDoc {
    pub fn from_report(report: &EvalReport, langs: &LanguageSet) -> MetricsDoc {
        let per_language = report
            .per_language
            .iter()
            .enumerate()
            .map(|(class, scores)| PerLanguageDoc {
                code: langs.code(class).unwrap_or("??").to_string(),
                precision: scores.precision,
                recall: scores.recall,
                f1: scores.f1,
                support: scores.support,
            })
            .collect();
        MetricsDoc {
            schema: REPORT_SCHEMA.to_string(),
            n: report.n_samples,
            acc: AccDoc {
                at1: report.acc1,
                at3: report.acc3,
                at5: report.acc5,
            },
            weighted_f1: report.weighted_f1,
            macro_f1: report.macro_f1,
            per_language,
        }
    }
}

/// Destination paths for one report's four files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub metrics_json: PathBuf,
    pub confusion_csv: PathBuf,
    pub confusion_pct_csv: PathBuf,
    pub per_language_csv: PathBuf,
}

impl ReportPaths {
    /// `<dir>/<stem>.metrics.json`, `<dir>/<stem>.confusion.csv`, …
    pub fn with_stem(dir: &Path, stem: &str) -> ReportPaths {
        ReportPaths {
            metrics_json: dir.join(format!("{stem}.metrics.json")),
            confusion_csv: dir.join(format!("{stem}.confusion.csv")),
            confusion_pct_csv: dir.join(format!("{stem}.confusion_pct.csv")),
            per_language_csv: dir.join(format!("{stem}.per_language.csv")),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the metrics JSON document (pretty-printed, newline-terminated).
pub fn write_metrics_json(
    report: &EvalReport,
    langs: &LanguageSet,
    path: &Path,
) -> Result<(), EvalError> {
    let doc = MetricsDoc::from_report(report, langs);
    let body = serde_json::to_string_pretty(&doc).expect("report serializes");
    write_atomic(path, |w| {
        w.write_all(body.as_bytes())?;
        w.write_all(b"\n")
    })
    .map_err(io_err(path))
}

fn write_confusion_csv<T: std::fmt::Display>(
    matrix: &Array2<T>,
    langs: &LanguageSet,
    path: &Path,
) -> Result<(), EvalError> {
    write_atomic(path, |w| {
        write!(w, "lang")?;
        for code in langs.codes() {
            write!(w, ",{code}")?;
        }
        writeln!(w)?;
        for (i, row) in matrix.rows().into_iter().enumerate() {
            write!(w, "{}", langs.code(i).unwrap_or("??"))?;
            for value in row {
                write!(w, ",{value}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
    .map_err(io_err(path))
}

fn write_per_language_csv(
    report: &EvalReport,
    langs: &LanguageSet,
    path: &Path,
) -> Result<(), EvalError> {
    write_atomic(path, |w| {
        writeln!(w, "code,precision,recall,f1,support")?;
        for (class, scores) in report.per_language.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                langs.code(class).unwrap_or("??"),
                scores.precision,
                scores.recall,
                scores.f1,
                scores.support
            )?;
        }
        Ok(())
    })
    .map_err(io_err(path))
}

/// Writes all four report files: metrics JSON, raw confusion counts,
/// thresholded percentages (1.0 display threshold), and per-language scores.
pub fn emit_report(
    report: &EvalReport,
    langs: &LanguageSet,
    paths: &ReportPaths,
) -> Result<(), EvalError> {
    assert_eq!(
        langs.len(),
        report.confusion.num_langs(),
        "language set must match the report"
    );
    write_metrics_json(report, langs, &paths.metrics_json)?;
    write_confusion_csv(report.confusion.counts(), langs, &paths.confusion_csv)?;
    let pct = thresholded_display(&report.confusion, 1.0);
    write_confusion_csv(&pct, langs, &paths.confusion_pct_csv)?;
    write_per_language_csv(report, langs, &paths.per_language_csv)
}

/// Parses a metrics JSON document, checking the schema tag.
pub fn load_metrics_json(path: &Path) -> Result<MetricsDoc, EvalError> {
    let body = std::fs::read_to_string(path).map_err(io_err(path))?;
    let doc: MetricsDoc = serde_json::from_str(&body)
        .map_err(|e| EvalError::BadReport(format!("{}: {e}", path.display())))?;
    if doc.schema != REPORT_SCHEMA {
        return Err(EvalError::BadReport(format!(
            "{}: unsupported schema {:?}",
            path.display(),
            doc.schema
        )));
    }
    Ok(doc)
}

/// Parses a confusion-count CSV back into codes and a matrix.
pub fn load_confusion_csv(path: &Path) -> Result<(Vec<String>, ConfusionMatrix), EvalError> {
    let bad = |reason: String| EvalError::BadReport(format!("{}: {reason}", path.display()));
    let body = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = body.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let mut fields = header.split(',');
    if fields.next() != Some("lang") {
        return Err(bad("header must start with 'lang'".into()));
    }
    let codes: Vec<String> = fields.map(str::to_string).collect();
    let k = codes.len();
    let mut counts = Array2::zeros((k, k));
    for (i, line) in lines.enumerate() {
        if i >= k {
            return Err(bad(format!("more than {k} data rows")));
        }
        let mut fields = line.split(',');
        let row_code = fields.next().unwrap_or_default();
        if row_code != codes[i] {
            return Err(bad(format!(
                "row {i} is labeled {row_code:?}, expected {:?}",
                codes[i]
            )));
        }
        let mut parsed = 0;
        for (j, field) in fields.enumerate() {
            if j >= k {
                return Err(bad(format!("row {i} has more than {k} columns")));
            }
            counts[[i, j]] = field
                .parse::<u64>()
                .map_err(|e| bad(format!("row {i}, column {j}: {e}")))?;
            parsed += 1;
        }
        if parsed != k {
            return Err(bad(format!("row {i} has {parsed} columns, expected {k}")));
        }
    }
    Ok((codes, ConfusionMatrix::from_counts(counts)?))
}
