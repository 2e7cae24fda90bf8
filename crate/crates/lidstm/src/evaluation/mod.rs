//! Metrics over ranked predictions: accuracy at k, weighted/macro/micro F1,
//! confusion matrices with a display threshold, cluster confusion mass, and
//! machine-readable report files.

mod report;

pub use report::{
    emit_report, load_confusion_csv, load_metrics_json, write_metrics_json, AccDoc, MetricsDoc,
    PerLanguageDoc, ReportPaths, REPORT_SCHEMA,
};

use crate::corpus::{make_eval_string, CorpusError, FoldedDataset};
use crate::float::Real;
use crate::model::{predict, ModelError, ModelParams, Prediction};
use ndarray::Array2;
use std::path::PathBuf;
use thiserror::Error;

/// Row = true language, column = predicted (argmax) language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Array2<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_langs: usize) -> Self {
        ConfusionMatrix {
            counts: Array2::zeros((num_langs, num_langs)),
        }
    }

    pub fn record(&mut self, true_lang: usize, predicted: usize) {
        self.counts[[true_lang, predicted]] += 1;
    }

    pub fn num_langs(&self) -> usize {
        self.counts.nrows()
    }

    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn from_counts(counts: Array2<u64>) -> Result<Self, EvalError> {
        if counts.nrows() != counts.ncols() {
            return Err(EvalError::BadReport(format!(
                "confusion matrix must be square, got {}×{}",
                counts.nrows(),
                counts.ncols()
            )));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_langs()).map(|i| self.counts[[i, i]]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.rows().into_iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        self.counts.columns().into_iter().map(|c| c.iter().sum()).collect()
    }

    /// Element-wise accumulation; both matrices must have the same shape.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.num_langs(), other.num_langs());
        self.counts += &other.counts;
    }
}

/// Per-language precision, recall, F1, and true-label count.
#[derive(Debug, Clone, PartialEq)]
pub struct LangScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// All metrics for one evaluation run (or an aggregate across folds).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub acc1: f64,
    pub acc3: f64,
    pub acc5: f64,
    pub weighted_f1: f64,
    pub macro_f1: f64,
    pub per_language: Vec<LangScores>,
    pub n_samples: u64,
}

impl EvalReport {
    /// Builds the full report from ranked predictions and gold labels.
    pub fn from_predictions<F: Real>(
        predictions: &[Prediction<F>],
        targets: &[usize],
        num_langs: usize,
    ) -> Result<EvalReport, EvalError> {
        if predictions.is_empty() || predictions.len() != targets.len() {
            return Err(EvalError::EmptyEvaluation);
        }
        let mut confusion = ConfusionMatrix::new(num_langs);
        for (pred, &target) in predictions.iter().zip(targets) {
            confusion.record(target, pred.argmax());
        }
        let acc1 = acc_at_k(predictions, targets, 1)?;
        let acc3 = acc_at_k(predictions, targets, 3)?;
        let acc5 = acc_at_k(predictions, targets, 5)?;
        assert!(
            acc1 <= acc3 && acc3 <= acc5,
            "top-k accuracy must be monotone in k: {acc1} / {acc3} / {acc5}"
        );
        let (weighted_f1, macro_f1, per_language) = f1_scores(&confusion);
        Ok(EvalReport {
            n_samples: predictions.len() as u64,
            confusion,
            acc1,
            acc3,
            acc5,
            weighted_f1,
            macro_f1,
            per_language,
        })
    }

    pub fn acc_at(&self, k: usize) -> Option<f64> {
        match k {
            1 => Some(self.acc1),
            3 => Some(self.acc3),
            5 => Some(self.acc5),
            _ => None,
        }
    }

    /// Combines per-fold reports: scalar metrics become sample-weighted
    /// means, confusion counts are summed, and the per-language table is
    /// recomputed from the pooled confusion.
    pub fn aggregate(reports: &[EvalReport]) -> Result<EvalReport, EvalError> {
        let first = reports.first().ok_or(EvalError::EmptyEvaluation)?;
        let k = first.confusion.num_langs();
        let mut confusion = ConfusionMatrix::new(k);
        let mut n_total = 0u64;
        let mut acc = [0.0f64; 5]; // acc1, acc3, acc5, weighted_f1, macro_f1
        for r in reports {
            if r.confusion.num_langs() != k {
                return Err(EvalError::BadReport(format!(
                    "cannot aggregate reports over {} and {} languages",
                    k,
                    r.confusion.num_langs()
                )));
            }
            confusion.merge(&r.confusion);
            let n = r.n_samples as f64;
            n_total += r.n_samples;
            for (slot, value) in acc
                .iter_mut()
                .zip([r.acc1, r.acc3, r.acc5, r.weighted_f1, r.macro_f1])
            {
                *slot += n * value;
            }
        }
        if n_total == 0 {
            return Err(EvalError::EmptyEvaluation);
        }
        let n = n_total as f64;
        let (_, _, per_language) = f1_scores(&confusion);
        Ok(EvalReport {
            confusion,
            acc1: acc[0] / n,
            acc3: acc[1] / n,
            acc5: acc[2] / n,
            weighted_f1: acc[3] / n,
            macro_f1: acc[4] / n,
            per_language,
            n_samples: n_total,
        })
    }
}

/// Fraction of samples whose target appears among the top `k` ranked
/// classes. Ties were already broken deterministically when the
/// `Prediction` was built.
pub fn acc_at_k<F: Real>(
    predictions: &[Prediction<F>],
    targets: &[usize],
    k: usize,
) -> Result<f64, EvalError> {
    assert!(k >= 1, "k must be at least 1");
    if predictions.is_empty() || predictions.len() != targets.len() {
        return Err(EvalError::EmptyEvaluation);
    }
    let hits = predictions
        .iter()
        .zip(targets)
        .filter(|(pred, &target)| pred.ranked.iter().take(k).any(|&c| c == target))
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Per-language precision (`diag/colsum`), recall (`diag/rowsum`), and F1
/// (harmonic mean; 0 when the denominators vanish), plus the weighted
/// (by true-label counts) and unweighted (macro) means of the F1s.
pub fn f1_scores(confusion: &ConfusionMatrix) -> (f64, f64, Vec<LangScores>) {
    let k = confusion.num_langs();
    let rows = confusion.row_sums();
    let cols = confusion.col_sums();
    let total: u64 = rows.iter().sum();
    let mut per_language = Vec::with_capacity(k);
    let mut macro_sum = 0.0;
    let mut weighted_sum = 0.0;
    for l in 0..k {
        let diag = confusion.counts()[[l, l]] as f64;
        let precision = if cols[l] > 0 { diag / cols[l] as f64 } else { 0.0 };
        let recall = if rows[l] > 0 { diag / rows[l] as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        macro_sum += f1;
        weighted_sum += rows[l] as f64 * f1;
        per_language.push(LangScores {
            precision,
            recall,
            f1,
            support: rows[l],
        });
    }
    let macro_f1 = if k > 0 { macro_sum / k as f64 } else { 0.0 };
    let weighted_f1 = if total > 0 { weighted_sum / total as f64 } else { 0.0 };
    (weighted_f1, macro_f1, per_language)
}

/// `trace / total`: the multiclass micro-averaged F1, which equals top-1
/// accuracy (every false positive is exactly one other class's false
/// negative).
pub fn micro_f1(confusion: &ConfusionMatrix) -> f64 {
    let total = confusion.total();
    if total == 0 {
        0.0
    } else {
        confusion.trace() as f64 / total as f64
    }
}

/// Row-normalized percentages with small values suppressed for display:
/// entries strictly below `threshold` (percent) become 0. Raw counts are
/// never modified. Rows with no samples stay all zero.
pub fn thresholded_display(confusion: &ConfusionMatrix, threshold: f64) -> Array2<f64> {
    let k = confusion.num_langs();
    let rows = confusion.row_sums();
    let mut pct = Array2::zeros((k, k));
    for i in 0..k {
        if rows[i] == 0 {
            continue;
        }
        for j in 0..k {
            let value = 100.0 * confusion.counts()[[i, j]] as f64 / rows[i] as f64;
            pct[[i, j]] = if value < threshold { 0.0 } else { value };
        }
    }
    pct
}

/// Of all misclassifications whose true language is in `group`, the fraction
/// predicted as some *other* member of `group` (within-group confusion
/// mass). Defined as 0 when the group members have no errors at all.
pub fn confusion_cluster_score(
    confusion: &ConfusionMatrix,
    group: &[usize],
) -> Result<f64, EvalError> {
    let k = confusion.num_langs();
    let mut seen = vec![false; k];
    for &g in group {
        if g >= k {
            return Err(EvalError::BadGroup(format!(
                "language index {g} out of range for {k} languages"
            )));
        }
        if seen[g] {
            return Err(EvalError::BadGroup(format!("duplicate language index {g}")));
        }
        seen[g] = true;
    }
    if group.len() < 2 {
        return Err(EvalError::BadGroup(
            "a confusion group needs at least two languages".into(),
        ));
    }
    let mut in_group = 0u64;
    let mut total_errors = 0u64;
    for &i in group {
        for (j, &j_in_group) in seen.iter().enumerate() {
            if j == i {
                continue;
            }
            let c = confusion.counts()[[i, j]];
            total_errors += c;
            if j_in_group {
                in_group += c;
            }
        }
    }
    if total_errors == 0 {
        Ok(0.0)
    } else {
        Ok(in_group as f64 / total_errors as f64)
    }
}

/// Evaluates a model on one fold's fixed-length strings.
///
/// Test samples shorter than `eval_len` are skipped (they are training-only
/// material); every remaining sample is truncated to exactly `eval_len`
/// characters before prediction. The dataset's language set must match the
/// model's exactly.
pub fn evaluate_model<F: Real>(
    params: &ModelParams<F>,
    dataset: &FoldedDataset,
    fold: usize,
    eval_len: usize,
) -> Result<EvalReport, EvalError> {
    if params.langs != *dataset.languages() {
        return Err(EvalError::LanguageSetMismatch {
            model: params.langs.codes().to_vec(),
            dataset: dataset.languages().codes().to_vec(),
        });
    }
    if fold >= dataset.n_folds() {
        return Err(EvalError::NoSuchFold {
            fold,
            n_folds: dataset.n_folds(),
        });
    }
    let mut predictions = Vec::new();
    let mut targets = Vec::new();
    for idx in dataset.test_indices(fold) {
        let sample = &dataset.samples()[idx];
        let eval_text = match make_eval_string(&sample.text, eval_len) {
            Ok(text) => text,
            Err(CorpusError::SampleTooShort { .. }) => continue,
            Err(other) => return Err(EvalError::Corpus(other)),
        };
        predictions.push(predict(params, &eval_text)?);
        targets.push(sample.lang);
    }
    EvalReport::from_predictions(&predictions, &targets, params.langs.len())
}

/// Default evaluation string length.
pub const EVAL_LEN_DEFAULT: usize = 10;

/// Errors from metric computation, model evaluation, and report files.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("nothing to evaluate (no predictions)")]
    EmptyEvaluation,
    #[error("model languages {model:?} do not match dataset languages {dataset:?}")]
    LanguageSetMismatch {
        model: Vec<String>,
        dataset: Vec<String>,
    },
    #[error("fold {fold} does not exist; dataset has {n_folds} folds")]
    NoSuchFold { fold: usize, n_folds: usize },
    #[error("invalid confusion group: {0}")]
    BadGroup(String),
    #[error("malformed report file: {0}")]
    BadReport(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
