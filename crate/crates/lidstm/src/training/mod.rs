//! Training: weighted cross-entropy on pooled logits, backpropagation
//! through time, AdamW, the epoch/batch loop, k-fold orchestration, and a
//! finite-difference gradient checker.

mod backward;
mod gradcheck;
mod loss;
mod optimizer;
mod trainer;

pub use backward::{backward, batch_loss, EncodedSample, Gradients};
pub use gradcheck::{run_gradcheck, GradcheckReport, GRADCHECK_TOLERANCE};
pub use loss::weighted_ce_loss;
pub use optimizer::{adamw_step, clip_gradients, OptimizerState};
pub use trainer::{cross_validate, train_fold, ArchConfig, CrossValOutcome, EpochStat, FoldResult};

use crate::corpus::CorpusError;
use crate::evaluation::EvalError;
use crate::model::ModelError;
use thiserror::Error;

/// Optimization settings. `Default` pins the reference setup: 25 epochs,
/// batches of 64, AdamW with lr 1e-3, β = (0.9, 0.999), eps 1e-8, weight
/// decay 0.01, gradient clipping at global norm 5.0.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Global L2 clipping threshold; `None` disables clipping.
    pub grad_clip_norm: Option<f64>,
    pub seed: u64,
    /// Worker threads for gradient accumulation within a batch. Results are
    /// deterministic for a fixed (seed, jobs) pair; bitwise identity with
    /// the sequential run is only guaranteed at `jobs = 1`.
    pub jobs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 25,
            batch_size: 64,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            grad_clip_norm: Some(5.0),
            seed: 42,
            jobs: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let ok = self.batch_size >= 1
            && self.lr > 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.weight_decay >= 0.0
            && self.grad_clip_norm.is_none_or(|n| n > 0.0)
            && self.jobs >= 1;
        if ok {
            Ok(())
        } else {
            Err(TrainError::BadConfig(format!("{self:?}")))
        }
    }
}

/// Per-class loss weights: `w_l = N_total / (num_langs · N_l)` over the
/// training split, i.e. inverse frequency normalized to mean 1 under the
/// class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    w: Vec<f64>,
}

impl ClassWeights {
    pub fn from_counts(counts: &[usize]) -> Result<Self, TrainError> {
        let total: usize = counts.iter().sum();
        let k = counts.len();
        let mut w = Vec::with_capacity(k);
        for (lang, &n) in counts.iter().enumerate() {
            if n == 0 {
                return Err(TrainError::EmptyClass { lang });
            }
            w.push(total as f64 / (k as f64 * n as f64));
        }
        Ok(ClassWeights { w })
    }

    /// Uniform weights (all 1.0).
    pub fn uniform(num_langs: usize) -> Self {
        ClassWeights {
            w: vec![1.0; num_langs],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn to_vec<F: crate::float::Real>(&self) -> Vec<F> {
        self.w.iter().map(|&x| F::from_f64(x)).collect()
    }
}

/// Errors raised by training.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("language {lang} has no samples in the training split")]
    EmptyClass { lang: usize },
    #[error("loss became non-finite in epoch {epoch} (divergence)")]
    NonFiniteLoss { epoch: usize },
    #[error("fold {fold} does not exist; dataset has {n_folds} folds")]
    NoSuchFold { fold: usize, n_folds: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
