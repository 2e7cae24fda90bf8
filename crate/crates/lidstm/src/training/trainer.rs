//! The training loop: per-fold vocabulary and class weights, seeded epoch
//! shuffles, batched BPTT with clipping and AdamW, plus k-fold
//! cross-validation orchestration.

use super::backward::{backward, EncodedSample, Gradients};
use super::optimizer::{adamw_step, clip_gradients, OptimizerState};
use super::{ClassWeights, TrainConfig, TrainError};
use crate::corpus::{FoldedDataset, Vocabulary};
use crate::evaluation::{evaluate_model, EvalReport};
use crate::float::{Real, SubnormalFlushGuard};
use crate::model::{init_params, HyperParams, ModelParams};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

/// Architecture and vocabulary knobs that are fixed before training starts.
/// Defaults are the reference setup: 150/150 dimensions, rare characters
/// (seen fewer than 10 times) collapsed to UNK.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub min_count: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            embed_dim: 150,
            hidden_dim: 150,
            min_count: 10,
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.embed_dim >= 1 && self.hidden_dim >= 1 && self.min_count >= 1 {
            Ok(())
        } else {
            Err(TrainError::BadConfig(format!("{self:?}")))
        }
    }
}

/// One row of the loss trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStat {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean per-sample weighted loss over the epoch's training set.
    pub mean_loss: f64,
    /// Wall-clock seconds spent in this epoch.
    pub seconds: f64,
}

/// Everything produced for one cross-validation fold.
#[derive(Debug, Clone)]
pub struct FoldResult<F> {
    pub fold: usize,
    pub params: ModelParams<F>,
    pub trace: Vec<EpochStat>,
    pub report: EvalReport,
}

/// Per-fold results plus the sample-weighted aggregate report.
#[derive(Debug, Clone)]
pub struct CrossValOutcome<F> {
    pub folds: Vec<FoldResult<F>>,
    pub aggregate: EvalReport,
}

/// Distinguishes the shuffle stream from the init stream for a given seed.
const SHUFFLE_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Runs one batch's backward pass, optionally accumulating chunk gradients
/// in parallel. Chunks are contiguous and reduced in order, so the result is
/// deterministic for a fixed `(seed, jobs)` pair; `jobs = 1` is bitwise
/// identical to the plain sequential pass.
fn backward_batch<F: Real>(
    params: &ModelParams<F>,
    batch: &[&EncodedSample],
    weights: &[F],
    jobs: usize,
) -> (F, Gradients<F>) {
    if jobs <= 1 || batch.len() < 2 {
        return backward(params, batch, weights);
    }
    let n_chunks = jobs.min(batch.len());
    let chunk_size = batch.len().div_ceil(n_chunks);
    let results: Vec<(F, Gradients<F>, usize)> = batch
        .chunks(chunk_size)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|chunk| {
            let _flush = SubnormalFlushGuard::new();
            let (loss, grads) = backward(params, chunk, weights);
            (loss, grads, chunk.len())
        })
        .collect();
    let inv_total = 1.0 / batch.len() as f64;
    let mut total_grads = Gradients::zeros(&params.hyper);
    let mut total_loss = F::zero();
    for (loss, mut grads, len) in results {
        let share = F::from_f64(len as f64 * inv_total);
        grads.scale(share);
        total_grads.add_assign(&grads);
        total_loss += loss * share;
    }
    (total_loss, total_grads)
}

/// Trains a model on every sample *outside* `fold`.
///
/// The vocabulary and the class weights come from the training split only.
/// Each epoch shuffles the training set with a seeded RNG (stream derived
/// from `cfg.seed`), walks it in batches of `cfg.batch_size`, and applies
/// backward → clip → AdamW per batch. Returns the final parameters and the
/// per-epoch loss trace. `epochs = 0` returns the initialized model and an
/// empty trace.
pub fn train_fold<F: Real>(
    dataset: &FoldedDataset,
    fold: usize,
    cfg: &TrainConfig,
    arch: &ArchConfig,
) -> Result<(ModelParams<F>, Vec<EpochStat>), TrainError> {
    cfg.validate()?;
    arch.validate()?;
    if fold >= dataset.n_folds() {
        return Err(TrainError::NoSuchFold {
            fold,
            n_folds: dataset.n_folds(),
        });
    }
    let langs = dataset.languages().clone();
    let train_idx = dataset.train_indices(fold);

    let vocab = Vocabulary::build(
        train_idx.iter().map(|&i| dataset.samples()[i].text.as_str()),
        arch.min_count,
    )?;
    let mut counts = vec![0usize; langs.len()];
    for &i in &train_idx {
        counts[dataset.samples()[i].lang] += 1;
    }
    let weights = ClassWeights::from_counts(&counts)?;
    let weights_f: Vec<F> = weights.to_vec();

    let hyper = HyperParams::new(arch.embed_dim, arch.hidden_dim, langs.len(), vocab.size());
    let mut params: ModelParams<F> = init_params(hyper, vocab, langs, cfg.seed);

    let encoded: Vec<EncodedSample> = train_idx
        .iter()
        .map(|&i| {
            let sample = &dataset.samples()[i];
            EncodedSample {
                chars: params.vocab.encode_text(&sample.text),
                target: sample.lang,
            }
        })
        .collect();

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_SALT);
    let mut state = OptimizerState::new(&hyper);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let n = encoded.len();

    // Saturated models otherwise drown late epochs in subnormal arithmetic;
    // see the guard's documentation. Restored on return.
    let _flush = SubnormalFlushGuard::new();
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&EncodedSample> = chunk.iter().map(|&i| &encoded[i]).collect();
            let (loss, mut grads) = backward_batch(&params, &batch, &weights_f, cfg.jobs);
            loss_sum += loss.to_f64() * batch.len() as f64;
            clip_gradients(&mut grads, cfg.grad_clip_norm);
            adamw_step(&mut params, &grads, &mut state, cfg);
        }
        let mean_loss = loss_sum / n as f64;
        if !mean_loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        trace.push(EpochStat {
            epoch,
            mean_loss,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok((params, trace))
}

/// Trains and evaluates every fold, then aggregates the reports.
///
/// Fold `f` trains with seed `cfg.seed + f` and single-threaded gradient
/// accumulation, so each fold reproduces a standalone
/// `train_fold(dataset, f, …)` run with that seed exactly. `cfg.jobs`
/// controls how many *folds* run concurrently; results are independent of
/// the level of fold parallelism.
pub fn cross_validate<F: Real>(
    dataset: &FoldedDataset,
    cfg: &TrainConfig,
    arch: &ArchConfig,
    eval_len: usize,
) -> Result<CrossValOutcome<F>, TrainError> {
    cfg.validate()?;
    let fold_cfg = |fold: usize| TrainConfig {
        seed: cfg.seed.wrapping_add(fold as u64),
        jobs: 1,
        ..cfg.clone()
    };
    let run_fold = |fold: usize| -> Result<FoldResult<F>, TrainError> {
        let (params, trace) = train_fold(dataset, fold, &fold_cfg(fold), arch)?;
        let report = evaluate_model(&params, dataset, fold, eval_len)?;
        Ok(FoldResult {
            fold,
            params,
            trace,
            report,
        })
    };
    let folds: Vec<FoldResult<F>> = if cfg.jobs > 1 {
        (0..dataset.n_folds())
            .into_par_iter()
            .map(run_fold)
            .collect::<Result<_, _>>()?
    } else {
        (0..dataset.n_folds())
            .map(run_fold)
            .collect::<Result<_, _>>()?
    };
    let reports: Vec<EvalReport> = folds.iter().map(|f| f.report.clone()).collect();
    let aggregate = EvalReport::aggregate(&reports)?;
    Ok(CrossValOutcome { folds, aggregate })
}
