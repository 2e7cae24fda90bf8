//! Model parameters, initialization, forward computation, and the binary
//! model file format.
//!
//! Architecture: character embedding → two stacked bidirectional LSTM layers
//! (separate parameters per layer and direction) → per-character linear head
//! → masked sum-pooling → softmax. Gate order within every `4·hidden` block
//! is input `i`, forget `f`, cell `g`, output `o`.

mod forward;
mod io;

pub use forward::{forward, lstm_cell, pool_and_predict, predict, softmax_in_place};
pub(crate) use forward::{forward_trace, pooled_from_trace, DirTrace};
pub use io::{load_model, save_model, FORMAT_VERSION, MAGIC};

use crate::corpus::{LanguageSet, Vocabulary};
use crate::float::Real;
use ndarray::{Array1, Array2};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

/// Architecture sizes. `num_layers` is fixed at 2 for this architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperParams {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub num_langs: usize,
    pub vocab_size: usize,
}

impl HyperParams {
    pub fn new(embed_dim: usize, hidden_dim: usize, num_langs: usize, vocab_size: usize) -> Self {
        HyperParams {
            embed_dim,
            hidden_dim,
            num_layers: 2,
            num_langs,
            vocab_size,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = self.embed_dim > 0
            && self.hidden_dim > 0
            && self.num_layers == 2
            && self.num_langs > 0
            && self.vocab_size >= 2;
        if ok {
            Ok(())
        } else {
            Err(ModelError::BadHyperParams(format!("{self:?}")))
        }
    }
}

/// Weights of one LSTM direction: `gates = W·x + U·h_prev + b`, with the
/// four gate blocks stacked as i, f, g, o along the first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmDirectionParams<F> {
    /// Input-to-gates matrix, `[4·hidden × input_dim]`.
    pub w: Array2<F>,
    /// Hidden-to-gates matrix, `[4·hidden × hidden]`.
    pub u: Array2<F>,
    /// Gate bias, `[4·hidden]`.
    pub b: Array1<F>,
}

impl<F: Real> LstmDirectionParams<F> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmDirectionParams {
            w: Array2::zeros((4 * hidden_dim, input_dim)),
            u: Array2::zeros((4 * hidden_dim, hidden_dim)),
            b: Array1::zeros(4 * hidden_dim),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }
}

/// All learnable tensors plus the vocabulary, language set, and sizes
/// needed to run the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    /// `[vocab_size × embed_dim]`; row 0 is PAD, all-zero and never updated.
    pub embedding: Array2<F>,
    pub layer1_fwd: LstmDirectionParams<F>,
    pub layer1_bwd: LstmDirectionParams<F>,
    pub layer2_fwd: LstmDirectionParams<F>,
    pub layer2_bwd: LstmDirectionParams<F>,
    /// `[num_langs × 2·hidden_dim]`.
    pub head_w: Array2<F>,
    /// `[num_langs]`.
    pub head_b: Array1<F>,
    pub vocab: Vocabulary,
    pub langs: LanguageSet,
    pub hyper: HyperParams,
}

/// Canonical tensor order used for serialization, optimizer state, and
/// gradient bookkeeping.
pub const TENSOR_NAMES: [&str; 15] = [
    "embedding",
    "layer1_fwd.W",
    "layer1_fwd.U",
    "layer1_fwd.b",
    "layer1_bwd.W",
    "layer1_bwd.U",
    "layer1_bwd.b",
    "layer2_fwd.W",
    "layer2_fwd.U",
    "layer2_fwd.b",
    "layer2_bwd.W",
    "layer2_bwd.U",
    "layer2_bwd.b",
    "head_W",
    "head_b",
];

/// expands the seven tensor groups of a params-shaped struct into the 15
/// canonically ordered flat slices. All arrays are standard (row-major)
/// layout by construction, so the slices always exist.
macro_rules! tensor_slices_impl {
    ($self:ident, $as_slice:ident) => {{
        [
            ("embedding", $self.embedding.$as_slice().unwrap()),
            ("layer1_fwd.W", $self.layer1_fwd.w.$as_slice().unwrap()),
            ("layer1_fwd.U", $self.layer1_fwd.u.$as_slice().unwrap()),
            ("layer1_fwd.b", $self.layer1_fwd.b.$as_slice().unwrap()),
            ("layer1_bwd.W", $self.layer1_bwd.w.$as_slice().unwrap()),
            ("layer1_bwd.U", $self.layer1_bwd.u.$as_slice().unwrap()),
            ("layer1_bwd.b", $self.layer1_bwd.b.$as_slice().unwrap()),
            ("layer2_fwd.W", $self.layer2_fwd.w.$as_slice().unwrap()),
            ("layer2_fwd.U", $self.layer2_fwd.u.$as_slice().unwrap()),
            ("layer2_fwd.b", $self.layer2_fwd.b.$as_slice().unwrap()),
            ("layer2_bwd.W", $self.layer2_bwd.w.$as_slice().unwrap()),
            ("layer2_bwd.U", $self.layer2_bwd.u.$as_slice().unwrap()),
            ("layer2_bwd.b", $self.layer2_bwd.b.$as_slice().unwrap()),
            ("head_W", $self.head_w.$as_slice().unwrap()),
            ("head_b", $self.head_b.$as_slice().unwrap()),
        ]
    }};
}
pub(crate) use tensor_slices_impl;

impl<F: Real> ModelParams<F> {
    /// The 15 parameter tensors as flat slices, in canonical order.
    pub fn tensor_slices(&self) -> [(&'static str, &[F]); 15] {
        tensor_slices_impl!(self, as_slice)
    }

    /// Mutable view of the 15 parameter tensors, in canonical order.
    pub fn tensor_slices_mut(&mut self) -> [(&'static str, &mut [F]); 15] {
        tensor_slices_impl!(self, as_slice_mut)
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.tensor_slices().iter().map(|(_, s)| s.len()).sum()
    }

    /// Casts every tensor to another float type (used to run the gradient
    /// check in `f64` on models that train in `f32`).
    pub fn cast<G: Real>(&self) -> ModelParams<G> {
        let conv2 = |a: &Array2<F>| a.mapv(|x| G::from_f64(x.to_f64()));
        let conv1 = |a: &Array1<F>| a.mapv(|x| G::from_f64(x.to_f64()));
        let dir = |d: &LstmDirectionParams<F>| LstmDirectionParams {
            w: conv2(&d.w),
            u: conv2(&d.u),
            b: conv1(&d.b),
        };
        ModelParams {
            embedding: conv2(&self.embedding),
            layer1_fwd: dir(&self.layer1_fwd),
            layer1_bwd: dir(&self.layer1_bwd),
            layer2_fwd: dir(&self.layer2_fwd),
            layer2_bwd: dir(&self.layer2_bwd),
            head_w: conv2(&self.head_w),
            head_b: conv1(&self.head_b),
            vocab: self.vocab.clone(),
            langs: self.langs.clone(),
            hyper: self.hyper,
        }
    }
}

/// A ranked probability distribution over the language set.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<F> {
    /// `probs[l]` is the probability of class `l`; sums to 1 within 1e-6.
    pub probs: Vec<F>,
    /// Class indices sorted by probability descending; ties break toward
    /// the lower index, making the order total and deterministic.
    pub ranked: Vec<usize>,
}

impl<F: Real> Prediction<F> {
    /// Builds a prediction from pooled logits: stable softmax plus ranking.
    pub fn from_pooled(mut pooled: Vec<F>) -> Self {
        softmax_in_place(&mut pooled);
        let mut ranked: Vec<usize> = (0..pooled.len()).collect();
        ranked.sort_by(|&a, &b| {
            pooled[b]
                .partial_cmp(&pooled[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        Prediction { probs: pooled, ranked }
    }

    /// The most probable class.
    pub fn argmax(&self) -> usize {
        self.ranked[0]
    }
}

/// Deterministic parameter initialization.
///
/// Weight matrices (`W`, `U`, `head_W`) draw from
/// `uniform(−1/√hidden_dim, +1/√hidden_dim)`; the embedding draws from
/// `uniform(−0.1, 0.1)` except the PAD row, which stays zero. Forget-gate
/// bias slices start at 1.0 (training stability), every other bias at 0.
/// All draws happen in `f64` in a fixed order, so a given seed produces the
/// same model for every float type up to rounding.
pub fn init_params<F: Real>(
    hyper: HyperParams,
    vocab: Vocabulary,
    langs: LanguageSet,
    seed: u64,
) -> ModelParams<F> {
    hyper.validate().expect("valid hyperparameters");
    assert_eq!(hyper.vocab_size, vocab.size(), "hyper/vocab size mismatch");
    assert_eq!(hyper.num_langs, langs.len(), "hyper/language count mismatch");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = hyper.hidden_dim;
    let scale = 1.0 / (h as f64).sqrt();
    let weight_dist = Uniform::new_inclusive(-scale, scale).expect("valid range");
    let embed_dist = Uniform::new_inclusive(-0.1, 0.1).expect("valid range");

    let draw_matrix = |rows: usize, cols: usize, dist: &Uniform<f64>, rng: &mut ChaCha8Rng, skip_first_row: bool| {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for _ in 0..cols {
                if r == 0 && skip_first_row {
                    data.push(F::zero());
                } else {
                    data.push(F::from_f64(dist.sample(rng)));
                }
            }
        }
        Array2::from_shape_vec((rows, cols), data).expect("row-major fill")
    };

    let embedding = draw_matrix(hyper.vocab_size, hyper.embed_dim, &embed_dist, &mut rng, true);

    let draw_direction = |input_dim: usize, rng: &mut ChaCha8Rng| {
        let w = draw_matrix(4 * h, input_dim, &weight_dist, rng, false);
        let u = draw_matrix(4 * h, h, &weight_dist, rng, false);
        let mut b = Array1::zeros(4 * h);
        b.slice_mut(ndarray::s![h..2 * h]).fill(F::one());
        LstmDirectionParams { w, u, b }
    };

    let layer1_fwd = draw_direction(hyper.embed_dim, &mut rng);
    let layer1_bwd = draw_direction(hyper.embed_dim, &mut rng);
    let layer2_fwd = draw_direction(2 * h, &mut rng);
    let layer2_bwd = draw_direction(2 * h, &mut rng);
    let head_w = draw_matrix(hyper.num_langs, 2 * h, &weight_dist, &mut rng, false);
    let head_b = Array1::zeros(hyper.num_langs);

    ModelParams {
        embedding,
        layer1_fwd,
        layer1_bwd,
        layer2_fwd,
        layer2_bwd,
        head_w,
        head_b,
        vocab,
        langs,
        hyper,
    }
}

/// Errors from model construction, inference, and (de)serialization.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid hyperparameters: {0}")]
    BadHyperParams(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("character index {index} out of range for vocabulary of size {vocab_size}")]
    IndexOutOfRange { index: usize, vocab_size: usize },
    #[error("every position is masked; nothing to pool")]
    AllMasked,
    #[error("text is empty after cleaning")]
    EmptyAfterCleaning,
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt model file: {0}")]
    CorruptPayload(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
