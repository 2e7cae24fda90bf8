//! Finite-difference gradient verification on a tiny double-precision model.
//!
//! Every analytic gradient coordinate is compared against a central
//! difference of the batch loss. The check runs through exactly the same
//! generic forward/backward code as production training — only the float
//! type (f64) and the sizes are scaled down.

use super::backward::{backward, batch_loss, EncodedSample};
use crate::corpus::{LanguageSet, Vocabulary};
use crate::float::Real;
use crate::model::{init_params, HyperParams, ModelParams, TENSOR_NAMES};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Maximum tolerated relative error between analytic and numeric gradients.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// Central-difference step size.
const FD_STEP: f64 = 1e-5;

/// Outcome of one gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    /// Largest relative error over all parameter coordinates.
    pub max_rel_err: f64,
    /// Tensor holding the worst coordinate.
    pub worst_tensor: &'static str,
    /// Flat index of the worst coordinate within its tensor.
    pub worst_index: usize,
    /// Analytic gradient at the worst coordinate.
    pub analytic: f64,
    /// Finite-difference gradient at the worst coordinate.
    pub numeric: f64,
    /// Number of coordinates checked (every parameter).
    pub n_checked: usize,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < GRADCHECK_TOLERANCE
    }
}

/// Builds the fixed tiny model (vocab 12, dims 8/8, 3 languages) and a
/// deterministic batch of four short samples, lengths 1–6, drawn from the
/// given seed. Character draws include UNK but never PAD.
fn tiny_setup(seed: u64) -> (ModelParams<f64>, Vec<EncodedSample>, Vec<f64>) {
    let vocab = Vocabulary::build(["abcdefghij"], 1).expect("tiny vocab");
    let langs = LanguageSet::new(["en", "fi", "tr"]).expect("tiny language set");
    let hyper = HyperParams::new(8, 8, 3, vocab.size());
    let vocab_size = vocab.size();
    let params = init_params(hyper, vocab, langs, seed);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_CAFE_F00D_BEEF);
    let batch = (0..4)
        .map(|_| {
            let len = rng.random_range(1..=6);
            EncodedSample {
                chars: (0..len).map(|_| rng.random_range(1..vocab_size)).collect(),
                target: rng.random_range(0..3),
            }
        })
        .collect();
    (params, batch, vec![0.7, 1.0, 1.3])
}

/// Relative error with a floor on the denominator, so coordinates where both
/// gradients are (numerically) zero score 0 instead of noise/0.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6)
}

/// Compares analytic gradients against central finite differences over every
/// parameter of the tiny model. With `inject_fault` the sign of the largest
/// analytic gradient coordinate is flipped first — the resulting report must
/// fail, which proves the checker can detect a broken gradient.
pub fn run_gradcheck(seed: u64, inject_fault: bool) -> GradcheckReport {
    let (mut params, batch, weights) = tiny_setup(seed);
    let batch_refs: Vec<&EncodedSample> = batch.iter().collect();

    let (_, mut grads) = backward(&params, &batch_refs, &weights);
    if inject_fault {
        let mut worst = (0usize, 0usize, 0.0f64);
        for (tensor, (_, sl)) in grads.tensor_slices().into_iter().enumerate() {
            for (i, &g) in sl.iter().enumerate() {
                if g.abs() > worst.2 {
                    worst = (tensor, i, g.abs());
                }
            }
        }
        let (tensor, index, _) = worst;
        let slot = &mut grads.tensor_slices_mut()[tensor].1[index];
        *slot = -*slot;
    }

    let mut report = GradcheckReport {
        max_rel_err: 0.0,
        worst_tensor: TENSOR_NAMES[0],
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        n_checked: 0,
    };
    for (tensor, &tensor_name) in TENSOR_NAMES.iter().enumerate() {
        let len = grads.tensor_slices()[tensor].1.len();
        for i in 0..len {
            let original = params.tensor_slices()[tensor].1[i];
            params.tensor_slices_mut()[tensor].1[i] = original + FD_STEP;
            let plus = batch_loss(&params, &batch_refs, &weights).to_f64();
            params.tensor_slices_mut()[tensor].1[i] = original - FD_STEP;
            let minus = batch_loss(&params, &batch_refs, &weights).to_f64();
            params.tensor_slices_mut()[tensor].1[i] = original;

            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let analytic = grads.tensor_slices()[tensor].1[i];
            let err = rel_err(analytic, numeric);
            report.n_checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_tensor = tensor_name;
                report.worst_index = i;
                report.analytic = analytic;
                report.numeric = numeric;
            }
        }
    }
    report
}
