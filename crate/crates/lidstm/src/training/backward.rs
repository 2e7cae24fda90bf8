//! Reverse-mode differentiation of the full model: sum pooling, linear head,
//! both directions of both LSTM layers (backpropagation through time), and
//! the embedding rows touched by the batch.

use super::loss::weighted_ce_loss;
use crate::corpus::PAD_INDEX;
use crate::float::Real;
use crate::model::{
    forward_trace, pooled_from_trace, tensor_slices_impl, DirTrace, HyperParams,
    LstmDirectionParams, ModelParams,
};
use ndarray::linalg::{general_mat_mul, general_mat_vec_mul};
use ndarray::{s, Array1, Array2, ArrayView2, Axis};

/// One training sample after cleaning and encoding: real character indices
/// (never PAD) and the target language index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSample {
    pub chars: Vec<usize>,
    pub target: usize,
}

/// Gradient tensors, one per model parameter tensor, in the canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<F> {
    pub embedding: Array2<F>,
    pub layer1_fwd: LstmDirectionParams<F>,
    pub layer1_bwd: LstmDirectionParams<F>,
    pub layer2_fwd: LstmDirectionParams<F>,
    pub layer2_bwd: LstmDirectionParams<F>,
    pub head_w: Array2<F>,
    pub head_b: Array1<F>,
}

impl<F: Real> Gradients<F> {
    pub fn zeros(hyper: &HyperParams) -> Self {
        let (d, h, k) = (hyper.embed_dim, hyper.hidden_dim, hyper.num_langs);
        Gradients {
            embedding: Array2::zeros((hyper.vocab_size, d)),
            layer1_fwd: LstmDirectionParams::zeros(d, h),
            layer1_bwd: LstmDirectionParams::zeros(d, h),
            layer2_fwd: LstmDirectionParams::zeros(2 * h, h),
            layer2_bwd: LstmDirectionParams::zeros(2 * h, h),
            head_w: Array2::zeros((k, 2 * h)),
            head_b: Array1::zeros(k),
        }
    }

    /// The 15 gradient tensors as flat slices, in canonical order (matching
    /// `ModelParams::tensor_slices`).
    pub fn tensor_slices(&self) -> [(&'static str, &[F]); 15] {
        tensor_slices_impl!(self, as_slice)
    }

    pub fn tensor_slices_mut(&mut self) -> [(&'static str, &mut [F]); 15] {
        tensor_slices_impl!(self, as_slice_mut)
    }

    /// Element-wise accumulation: `self += other`.
    pub fn add_assign(&mut self, other: &Gradients<F>) {
        for ((_, a), (_, b)) in self.tensor_slices_mut().into_iter().zip(other.tensor_slices()) {
            debug_assert_eq!(a.len(), b.len());
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Multiplies every entry by `factor`.
    pub fn scale(&mut self, factor: F) {
        for (_, sl) in self.tensor_slices_mut() {
            for x in sl {
                *x *= factor;
            }
        }
    }

    /// Global squared L2 norm over all tensors, accumulated in `f64`.
    pub fn squared_norm(&self) -> f64 {
        self.tensor_slices()
            .into_iter()
            .map(|(_, sl)| {
                sl.iter()
                    .map(|&x| {
                        let v = x.to_f64();
                        v * v
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Mean per-sample weighted loss over a batch, without gradients. Used for
/// finite-difference checks and frozen-model loss audits; follows exactly the
/// same forward path as [`backward`].
pub fn batch_loss<F: Real>(params: &ModelParams<F>, batch: &[&EncodedSample], weights: &[F]) -> F {
    assert!(!batch.is_empty(), "batch_loss needs a nonempty batch");
    let total: F = batch
        .iter()
        .map(|sample| {
            let trace = forward_trace(params, &sample.chars);
            let pooled = pooled_from_trace(params, &trace);
            weighted_ce_loss(&pooled, sample.target, weights[sample.target]).0
        })
        .sum();
    total / F::from_f64(batch.len() as f64)
}

/// Pre-transposed recurrence matrices, built once per batch so the per-step
/// `Uᵀ·da` products read contiguous rows.
struct TransposedUs<F> {
    l1f: Array2<F>,
    l1b: Array2<F>,
    l2f: Array2<F>,
    l2b: Array2<F>,
}

impl<F: Real> TransposedUs<F> {
    fn new(params: &ModelParams<F>) -> Self {
        TransposedUs {
            l1f: params.layer1_fwd.u.t().to_owned(),
            l1b: params.layer1_bwd.u.t().to_owned(),
            l2f: params.layer2_fwd.u.t().to_owned(),
            l2b: params.layer2_bwd.u.t().to_owned(),
        }
    }
}

/// Backpropagation through time for one direction of one layer.
///
/// `ext` carries dL/dh_t from above (head or next layer), `[T × H]`. The
/// recurrent state gradients flow opposite to the processing order: the
/// forward direction is unrolled from the last position to the first, the
/// reverse direction from the first to the last. Weight gradients accumulate
/// into `g`; the return value is dL/dinput, `[T × input_dim]`.
fn bptt_dir<F: Real>(
    p: &LstmDirectionParams<F>,
    u_t: &Array2<F>,
    tr: &DirTrace<F>,
    input: ArrayView2<F>,
    ext: ArrayView2<F>,
    reverse: bool,
    g: &mut LstmDirectionParams<F>,
) -> Array2<F> {
    let t_len = input.nrows();
    let h_dim = p.hidden_dim();
    debug_assert_eq!(ext.dim(), (t_len, h_dim));
    debug_assert_eq!(tr.gates.dim(), (t_len, 4 * h_dim));

    // Pre-activation gradients for every position; filled in backprop order,
    // consumed by the closing matrix products.
    let mut da: Array2<F> = Array2::zeros((t_len, 4 * h_dim));
    let mut dh_rec: Array1<F> = Array1::zeros(h_dim);
    let mut dc_rec: Vec<F> = vec![F::zero(); h_dim];

    let steps: Vec<usize> = if reverse {
        (0..t_len).collect()
    } else {
        (0..t_len).rev().collect()
    };
    let prev_of = |t: usize| -> Option<usize> {
        if reverse {
            (t + 1 < t_len).then_some(t + 1)
        } else {
            t.checked_sub(1)
        }
    };

    for &t in &steps {
        let gates_row = tr.gates.row(t);
        let gr = gates_row.to_slice().expect("contiguous gates row");
        let (gi, rest) = gr.split_at(h_dim);
        let (gf, rest) = rest.split_at(h_dim);
        let (gg, go) = rest.split_at(h_dim);
        let tc = tr.tanh_c.row(t);
        let tcs = tc.to_slice().expect("contiguous tanh_c row");
        let c_prev = prev_of(t).map(|p_idx| tr.c.row(p_idx).to_slice().expect("contiguous c row"));
        let ext_row = ext.row(t);

        {
            let mut da_row = da.row_mut(t);
            let das = da_row.as_slice_mut().expect("contiguous da row");
            let (da_i, rest) = das.split_at_mut(h_dim);
            let (da_f, rest) = rest.split_at_mut(h_dim);
            let (da_g, da_o) = rest.split_at_mut(h_dim);
            let one = F::one();
            for j in 0..h_dim {
                let (i, f, gcell, o) = (gi[j], gf[j], gg[j], go[j]);
                let tc_j = tcs[j];
                let dh = ext_row[j] + dh_rec[j];
                let dc = dh * o * (one - tc_j * tc_j) + dc_rec[j];
                da_o[j] = dh * tc_j * o * (one - o);
                da_i[j] = dc * gcell * i * (one - i);
                da_f[j] = match c_prev {
                    Some(cp) => dc * cp[j] * f * (one - f),
                    // The first processed step has zero previous cell state.
                    None => F::zero(),
                };
                da_g[j] = dc * i * (one - gcell * gcell);
                dc_rec[j] = dc * f;
            }
        }
        // dL/dh_prev = Uᵀ · da_t, consumed by the next processed position.
        general_mat_vec_mul(F::one(), u_t, &da.row(t), F::zero(), &mut dh_rec);
    }

    // Hidden states seen as "previous" by each position (zeros at the
    // sequence boundary), for the dU product.
    let mut h_prev = Array2::zeros((t_len, h_dim));
    for t in 0..t_len {
        if let Some(p_idx) = prev_of(t) {
            h_prev.row_mut(t).assign(&tr.h.row(p_idx));
        }
    }

    // dW += DAᵀ·X; dU += DAᵀ·H_prev; db += Σ_t da_t; dX = DA·W.
    general_mat_mul(F::one(), &da.t(), &input, F::one(), &mut g.w);
    general_mat_mul(F::one(), &da.t(), &h_prev, F::one(), &mut g.u);
    g.b += &da.sum_axis(Axis(0));
    da.dot(&p.w)
}

/// Backpropagates one sample, scaling its loss gradient by `b_inv` (one over
/// the batch size), and accumulates into `grads`. Returns the sample's
/// unscaled weighted loss.
fn accumulate_sample<F: Real>(
    params: &ModelParams<F>,
    uts: &TransposedUs<F>,
    sample: &EncodedSample,
    weights: &[F],
    b_inv: F,
    grads: &mut Gradients<F>,
) -> F {
    let h = params.hyper.hidden_dim;
    let trace = forward_trace(params, &sample.chars);
    let t_len = trace.len();

    let pooled = pooled_from_trace(params, &trace);
    let (loss, mut gvec) = weighted_ce_loss(&pooled, sample.target, weights[sample.target]);
    gvec.mapv_inplace(|x| x * b_inv);

    // Head: pooled = head_W·(Σ_t y2_t) + T·head_b, and gvec = dL/dpooled.
    let sum_y2 = trace.y2.sum_axis(Axis(0));
    general_mat_mul(
        F::one(),
        &gvec.view().insert_axis(Axis(1)),
        &sum_y2.view().insert_axis(Axis(0)),
        F::one(),
        &mut grads.head_w,
    );
    grads.head_b.scaled_add(F::from_f64(t_len as f64), &gvec);

    // Every position shares the same dL/dy2_t = head_Wᵀ·gvec.
    let mut dy2 = Array1::zeros(2 * h);
    general_mat_vec_mul(F::one(), &params.head_w.t(), &gvec, F::zero(), &mut dy2);
    let dy2_f = dy2.slice(s![..h]);
    let ext2f = dy2_f.broadcast((t_len, h)).expect("broadcast");
    let dy2_b = dy2.slice(s![h..]);
    let ext2b = dy2_b.broadcast((t_len, h)).expect("broadcast");

    let din2f = bptt_dir(
        &params.layer2_fwd,
        &uts.l2f,
        &trace.l2f,
        trace.y1.view(),
        ext2f,
        false,
        &mut grads.layer2_fwd,
    );
    let din2b = bptt_dir(
        &params.layer2_bwd,
        &uts.l2b,
        &trace.l2b,
        trace.y1.view(),
        ext2b,
        true,
        &mut grads.layer2_bwd,
    );
    let dy1 = din2f + din2b;

    let din1f = bptt_dir(
        &params.layer1_fwd,
        &uts.l1f,
        &trace.l1f,
        trace.x.view(),
        dy1.slice(s![.., ..h]),
        false,
        &mut grads.layer1_fwd,
    );
    let din1b = bptt_dir(
        &params.layer1_bwd,
        &uts.l1b,
        &trace.l1b,
        trace.x.view(),
        dy1.slice(s![.., h..]),
        true,
        &mut grads.layer1_bwd,
    );
    let dx = din1f + din1b;

    for (t, &idx) in trace.indices.iter().enumerate() {
        if idx != PAD_INDEX {
            let mut row = grads.embedding.row_mut(idx);
            row += &dx.row(t);
        }
    }
    loss
}

/// Exact gradients of the mean per-sample weighted loss over `batch` with
/// respect to every parameter tensor. Returns `(mean loss, gradients)`.
/// The PAD embedding row's gradient is always zero.
pub fn backward<F: Real>(
    params: &ModelParams<F>,
    batch: &[&EncodedSample],
    weights: &[F],
) -> (F, Gradients<F>) {
    assert!(!batch.is_empty(), "backward needs a nonempty batch");
    assert_eq!(
        weights.len(),
        params.hyper.num_langs,
        "one class weight per language"
    );
    for sample in batch {
        assert!(
            sample.target < params.hyper.num_langs,
            "target {} out of range",
            sample.target
        );
        assert!(!sample.chars.is_empty(), "empty sample in batch");
    }
    let uts = TransposedUs::new(params);
    let b_inv = F::from_f64(1.0 / batch.len() as f64);
    let mut grads = Gradients::zeros(&params.hyper);
    let mut total = F::zero();
    for sample in batch {
        total += accumulate_sample(params, &uts, sample, weights, b_inv, &mut grads);
    }
    (total * b_inv, grads)
}
