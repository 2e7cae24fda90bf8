//! Forward computation: LSTM recurrence, bidirectional layers, linear head,
//! masked sum-pooling, and the end-to-end `predict` path.

use super::{LstmDirectionParams, ModelError, ModelParams, Prediction};
use crate::corpus::clean_text;
use crate::float::Real;
use ndarray::linalg::general_mat_vec_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

/// Per-direction activations recorded during the forward pass, indexed by
/// sequence position (not processing order).
pub(crate) struct DirTrace<F> {
    /// Post-activation gate values, `[T × 4H]`, blocks i, f, g, o.
    pub gates: Array2<F>,
    /// Cell states, `[T × H]`.
    pub c: Array2<F>,
    /// `tanh` of the cell states, `[T × H]`.
    pub tanh_c: Array2<F>,
    /// Hidden outputs, `[T × H]`.
    pub h: Array2<F>,
}

/// Everything the backward pass needs about one sequence's forward run.
/// Positions are the real (unpadded) characters only.
pub(crate) struct ForwardTrace<F> {
    /// Encoded character index at each position.
    pub indices: Vec<usize>,
    /// Embedded inputs, `[T × embed_dim]`.
    pub x: Array2<F>,
    pub l1f: DirTrace<F>,
    pub l1b: DirTrace<F>,
    pub l2f: DirTrace<F>,
    pub l2b: DirTrace<F>,
    /// Layer-1 output `[fwd ∥ bwd]`, `[T × 2H]`.
    pub y1: Array2<F>,
    /// Layer-2 output `[fwd ∥ bwd]`, `[T × 2H]`.
    pub y2: Array2<F>,
}

impl<F> ForwardTrace<F> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }
}

/// Applies gate activations to pre-activation values and advances the cell.
/// `gates` holds `W·x + U·h_prev + b` on entry and the post-activation
/// i, f, g, o blocks on exit.
fn activate_and_step<F: Real>(
    gates: &mut [F],
    c_prev: &[F],
    c_out: &mut [F],
    tanh_out: &mut [F],
    h_out: &mut [F],
) {
    let h_dim = c_prev.len();
    debug_assert_eq!(gates.len(), 4 * h_dim);
    let (gi, rest) = gates.split_at_mut(h_dim);
    let (gf, rest) = rest.split_at_mut(h_dim);
    let (gg, go) = rest.split_at_mut(h_dim);
    for j in 0..h_dim {
        gi[j] = gi[j].sigmoid();
        gf[j] = gf[j].sigmoid();
        gg[j] = gg[j].tanh();
        go[j] = go[j].sigmoid();
        let c_new = gf[j] * c_prev[j] + gi[j] * gg[j];
        c_out[j] = c_new;
        let tc = c_new.tanh();
        tanh_out[j] = tc;
        h_out[j] = go[j] * tc;
    }
}

/// One LSTM step: `gates = W·x + U·h_prev + b`; `i,f,o = σ(...)`,
/// `g = tanh(...)`; `c = f⊙c_prev + i⊙g`; `h = o⊙tanh(c)`.
pub fn lstm_cell<F: Real>(
    x: &ArrayView1<F>,
    h_prev: &ArrayView1<F>,
    c_prev: &ArrayView1<F>,
    p: &LstmDirectionParams<F>,
) -> Result<(Array1<F>, Array1<F>), ModelError> {
    let h_dim = p.hidden_dim();
    if x.len() != p.input_dim() || h_prev.len() != h_dim || c_prev.len() != h_dim {
        return Err(ModelError::ShapeMismatch(format!(
            "lstm_cell: x has {} (want {}), h_prev has {} and c_prev has {} (want {})",
            x.len(),
            p.input_dim(),
            h_prev.len(),
            c_prev.len(),
            h_dim
        )));
    }
    let mut gates = p.w.dot(x) + &p.b;
    general_mat_vec_mul(F::one(), &p.u, h_prev, F::one(), &mut gates);
    let mut c = Array1::zeros(h_dim);
    let mut tanh_c = Array1::zeros(h_dim);
    let mut h = Array1::zeros(h_dim);
    activate_and_step(
        gates.as_slice_mut().unwrap(),
        c_prev.as_slice().expect("contiguous c_prev"),
        c.as_slice_mut().unwrap(),
        tanh_c.as_slice_mut().unwrap(),
        h.as_slice_mut().unwrap(),
    );
    Ok((h, c))
}

/// Runs one direction of one layer over the whole sequence from zero initial
/// states. The input-to-gate products for all positions are computed as a
/// single matrix product; the recurrent term is added step by step.
pub(crate) fn run_dir<F: Real>(
    p: &LstmDirectionParams<F>,
    input: &ArrayView2<F>,
    reverse: bool,
) -> DirTrace<F> {
    let t_len = input.nrows();
    let h_dim = p.hidden_dim();
    let mut gates = input.dot(&p.w.t());
    gates += &p.b;
    let mut c = Array2::zeros((t_len, h_dim));
    let mut tanh_c = Array2::zeros((t_len, h_dim));
    let mut h = Array2::zeros((t_len, h_dim));
    let mut h_state: Array1<F> = Array1::zeros(h_dim);
    let mut c_state: Array1<F> = Array1::zeros(h_dim);

    let mut step = |t: usize, h_state: &mut Array1<F>, c_state: &mut Array1<F>| {
        let mut row = gates.row_mut(t);
        general_mat_vec_mul(F::one(), &p.u, &*h_state, F::one(), &mut row);
        activate_and_step(
            row.as_slice_mut().unwrap(),
            c_state.as_slice().unwrap(),
            c.row_mut(t).as_slice_mut().unwrap(),
            tanh_c.row_mut(t).as_slice_mut().unwrap(),
            h.row_mut(t).as_slice_mut().unwrap(),
        );
        h_state.assign(&h.row(t));
        c_state.assign(&c.row(t));
    };
    if reverse {
        for t in (0..t_len).rev() {
            step(t, &mut h_state, &mut c_state);
        }
    } else {
        for t in 0..t_len {
            step(t, &mut h_state, &mut c_state);
        }
    }
    DirTrace { gates, c, tanh_c, h }
}

/// Runs embedding and both bidirectional layers over a sequence of real
/// (unpadded) character indices, recording all activations.
pub(crate) fn forward_trace<F: Real>(params: &ModelParams<F>, indices: &[usize]) -> ForwardTrace<F> {
    let t_len = indices.len();
    let d = params.hyper.embed_dim;
    let h = params.hyper.hidden_dim;
    assert!(t_len > 0, "forward_trace needs at least one position");

    let mut x = Array2::zeros((t_len, d));
    for (t, &idx) in indices.iter().enumerate() {
        x.row_mut(t).assign(&params.embedding.row(idx));
    }

    let l1f = run_dir(&params.layer1_fwd, &x.view(), false);
    let l1b = run_dir(&params.layer1_bwd, &x.view(), true);
    let mut y1 = Array2::zeros((t_len, 2 * h));
    y1.slice_mut(s![.., ..h]).assign(&l1f.h);
    y1.slice_mut(s![.., h..]).assign(&l1b.h);

    let l2f = run_dir(&params.layer2_fwd, &y1.view(), false);
    let l2b = run_dir(&params.layer2_bwd, &y1.view(), true);
    let mut y2 = Array2::zeros((t_len, 2 * h));
    y2.slice_mut(s![.., ..h]).assign(&l2f.h);
    y2.slice_mut(s![.., h..]).assign(&l2b.h);

    ForwardTrace {
        indices: indices.to_vec(),
        x,
        l1f,
        l1b,
        l2f,
        l2b,
        y1,
        y2,
    }
}

/// Pooled logits for a recorded forward run: since every position gets the
/// same head, `Σ_t (head_W·y2_t + head_b) = head_W·(Σ_t y2_t) + T·head_b`.
pub(crate) fn pooled_from_trace<F: Real>(params: &ModelParams<F>, trace: &ForwardTrace<F>) -> Array1<F> {
    let sum_y2 = trace.y2.sum_axis(Axis(0));
    let mut pooled = params.head_w.dot(&sum_y2);
    pooled.scaled_add(F::from_f64(trace.len() as f64), &params.head_b);
    pooled
}

/// Full forward pass over a possibly padded sequence.
///
/// `mask[t]` is true for real characters. Masked positions contribute
/// nothing: no state crosses them (each direction runs over the compressed
/// real subsequence), and their logit rows are zero.
pub fn forward<F: Real>(
    params: &ModelParams<F>,
    encoded: &[usize],
    mask: &[bool],
) -> Result<Array2<F>, ModelError> {
    if encoded.is_empty() || encoded.len() != mask.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "forward: {} indices vs {} mask entries (need equal, ≥ 1)",
            encoded.len(),
            mask.len()
        )));
    }
    for &idx in encoded {
        if idx >= params.hyper.vocab_size {
            return Err(ModelError::IndexOutOfRange {
                index: idx,
                vocab_size: params.hyper.vocab_size,
            });
        }
    }
    let real: Vec<usize> = encoded
        .iter()
        .zip(mask)
        .filter_map(|(&idx, &m)| m.then_some(idx))
        .collect();
    let mut logits = Array2::zeros((encoded.len(), params.hyper.num_langs));
    if real.is_empty() {
        return Ok(logits);
    }
    let trace = forward_trace(params, &real);
    let compressed = trace.y2.dot(&params.head_w.t()) + &params.head_b;
    for (compressed_row, t) in (0..encoded.len()).filter(|&t| mask[t]).enumerate() {
        logits.row_mut(t).assign(&compressed.row(compressed_row));
    }
    Ok(logits)
}

/// Numerically stable in-place softmax (max subtraction).
pub fn softmax_in_place<F: Real>(v: &mut [F]) {
    let max = v.iter().copied().fold(F::neg_infinity(), F::max);
    let mut total = F::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
}

/// Sums logits over unmasked positions and turns them into a ranked
/// distribution.
pub fn pool_and_predict<F: Real>(
    per_char_logits: &ArrayView2<F>,
    mask: &[bool],
) -> Result<Prediction<F>, ModelError> {
    if per_char_logits.nrows() != mask.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "pool_and_predict: {} logit rows vs {} mask entries",
            per_char_logits.nrows(),
            mask.len()
        )));
    }
    let mut pooled = vec![F::zero(); per_char_logits.ncols()];
    let mut any = false;
    for (row, &m) in per_char_logits.rows().into_iter().zip(mask) {
        if m {
            any = true;
            for (acc, &x) in pooled.iter_mut().zip(row) {
                *acc += x;
            }
        }
    }
    if !any {
        return Err(ModelError::AllMasked);
    }
    Ok(Prediction::from_pooled(pooled))
}

/// End-to-end prediction for raw text: clean → encode (unknown characters
/// become UNK) → forward → pool. Deterministic.
pub fn predict<F: Real>(params: &ModelParams<F>, text: &str) -> Result<Prediction<F>, ModelError> {
    let cleaned = clean_text(text);
    if cleaned.is_empty() {
        return Err(ModelError::EmptyAfterCleaning);
    }
    let encoded = params.vocab.encode_text(&cleaned);
    let mask = vec![true; encoded.len()];
    let logits = forward(params, &encoded, &mask)?;
    pool_and_predict(&logits.view(), &mask)
}
