//! AdamW with decoupled weight decay, plus global-norm gradient clipping.

use super::backward::Gradients;
use super::TrainConfig;
use crate::float::Real;
use crate::model::{HyperParams, ModelParams};

/// First and second moment estimates plus the step counter. Tensor shapes
/// mirror the model's exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<F> {
    m: Gradients<F>,
    v: Gradients<F>,
    t: u64,
}

impl<F: Real> OptimizerState<F> {
    pub fn new(hyper: &HyperParams) -> Self {
        OptimizerState {
            m: Gradients::zeros(hyper),
            v: Gradients::zeros(hyper),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// Scales all gradients by `max_norm / norm` when the global L2 norm exceeds
/// `max_norm`; `None` disables clipping. Returns the pre-clip norm.
pub fn clip_gradients<F: Real>(grads: &mut Gradients<F>, max_norm: Option<f64>) -> f64 {
    let norm = grads.squared_norm().sqrt();
    if let Some(limit) = max_norm {
        if norm > limit {
            grads.scale(F::from_f64(limit / norm));
        }
    }
    norm
}

/// One AdamW update:
/// `m ← β1·m + (1−β1)·g`, `v ← β2·v + (1−β2)·g²`, bias-corrected `m̂`, `v̂`,
/// then `θ ← θ − lr·(m̂/(√v̂+eps) + weight_decay·θ)`. The decay is decoupled
/// (applied to θ directly, never through the moments). The step counter is
/// incremented before use. The PAD embedding row — the first `embed_dim`
/// entries of the embedding tensor — is exempt from both update and decay.
pub fn adamw_step<F: Real>(
    params: &mut ModelParams<F>,
    grads: &Gradients<F>,
    state: &mut OptimizerState<F>,
    cfg: &TrainConfig,
) {
    state.t += 1;
    let bc1 = F::from_f64(1.0 - cfg.beta1.powi(state.t as i32));
    let bc2 = F::from_f64(1.0 - cfg.beta2.powi(state.t as i32));
    let b1 = F::from_f64(cfg.beta1);
    let b2 = F::from_f64(cfg.beta2);
    let one_m_b1 = F::from_f64(1.0 - cfg.beta1);
    let one_m_b2 = F::from_f64(1.0 - cfg.beta2);
    let lr = F::from_f64(cfg.lr);
    let eps = F::from_f64(cfg.eps);
    let wd = F::from_f64(cfg.weight_decay);
    let embed_dim = params.hyper.embed_dim;

    let params_it = params.tensor_slices_mut().into_iter();
    let grads_it = grads.tensor_slices().into_iter();
    let m_it = state.m.tensor_slices_mut().into_iter();
    let v_it = state.v.tensor_slices_mut().into_iter();
    for ((((name, p), (_, g)), (_, m)), (_, v)) in params_it.zip(grads_it).zip(m_it).zip(v_it) {
        debug_assert_eq!(p.len(), g.len());
        let skip = if name == "embedding" { embed_dim } else { 0 };
        for i in skip..p.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + one_m_b1 * gi;
            v[i] = b2 * v[i] + one_m_b2 * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * (m_hat / (v_hat.sqrt() + eps) + wd * p[i]);
        }
    }
}
