//! Adam with bias correction; μ is kept non-negative.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// When false μ stays at its initial value.
    pub train_mu: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.02,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            train_mu: true,
        }
    }
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    m: ModelParams,
    v: ModelParams,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }
}

fn update(x: &mut f64, m: &mut f64, v: &mut f64, g: f64, cfg: &AdamConfig, c1: f64, c2: f64) {
    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
    let m_hat = *m / c1;
    let v_hat = *v / c2;
    *x -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
}

fn update_matrix(x: &mut Array2<f64>, m: &mut Array2<f64>, v: &mut Array2<f64>, g: &Array2<f64>, cfg: &AdamConfig, c1: f64, c2: f64) {
    Zip::from(x).and(m).and(v).and(g).for_each(|x, m, v, &g| update(x, m, v, g, cfg, c1, c2));
}

/// One Adam step in place. μ is clamped to `[0, ∞)` afterwards.
pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState, cfg: &AdamConfig) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (l, w) in params.weights.iter_mut().enumerate() {
        update_matrix(w, &mut state.m.weights[l], &mut state.v.weights[l], &grads.weights[l], cfg, c1, c2);
    }
    if cfg.train_mu {
        update(&mut params.mu, &mut state.m.mu, &mut state.v.mu, grads.mu, cfg, c1, c2);
        params.mu = params.mu.max(0.0);
    }
}
