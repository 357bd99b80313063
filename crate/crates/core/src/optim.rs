//! Nadam: Adam with Nesterov momentum and a warming momentum schedule.
//!
//! Per step `t` (1-based), with `μ_t = β1 (1 - ½·0.96^(t·decay))`:
//!
//! ```text
//! m  ← β1 m + (1 - β1) g
//! v  ← β2 v + (1 - β2) g²
//! ĝ  = g / (1 - Π_{i≤t} μ_i)
//! m̂  = m / (1 - Π_{i≤t+1} μ_i)
//! m̄  = (1 - μ_t) ĝ + μ_{t+1} m̂
//! v̂  = v / (1 - β2^t)
//! θ  ← θ - lr · m̄ / (√v̂ + ε)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ExpDnnParams, Gradients};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NadamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub schedule_decay: f64,
}

impl Default for NadamHyper {
    fn default() -> Self {
        Self {
            learning_rate: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            schedule_decay: 0.004,
        }
    }
}

impl NadamHyper {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |b: f64| b > 0.0 && b < 1.0;
        if !in_unit(self.beta1) || !in_unit(self.beta2) {
            return Err(Error::Config(format!(
                "beta1 and beta2 must lie in (0, 1), got {} and {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.learning_rate > 0.0) || !(self.epsilon > 0.0) || !self.schedule_decay.is_finite()
        {
            return Err(Error::Config(format!(
                "learning_rate and epsilon must be positive, got {} and {}",
                self.learning_rate, self.epsilon
            )));
        }
        Ok(())
    }
}

/// `μ_t = β1 (1 - ½·0.96^(t·decay))`.
pub fn momentum_schedule(t: u64, hyper: &NadamHyper) -> f64 {
    hyper.beta1 * (1.0 - 0.5 * 0.96f64.powf(t as f64 * hyper.schedule_decay))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NadamState {
    pub m: ExpDnnParams,
    pub v: ExpDnnParams,
    pub t: u64,
    /// `Π_{i≤t} μ_i`.
    pub mu_product: f64,
    pub hyper: NadamHyper,
}

impl NadamState {
    pub fn new(params: &ExpDnnParams, hyper: NadamHyper) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            mu_product: 1.0,
            hyper,
        }
    }

    /// Applies one update to `params` in place.
    pub fn step(&mut self, params: &mut ExpDnnParams, grads: &Gradients) -> Result<()> {
        let params_flat = params.num_params();
        if grads.num_params() != params_flat || self.m.num_params() != params_flat {
            return Err(Error::shape(
                "nadam_step",
                format!("{params_flat} parameters"),
                format!(
                    "{} gradients and {} moments",
                    grads.num_params(),
                    self.m.num_params()
                ),
            ));
        }
        let h = self.hyper;
        let t = self.t + 1;
        let mu_t = momentum_schedule(t, &h);
        let mu_next = momentum_schedule(t + 1, &h);
        let prod_t = self.mu_product * mu_t;
        let prod_next = prod_t * mu_next;
        let v_correction = 1.0 - h.beta2.powf(t as f64);

        let blocks = params
            .blocks_mut()
            .into_iter()
            .zip(grads.blocks())
            .zip(self.m.blocks_mut())
            .zip(self.v.blocks_mut());
        for (((theta, g), m), v) in blocks {
            if theta.len() != g.len() || theta.len() != m.len() {
                return Err(Error::shape("nadam_step block", theta.len(), g.len()));
            }
            for i in 0..theta.len() {
                let gi = g[i];
                m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * gi;
                v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * gi * gi;
                let g_hat = gi / (1.0 - prod_t);
                let m_hat = m[i] / (1.0 - prod_next);
                let m_bar = (1.0 - mu_t) * g_hat + mu_next * m_hat;
                let v_hat = v[i] / v_correction;
                theta[i] -= h.learning_rate * m_bar / (v_hat.sqrt() + h.epsilon);
            }
        }
        self.mu_product = prod_t;
        self.t = t;
        Ok(())
    }
}

/// State-passing form of [`NadamState::step`].
pub fn nadam_step(
    mut state: NadamState,
    mut params: ExpDnnParams,
    grads: &Gradients,
) -> Result<(ExpDnnParams, NadamState)> {
    state.step(&mut params, grads)?;
    Ok((params, state))
}
