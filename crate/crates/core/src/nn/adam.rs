use serde::{Deserialize, Serialize};

use super::{Arch, ParamSet, Real};
use crate::{Error, Result};

/// Adam hyperparameters and minibatch size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
}

impl Default for OptimizerHyper {
    fn default() -> Self {
        OptimizerHyper {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
        }
    }
}

impl OptimizerHyper {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |b: f64| b > 0.0 && b < 1.0;
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !in_unit(self.beta1) || !in_unit(self.beta2) {
            return Err(Error::config(format!(
                "betas ({}, {}) must lie in (0, 1)",
                self.beta1, self.beta2
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::config(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        Ok(())
    }
}

/// First and second moment estimates plus the number of steps taken.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub m: ParamSet<F>,
    pub v: ParamSet<F>,
    pub step: u64,
}

impl<F: Real> AdamState<F> {
    pub fn new(arch: &Arch) -> Self {
        AdamState {
            m: ParamSet::zeros(arch),
            v: ParamSet::zeros(arch),
            step: 0,
        }
    }
}

/// Applies one bias-corrected Adam update to a flat slice.
///
/// `step` is the 1-based index of this update.
pub fn adam_update<F: Real>(
    params: &mut [F],
    grads: &[F],
    m: &mut [F],
    v: &mut [F],
    step: u64,
    hyper: &OptimizerHyper,
) {
    let b1 = F::lit(hyper.beta1);
    let b2 = F::lit(hyper.beta2);
    let one = F::one();
    let bc1 = F::lit(1.0 - hyper.beta1.powf(step as f64));
    let bc2 = F::lit(1.0 - hyper.beta2.powf(step as f64));
    let lr = F::lit(hyper.learning_rate);
    let eps = F::lit(hyper.epsilon);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = b1 * m[i] + (one - b1) * g;
        v[i] = b2 * v[i] + (one - b2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
