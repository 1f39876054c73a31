use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionKind;
use crate::nn::{DropoutPlacement, OptimizerHyper};
use crate::{rng, Error, Result};

/// Seeds for every random stream of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub split: u64,
    pub init: u64,
    pub train: u64,
    pub acquisition: u64,
}

impl Seeds {
    /// Derives all four streams from one run seed.
    pub fn from_master(seed: u64) -> Self {
        Seeds {
            split: rng::derive_str(seed, "split"),
            init: rng::derive_str(seed, "init"),
            train: rng::derive_str(seed, "train"),
            acquisition: rng::derive_str(seed, "acquisition"),
        }
    }

    /// Seed of the MC passes used for test-set evaluation.
    pub fn evaluation(&self) -> u64 {
        rng::derive_str(self.acquisition, "evaluate")
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::from_master(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ALConfig {
    /// Fraction of the initial pool that may be acquired.
    pub eta: f64,
    /// Stochastic passes per prediction.
    pub passes: usize,
    /// Windows acquired per iteration before retraining.
    pub window_batch: usize,
    pub epochs_per_iteration: usize,
    pub pretrain_epochs: usize,
    /// Fraction of the data used for pre-training; the rest is the pool.
    pub split_ratio: f64,
    pub kind: AcquisitionKind,
    pub seeds: Seeds,
    pub optimizer: OptimizerHyper,
    pub dropout: f32,
    pub placement: DropoutPlacement,
}

impl Default for ALConfig {
    fn default() -> Self {
        ALConfig {
            eta: 0.6,
            passes: 10,
            window_batch: 32,
            epochs_per_iteration: 10,
            pretrain_epochs: 10,
            split_ratio: 0.3,
            kind: AcquisitionKind::VariationRatios,
            seeds: Seeds::default(),
            optimizer: OptimizerHyper::default(),
            dropout: 0.3,
            placement: DropoutPlacement::BeforeOutput,
        }
    }
}

impl ALConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::config(format!("eta {} outside [0, 1]", self.eta)));
        }
        if self.window_batch == 0 {
            return Err(Error::config("window batch (w_a) must be at least 1"));
        }
        if self.passes == 0 {
            return Err(Error::config("at least one stochastic pass is required"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::config(format!(
                "split ratio {} outside (0, 1)",
                self.split_ratio
            )));
        }
        self.optimizer.validate()
    }
}
