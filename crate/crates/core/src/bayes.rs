//! MC-dropout predictive distributions.
//!
//! Keeping dropout active at test time and averaging `T` stochastic passes
//! gives a Monte Carlo estimate of the posterior predictive. The raw `T x C`
//! matrix is kept because acquisition scores such as BALD need the per-pass
//! rows, not just their mean.

use crate::nn::{DropoutMode, Network, Real};
use crate::{rng, Error, Result, Window};

const ROW_TOLERANCE: f64 = 1e-6;

/// Per-pass class probabilities for one window: `T` rows by `C` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSamples {
    pub window_id: String,
    rows: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
}

impl PredictiveSamples {
    /// Validates that there is at least one row, all rows have the same
    /// width, entries lie in `[0, 1]` and every row sums to one.
    pub fn new(window_id: impl Into<String>, rows: Vec<Vec<f64>>, seeds: Vec<u64>) -> Result<Self> {
        let window_id = window_id.into();
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || width == 0 {
            return Err(Error::precondition(format!("no predictive samples for `{window_id}`")));
        }
        for (t, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::precondition(format!(
                    "row {t} has {} classes, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::precondition(format!("row {t} has entries outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::precondition(format!("row {t} sums to {sum}")));
            }
        }
        Ok(PredictiveSamples { window_id, rows, seeds })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn passes(&self) -> usize {
        self.rows.len()
    }

    pub fn classes(&self) -> usize {
        self.rows[0].len()
    }

    pub fn mean(&self) -> Vec<f64> {
        predictive_mean(self)
    }
}

/// Runs `passes` stochastic forward passes.
///
/// Pass `t` uses the mask stream [`rng::pass_seed`]`(seed, window.id, t)`.
pub fn mc_predict<F: Real>(net: &Network<F>, window: &Window, passes: usize, seed: u64) -> Result<PredictiveSamples> {
    if passes == 0 {
        return Err(Error::precondition("at least one stochastic pass is required"));
    }
    let mut rows = Vec::with_capacity(passes);
    let mut seeds = Vec::with_capacity(passes);
    for t in 0..passes {
        let s = rng::pass_seed(seed, &window.id, t);
        let probs = net.forward(window, DropoutMode::Stochastic(s))?;
        rows.push(probs.into_iter().map(Real::as_f64).collect());
        seeds.push(s);
    }
    PredictiveSamples::new(window.id.clone(), rows, seeds)
}

/// Column-wise mean of the pass probabilities.
pub fn predictive_mean(samples: &PredictiveSamples) -> Vec<f64> {
    let t = samples.passes() as f64;
    (0..samples.classes())
        .map(|c| samples.rows.iter().map(|r| r[c]).sum::<f64>() / t)
        .collect()
}

/// Index of the largest entry; ties go to the lower index.
pub fn predictive_label(mean: &[f64]) -> usize {
    mean.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &p)| if p > best.1 { (i, p) } else { best },
        )
        .0
}
