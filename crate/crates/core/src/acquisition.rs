//! Acquisition functions and pool ranking.
//!
//! All entropies are in nats, with probabilities clamped to `1e-12` before
//! taking logs. The next queries are the highest-scoring pool windows, ties
//! broken by the lexicographically smaller window id.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{mc_predict, predictive_mean, PredictiveSamples};
use crate::nn::{Network, Real};
use crate::{rng, Error, Result, Window};

const LOG_CLAMP: f64 = 1e-12;
const BALD_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionKind {
    MaxEntropy,
    Bald,
    VariationRatios,
    #[serde(rename = "random")]
    RandomSampling,
}

impl AcquisitionKind {
    /// All kinds, in CSV column order.
    pub const ALL: [AcquisitionKind; 4] = [
        AcquisitionKind::MaxEntropy,
        AcquisitionKind::Bald,
        AcquisitionKind::VariationRatios,
        AcquisitionKind::RandomSampling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AcquisitionKind::MaxEntropy => "max_entropy",
            AcquisitionKind::Bald => "bald",
            AcquisitionKind::VariationRatios => "variation_ratios",
            AcquisitionKind::RandomSampling => "random",
        }
    }

    /// Whether the score depends on model predictions.
    pub fn uses_model(self) -> bool {
        self != AcquisitionKind::RandomSampling
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcquisitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AcquisitionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown acquisition kind `{s}`")))
    }
}

/// A pool window's informativeness under one acquisition function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionScore {
    pub window_id: String,
    pub kind: AcquisitionKind,
    pub score: f64,
    pub model_version: u64,
    /// Predictive mean the score was derived from; empty for random scores.
    pub mean_probs: Vec<f64>,
}

/// Shannon entropy in nats.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| p * p.max(LOG_CLAMP).ln()).sum::<f64>()
}

/// Entropy of the predictive mean.
pub fn max_entropy_score(samples: &PredictiveSamples) -> f64 {
    entropy(&predictive_mean(samples)).max(0.0)
}

/// Mutual information between the prediction and the weights: entropy of
/// the mean minus the mean per-pass entropy.
pub fn bald_score(samples: &PredictiveSamples) -> f64 {
    let total = entropy(&predictive_mean(samples));
    let expected = samples.rows().iter().map(|r| entropy(r)).sum::<f64>() / samples.passes() as f64;
    let info = total - expected;
    debug_assert!(info >= -BALD_SLACK, "BALD {info} below cancellation slack");
    info.max(0.0)
}

/// One minus the largest predictive-mean probability.
pub fn variation_ratio_score(samples: &PredictiveSamples) -> f64 {
    let max = predictive_mean(samples).into_iter().fold(0.0, f64::max);
    (1.0 - max).max(0.0)
}

/// Uniform `[0, 1)` score determined by `(window_id, seed)` alone.
pub fn random_score(window_id: &str, seed: u64) -> f64 {
    rng::unit_f64(rng::derive_str(seed, window_id))
}

/// Score of `samples` under `kind`; `seed` only matters for random sampling.
pub fn score(kind: AcquisitionKind, samples: &PredictiveSamples, seed: u64) -> f64 {
    match kind {
        AcquisitionKind::MaxEntropy => max_entropy_score(samples),
        AcquisitionKind::Bald => bald_score(samples),
        AcquisitionKind::VariationRatios => variation_ratio_score(samples),
        AcquisitionKind::RandomSampling => random_score(&samples.window_id, seed),
    }
}

/// Descending score, then ascending id.
pub fn rank_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

/// Sorts scores into query order.
pub fn sort_scores(scores: &mut [AcquisitionScore]) {
    scores.sort_by(|a, b| rank_order((&a.window_id, a.score), (&b.window_id, b.score)));
}

/// Ids of the `budget` highest-scoring windows, best first.
pub fn rank_pool(pool: &[PredictiveSamples], kind: AcquisitionKind, budget: usize, seed: u64) -> Result<Vec<String>> {
    if budget > pool.len() {
        return Err(Error::precondition(format!(
            "budget {budget} exceeds pool size {}",
            pool.len()
        )));
    }
    let mut scored: Vec<(&str, f64)> = pool
        .iter()
        .map(|s| (s.window_id.as_str(), score(kind, s, seed)))
        .collect();
    scored.sort_by(|a, b| rank_order(*a, *b));
    Ok(scored.into_iter().take(budget).map(|(id, _)| id.to_owned()).collect())
}

/// Scores every pool window against `net`, in query order.
///
/// Model-based kinds run `passes` MC-dropout passes per window with masks
/// derived from `seed`; random sampling never touches the model. Windows are
/// scored in parallel; results do not depend on thread scheduling.
pub fn score_pool<F: Real>(
    net: &Network<F>,
    pool: &[Window],
    kind: AcquisitionKind,
    passes: usize,
    seed: u64,
    model_version: u64,
) -> Result<Vec<AcquisitionScore>> {
    let mut scores = pool
        .par_iter()
        .map(|w| {
            let (score, mean_probs) = if kind.uses_model() {
                let samples = mc_predict(net, w, passes, seed)?;
                (self::score(kind, &samples, seed), samples.mean())
            } else {
                (random_score(&w.id, seed), Vec::new())
            };
            Ok(AcquisitionScore {
                window_id: w.id.clone(),
                kind,
                score,
                model_version,
                mean_probs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    sort_scores(&mut scores);
    Ok(scores)
}
