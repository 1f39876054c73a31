use rayon::prelude::*;

use super::ALConfig;
use crate::bayes::{mc_predict, predictive_label};
use crate::nn::{fit, Arch, Network, Real};
use crate::{rng, Error, Result, Window};

/// Percentage of `test` windows whose MC-averaged prediction matches the
/// label.
pub fn evaluate<F: Real>(net: &Network<F>, test: &[Window], passes: usize, seed: u64) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::precondition("test set is empty"));
    }
    if let Some(w) = test.iter().find(|w| w.label.is_none()) {
        return Err(Error::precondition(format!("test window `{}` has no label", w.id)));
    }
    let correct = test
        .par_iter()
        .map(|w| {
            let samples = mc_predict(net, w, passes, seed)?;
            Ok(usize::from(
                predictive_label(&samples.mean()) == usize::from(w.label.unwrap_or_default()),
            ))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(100.0 * correct as f64 / test.len() as f64)
}

/// Trains a fresh network on the initial labeled split and reports its
/// accuracy on `test`.
pub fn pretrain(train: &[Window], test: &[Window], config: &ALConfig) -> Result<(Network<f32>, f64)> {
    let first = train
        .first()
        .ok_or_else(|| Error::precondition("training split is empty"))?;
    config.validate()?;
    let arch = Arch::new(first.num_channels(), first.len())?
        .with_dropout(config.dropout)?
        .with_placement(config.placement);
    let mut net = Network::init(arch, config.seeds.init)?;
    fit(
        &mut net,
        train,
        config.pretrain_epochs,
        &config.optimizer,
        rng::derive_str(config.seeds.train, "pretrain"),
    )?;
    let accuracy = evaluate(&net, test, config.passes, config.seeds.evaluation())?;
    Ok((net, accuracy))
}
