use rand::seq::SliceRandom;
use rand::RngCore;

use super::{DropoutMode, Network, OptimizerHyper, Real};
use crate::{rng, Error, Result, Window};

/// Trains `net` in place for `epochs` passes over `labeled`.
///
/// Each epoch reshuffles the data and every minibatch draws fresh dropout
/// masks; both streams come from `seed`. Returns the mean training loss of
/// each epoch.
pub fn fit<F: Real>(
    net: &mut Network<F>,
    labeled: &[Window],
    epochs: usize,
    hyper: &OptimizerHyper,
    seed: u64,
) -> Result<Vec<f64>> {
    if labeled.is_empty() {
        return Err(Error::precondition("cannot fit on an empty labeled set"));
    }
    if let Some(w) = labeled.iter().find(|w| w.label.is_none()) {
        return Err(Error::precondition(format!("training window `{}` has no label", w.id)));
    }
    hyper.validate()?;

    let mut rng = rng::chacha(seed);
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    let mut trace = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(hyper.batch_size) {
            let mode = DropoutMode::Stochastic(rng.next_u64());
            let grads = net.grad(chunk.iter().map(|&i| &labeled[i]), mode)?;
            total += grads.loss.as_f64() * chunk.len() as f64;
            net.adam_step(&grads.params, hyper)?;
        }
        trace.push(total / labeled.len() as f64);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Arch;

    fn toy(n: usize) -> Vec<Window> {
        (0..n)
            .map(|i| {
                let label = (i % 2) as u8;
                let level = if label == 1 { 1.0 } else { -1.0 };
                let channels = (0..2)
                    .map(|c| {
                        (0..32)
                            .map(|t| level + 0.1 * ((i * 7 + t * 3 + c) as f32).sin())
                            .collect()
                    })
                    .collect();
                Window::new(format!("w{i}"), channels, Some(label)).unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_epochs_is_identity() {
        let mut net = Network::<f32>::init(Arch::default(), 1).unwrap();
        let before = net.clone();
        let trace = fit(&mut net, &toy(8), 0, &OptimizerHyper::default(), 3).unwrap();
        assert!(trace.is_empty());
        assert_eq!(net, before);
    }

    #[test]
    fn empty_or_unlabeled_input_is_rejected() {
        let mut net = Network::<f32>::init(Arch::default(), 1).unwrap();
        assert!(fit(&mut net, &[], 1, &OptimizerHyper::default(), 3).is_err());
        let mut data = toy(4);
        data[2].label = None;
        assert!(fit(&mut net, &data, 1, &OptimizerHyper::default(), 3).is_err());
    }

    #[test]
    fn same_seed_same_weights() {
        let data = toy(40);
        let mut a = Network::<f32>::init(Arch::default(), 1).unwrap();
        let mut b = a.clone();
        let ta = fit(&mut a, &data, 3, &OptimizerHyper::default(), 42).unwrap();
        let tb = fit(&mut b, &data, 3, &OptimizerHyper::default(), 42).unwrap();
        assert_eq!(ta, tb);
        assert_eq!(crate::nn::save(&a), crate::nn::save(&b));
        assert_eq!(ta.len(), 3);
    }
}
