//! Oracles shared by the integration tests. Nothing here calls into the
//! code paths it is used to check.
#![allow(dead_code)]

use bal::nn::{Arch, DropoutMode, DropoutPlacement, Network};
use bal::Window;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_window(rng: &mut ChaCha8Rng, id: &str, channels: usize, len: usize, label: Option<u8>) -> Window {
    let data = (0..channels)
        .map(|_| (0..len).map(|_| rng.random_range(-2.0f32..2.0)).collect())
        .collect();
    Window::new(id, data, label).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mean cross-entropy of `batch`. With dropout off this is built from plain
/// forward passes; with a fixed mask seed the loss reported alongside the
/// gradient is used, since it is the only way to replay the batch's masks.
pub fn batch_loss(net: &Network<f64>, batch: &[Window], mode: DropoutMode) -> f64 {
    match mode {
        DropoutMode::Off => {
            let total: f64 = batch
                .iter()
                .map(|w| {
                    -net.forward(w, DropoutMode::Off).unwrap()[w.label.unwrap() as usize]
                        .max(1e-12)
                        .ln()
                })
                .sum();
            total / batch.len() as f64
        }
        DropoutMode::Stochastic(_) => net.grad(batch, mode).unwrap().loss,
    }
}

/// `|a - n| / max(|a| + |n|, 1e-6)`. Round-off in a central difference of
/// an O(1) loss with `h = 1e-4` is around 1e-12, so without the floor
/// near-zero gradients would be compared against noise.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6)
}

/// Entropy in nats with Neumaier-compensated summation.
pub fn entropy_compensated(p: &[f64]) -> f64 {
    neumaier(p.iter().map(|&x| if x > 0.0 { -x * x.max(1e-12).ln() } else { 0.0 }))
}

pub fn neumaier(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean_compensated(rows: &[Vec<f64>]) -> Vec<f64> {
    let c = rows[0].len();
    (0..c)
        .map(|j| neumaier(rows.iter().map(|r| r[j])) / rows.len() as f64)
        .collect()
}

/// Mutual information computed as the mean KL divergence of each pass from
/// the predictive mean, an algebraically different route from
/// `H[mean] - mean(H[row])`.
pub fn bald_via_kl(rows: &[Vec<f64>]) -> f64 {
    let mean = mean_compensated(rows);
    let kls = rows.iter().map(|r| {
        neumaier(r.iter().zip(&mean).map(|(&p, &m)| {
            if p > 0.0 {
                p * (p.max(1e-12).ln() - m.max(1e-12).ln())
            } else {
                0.0
            }
        }))
    });
    neumaier(kls) / rows.len() as f64
}

/// Random row-stochastic matrix; some rows get exact zeros.
pub fn random_samples(rng: &mut ChaCha8Rng, passes: usize, classes: usize) -> Vec<Vec<f64>> {
    (0..passes)
        .map(|_| {
            let mut row: Vec<f64> = (0..classes)
                .map(|_| {
                    if rng.random_bool(0.1) {
                        0.0
                    } else {
                        rng.random::<f64>().powi(3)
                    }
                })
                .collect();
            if row.iter().all(|&x| x == 0.0) {
                row[0] = 1.0;
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
            row
        })
        .collect()
}

const H: f64 = 1e-4;

/// Central difference at coordinate `i`, plus a half-step estimate used to
/// detect coordinates whose stencil straddles a ReLU or max-pool kink.
fn central_difference(net: &Network<f64>, batch: &[bal::Window], mode: DropoutMode, i: usize) -> (f64, f64) {
    let mut probe = net.clone();
    let x = net.params().get(i);
    let mut at = |h: f64| {
        probe.params_mut().set(i, x + h);
        batch_loss(&probe, batch, mode)
    };
    let full = (at(H) - at(-H)) / (2.0 * H);
    let half = (at(H / 2.0) - at(-H / 2.0)) / H;
    (full, half)
}

/// Returns (worst relative error, coordinates checked, coordinates skipped).
pub fn gradient_check(seed: u64, placement: DropoutPlacement, mode: DropoutMode, coords: usize) -> (f64, usize, usize) {
    let mut r = rng(seed);
    let arch = Arch::default().with_placement(placement);
    let mut net = Network::<f64>::init(arch, seed).unwrap();
    // non-zero biases so no unit sits exactly at a kink
    let params = net.params_mut();
    for t in params.conv_b.iter_mut().chain(params.dense_b.iter_mut()) {
        t.iter_mut().for_each(|b| *b = r.random_range(-0.1..0.1));
    }
    let batch: Vec<_> = (0..r.random_range(1..6))
        .map(|j| {
            let label = r.random_range(0..2);
            random_window(&mut r, &format!("b{j}"), 2, 32, Some(label))
        })
        .collect();
    let grads = net.grad(&batch, mode).unwrap();
    let n = net.params().len();
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    while checked < coords {
        let i = r.random_range(0..n);
        let analytic = grads.params.get(i);
        let (numeric, half) = central_difference(&net, &batch, mode, i);
        if relative_error(numeric, half) > 1e-3 {
            skipped += 1;
            assert!(skipped < coords / 10, "too many non-smooth coordinates");
            continue;
        }
        worst = worst.max(relative_error(analytic, numeric));
        checked += 1;
    }
    (worst, checked, skipped)
}
