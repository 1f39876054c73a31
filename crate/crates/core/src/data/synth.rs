//! Two-class synthetic heart-rate / skin-conductance windows.
//!
//! Heart rate: a 70 bpm baseline raised by `10 * sep` for the stressed
//! class, a 20 bpm sinusoid with random phase (period 16 samples, so whole
//! cycles average out) and Gaussian noise.
//!
//! Skin conductance: a random tonic level with linear drift, plus phasic
//! responses (fast rise, slow decay) that only stressed windows get, at a
//! Poisson rate proportional to `sep`, plus Gaussian noise.
//!
//! With `sep = 0` both classes are drawn from the same distribution.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{Dataset, DEFAULT_CHANNELS};
use crate::{rng, Error, Result, Window};

const HR_BASELINE: f64 = 70.0;
const HR_STRESS_SHIFT: f64 = 10.0;
const HR_SWING: f64 = 20.0;
const HR_PERIOD: f64 = 16.0;
const HR_NOISE: f64 = 10.0;
const SC_NOISE: f64 = 0.1;
/// Expected phasic responses per stressed window at `sep = 1`.
const SC_BUMP_RATE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_windows: usize,
    pub window_len: usize,
    /// Strength of the class signal; `0` makes the classes identical.
    pub sep: f64,
    /// Multiplier on the per-channel noise standard deviations.
    pub noise: f64,
    /// Fraction of stressed windows.
    pub balance: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_windows: 1000,
            window_len: 32,
            sep: 1.0,
            noise: 1.0,
            balance: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_windows < 2 {
            return Err(Error::config("need at least 2 windows"));
        }
        if self.window_len == 0 {
            return Err(Error::config("window length must be positive"));
        }
        if !(0.0..).contains(&self.sep) || !(0.0..).contains(&self.noise) {
            return Err(Error::config("sep and noise must be non-negative"));
        }
        if !(self.balance > 0.0 && self.balance < 1.0) {
            return Err(Error::config(format!("balance {} outside (0, 1)", self.balance)));
        }
        Ok(())
    }
}

pub fn synth_generate(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = rng::chacha(config.seed);
    let n = config.n_windows;
    let stressed = ((config.balance * n as f64).round() as usize).clamp(1, n - 1);
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < stressed)).collect();
    labels.shuffle(&mut rng);

    let hr_noise = Normal::new(0.0, HR_NOISE * config.noise).map_err(|e| Error::config(e.to_string()))?;
    let sc_noise = Normal::new(0.0, SC_NOISE * config.noise).map_err(|e| Error::config(e.to_string()))?;
    let drift = Normal::new(0.0, 0.01).expect("valid drift");
    let len = config.window_len;

    let windows = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let y = f64::from(label);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let hr: Vec<f32> = (0..len)
                .map(|t| {
                    let swing = HR_SWING * (std::f64::consts::TAU * t as f64 / HR_PERIOD + phase).sin();
                    (HR_BASELINE + config.sep * HR_STRESS_SHIFT * y + swing + hr_noise.sample(&mut rng)) as f32
                })
                .collect();

            let tonic = rng.random_range(2.0..6.0);
            let slope = drift.sample(&mut rng);
            let mut sc: Vec<f64> = (0..len).map(|t| tonic + slope * t as f64).collect();
            let rate = SC_BUMP_RATE * config.sep * y;
            let bumps = if rate > 0.0 {
                Poisson::new(rate).map(|p| p.sample(&mut rng) as usize).unwrap_or(0)
            } else {
                0
            };
            for _ in 0..bumps {
                let onset = rng.random_range(0.0..len as f64);
                let amplitude = rng.random_range(0.3..0.8);
                add_phasic(&mut sc, onset, amplitude);
            }
            let sc: Vec<f32> = sc.into_iter().map(|v| (v + sc_noise.sample(&mut rng)) as f32).collect();
            Window::new(format!("w{i}"), vec![hr, sc], Some(label))
        })
        .collect::<Result<Vec<_>>>()?;

    Dataset::new(windows, DEFAULT_CHANNELS.iter().map(|s| s.to_string()).collect())
}

/// Bi-exponential skin-conductance response peaking at `amplitude`.
fn add_phasic(signal: &mut [f64], onset: f64, amplitude: f64) {
    const RISE: f64 = 1.0;
    const DECAY: f64 = 4.0;
    let peak_t = (DECAY * RISE / (DECAY - RISE)) * (DECAY / RISE).ln();
    let peak = (-peak_t / DECAY).exp() - (-peak_t / RISE).exp();
    for (t, v) in signal.iter_mut().enumerate() {
        let dt = t as f64 - onset;
        if dt > 0.0 {
            *v += amplitude * ((-dt / DECAY).exp() - (-dt / RISE).exp()) / peak;
        }
    }
}
