use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::{AdamState, Arch, OptimizerHyper, ParamSet, Real};
use crate::{rng, Error, Result, Window};

/// Whether dropout masks are drawn on a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    /// Deterministic pass; dropout is the identity.
    Off,
    /// Masks drawn from a `ChaCha8` stream seeded with the given value.
    Stochastic(u64),
}

/// Weights, biases and optimizer state of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<F: Real = f32> {
    arch: Arch,
    params: ParamSet<F>,
    optimizer: AdamState<F>,
}

/// The default single-precision model.
pub type ModelParams = Network<f32>;

/// Gradient of the mean batch loss with respect to every parameter.
#[derive(Debug, Clone)]
pub struct Gradients<F: Real> {
    pub params: ParamSet<F>,
    pub loss: F,
}

const CONV_NAMES: [&str; 4] = ["conv1", "conv2", "conv3", "conv4"];
const DENSE_NAMES: [&str; 3] = ["dense1", "dense2", "dense3"];
const LOG_CLAMP: f64 = 1e-12;

/// Every intermediate value of one forward pass.
#[derive(Debug, Clone)]
pub(crate) struct Trace<F> {
    /// Input of each conv layer (the window, then each pool output).
    pub conv_in: [Vec<F>; 4],
    pub conv_pre: [Vec<F>; 4],
    /// Winning input index of every pool output.
    pub pool_idx: [Vec<usize>; 3],
    /// What each dense layer actually sees, after masking.
    pub dense_in: [Vec<F>; 3],
    pub masks: [Option<Vec<F>>; 3],
    pub dense_pre: [Vec<F>; 3],
    pub probs: Vec<F>,
}

fn ensure_finite<F: Real>(values: &[F], layer: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric { layer })
    }
}

fn relu<F: Real>(values: &[F]) -> Vec<F> {
    values.iter().map(|&v| v.max(F::zero())).collect()
}

/// Same-padded 1D convolution, kernel 3. `x` is `[cin][len]`.
fn conv1d<F: Real>(x: &[F], w: &[F], b: &[F], cin: usize, len: usize) -> Vec<F> {
    let cout = b.len();
    let mut out = vec![F::zero(); cout * len];
    for o in 0..cout {
        let row = &mut out[o * len..(o + 1) * len];
        row.iter_mut().for_each(|v| *v = b[o]);
        for i in 0..cin {
            let xi = &x[i * len..(i + 1) * len];
            let wk = &w[(o * cin + i) * 3..(o * cin + i) * 3 + 3];
            // tap k reads x[t + k - 1]
            for t in 1..len {
                row[t] += wk[0] * xi[t - 1];
            }
            for t in 0..len {
                row[t] += wk[1] * xi[t];
            }
            for t in 0..len - 1 {
                row[t] += wk[2] * xi[t + 1];
            }
        }
    }
    out
}

fn max_pool<F: Real>(x: &[F], channels: usize, len: usize) -> (Vec<F>, Vec<usize>) {
    let half = len / 2;
    let mut out = Vec::with_capacity(channels * half);
    let mut idx = Vec::with_capacity(channels * half);
    for c in 0..channels {
        for t in 0..half {
            let a = c * len + 2 * t;
            let (v, i) = if x[a + 1] > x[a] { (x[a + 1], a + 1) } else { (x[a], a) };
            out.push(v);
            idx.push(i);
        }
    }
    (out, idx)
}

fn dense<F: Real>(x: &[F], w: &[F], b: &[F]) -> Vec<F> {
    let n_in = x.len();
    b.iter()
        .enumerate()
        .map(|(o, &bias)| {
            w[o * n_in..(o + 1) * n_in]
                .iter()
                .zip(x)
                .fold(bias, |acc, (&wi, &xi)| acc + wi * xi)
        })
        .collect()
}

pub(crate) fn softmax<F: Real>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Inverted-dropout mask: `0` with probability `p`, otherwise `1 / (1 - p)`.
pub(crate) fn sample_mask<F: Real, R: Rng>(len: usize, p: f32, rng: &mut R) -> Vec<F> {
    let keep = F::lit(1.0 / (1.0 - f64::from(p)));
    (0..len)
        .map(|_| if rng.random::<f32>() < p { F::zero() } else { keep })
        .collect()
}

impl<F: Real> Network<F> {
    /// A network with every weight and bias set to zero.
    pub fn zeros(arch: Arch) -> Result<Self> {
        arch.validate()?;
        Ok(Network {
            params: ParamSet::zeros(&arch),
            optimizer: AdamState::new(&arch),
            arch,
        })
    }

    /// He-uniform weights and zero biases, drawn from `seed`.
    pub fn init(arch: Arch, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let mut rng = rng::chacha(seed);
        for k in 0..4 {
            let (_, cin, kk) = arch.conv_shape(k);
            fill_he(&mut net.params.conv_w[k], cin * kk, &mut rng);
        }
        for k in 0..3 {
            let (_, n_in) = arch.dense_shape(k);
            fill_he(&mut net.params.dense_w[k], n_in, &mut rng);
        }
        Ok(net)
    }

    /// Assembles a network from parts; shapes must match `arch`.
    pub fn from_parts(arch: Arch, params: ParamSet<F>, optimizer: AdamState<F>) -> Result<Self> {
        arch.validate()?;
        let reference = ParamSet::<F>::zeros(&arch);
        if !reference.same_shape(&params) || !reference.same_shape(&optimizer.m) || !reference.same_shape(&optimizer.v)
        {
            return Err(Error::config("parameter shapes do not match the architecture"));
        }
        Ok(Network {
            arch,
            params,
            optimizer,
        })
    }

    pub fn arch(&self) -> &Arch {
        &self.arch
    }

    pub fn params(&self) -> &ParamSet<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<F> {
        &mut self.params
    }

    pub fn optimizer(&self) -> &AdamState<F> {
        &self.optimizer
    }

    /// Replaces the dropout probability, keeping all weights.
    pub fn set_dropout(&mut self, p: f32) -> Result<()> {
        self.arch = self.arch.with_dropout(p)?;
        Ok(())
    }

    /// Converts every parameter and moment to another precision.
    pub fn cast<G: Real>(&self) -> Network<G> {
        Network {
            arch: self.arch,
            params: self.params.cast(),
            optimizer: AdamState {
                m: self.optimizer.m.cast(),
                v: self.optimizer.v.cast(),
                step: self.optimizer.step,
            },
        }
    }

    fn check_shape(&self, window: &Window) -> Result<()> {
        let (c, l) = (window.num_channels(), window.len());
        if c != self.arch.in_channels || l != self.arch.window_len || window.channels.iter().any(|r| r.len() != l) {
            return Err(Error::Config(format!(
                "window `{}` is {c}x{l}, model expects {}x{}",
                window.id, self.arch.in_channels, self.arch.window_len
            )));
        }
        Ok(())
    }

    /// Class probabilities for one window.
    pub fn forward(&self, window: &Window, mode: DropoutMode) -> Result<Vec<F>> {
        let mut masks = self.mask_source(mode);
        Ok(self.trace(window, &mut masks)?.probs)
    }

    fn mask_source(&self, mode: DropoutMode) -> Option<rand_chacha::ChaCha8Rng> {
        match mode {
            DropoutMode::Off => None,
            DropoutMode::Stochastic(seed) => Some(rng::chacha(seed)),
        }
    }

    /// Runs the forward pass and keeps every intermediate. Masks are drawn
    /// from `masks` in layer order when it is `Some`.
    pub(crate) fn trace(&self, window: &Window, masks: &mut Option<rand_chacha::ChaCha8Rng>) -> Result<Trace<F>> {
        self.check_shape(window)?;
        let arch = &self.arch;
        let p = &self.params;

        let x0: Vec<F> = window
            .channels
            .iter()
            .flatten()
            .map(|&v| F::lit(f64::from(v)))
            .collect();
        ensure_finite(&x0, "input")?;

        let mut conv_in: [Vec<F>; 4] = Default::default();
        let mut conv_pre: [Vec<F>; 4] = Default::default();
        let mut pool_idx: [Vec<usize>; 3] = Default::default();
        let mut current = x0;
        for k in 0..4 {
            let (cout, cin, _) = arch.conv_shape(k);
            let len = arch.conv_len(k);
            let z = conv1d(&current, &p.conv_w[k], &p.conv_b[k], cin, len);
            ensure_finite(&z, CONV_NAMES[k])?;
            let a = relu(&z);
            conv_in[k] = std::mem::take(&mut current);
            conv_pre[k] = z;
            if k < 3 {
                let (pooled, idx) = max_pool(&a, cout, len);
                pool_idx[k] = idx;
                current = pooled;
            } else {
                current = a;
            }
        }

        let mut dense_in: [Vec<F>; 3] = Default::default();
        let mut dense_pre: [Vec<F>; 3] = Default::default();
        let mut mask_out: [Option<Vec<F>>; 3] = Default::default();
        for k in 0..3 {
            if let Some(rng) = masks.as_mut() {
                if arch.placement.masks_dense_input(k) {
                    let mask: Vec<F> = sample_mask(current.len(), arch.dropout, rng);
                    current.iter_mut().zip(&mask).for_each(|(v, &m)| *v *= m);
                    mask_out[k] = Some(mask);
                }
            }
            let z = dense(&current, &p.dense_w[k], &p.dense_b[k]);
            ensure_finite(&z, DENSE_NAMES[k])?;
            dense_in[k] = std::mem::take(&mut current);
            if k < 2 {
                current = relu(&z);
            }
            dense_pre[k] = z;
        }

        let probs = softmax(&dense_pre[2]);
        ensure_finite(&probs, "softmax")?;
        Ok(Trace {
            conv_in,
            conv_pre,
            pool_idx,
            dense_in,
            masks: mask_out,
            dense_pre,
            probs,
        })
    }

    /// Mean cross-entropy over `batch` and its gradient.
    ///
    /// In `Stochastic(seed)` mode one mask stream is shared by the whole
    /// batch, drawn window by window in batch order, so the same seed always
    /// reproduces the same masks.
    pub fn grad<'a, I>(&self, batch: I, mode: DropoutMode) -> Result<Gradients<F>>
    where
        I: IntoIterator<Item = &'a Window>,
    {
        let batch: Vec<&Window> = batch.into_iter().collect();
        if batch.is_empty() {
            return Err(Error::precondition("gradient batch is empty"));
        }
        if let Some(w) = batch.iter().find(|w| w.label.is_none()) {
            return Err(Error::precondition(format!("window `{}` in batch has no label", w.id)));
        }
        let mut masks = self.mask_source(mode);
        let mut grads = ParamSet::zeros(&self.arch);
        let mut loss = 0.0f64;
        for window in &batch {
            let label = usize::from(window.label.unwrap_or_default());
            if label >= self.arch.classes {
                return Err(Error::precondition(format!("label {label} out of range")));
            }
            let trace = self.trace(window, &mut masks)?;
            loss -= trace.probs[label].as_f64().max(LOG_CLAMP).ln();
            self.backward(&trace, label, &mut grads);
        }
        let n = batch.len() as f64;
        grads.scale(F::lit(1.0 / n));
        Ok(Gradients {
            params: grads,
            loss: F::lit(loss / n),
        })
    }

    /// Accumulates the gradient of `-ln p[label]` for one traced window.
    fn backward(&self, trace: &Trace<F>, label: usize, grads: &mut ParamSet<F>) {
        let arch = &self.arch;
        let p = &self.params;

        // softmax + cross-entropy: dL/dz = p - onehot
        let mut dz: Vec<F> = trace.probs.clone();
        dz[label] -= F::one();

        let mut d_flat = Vec::new();
        for k in (0..3).rev() {
            let input = &trace.dense_in[k];
            let n_in = input.len();
            let gw = &mut grads.dense_w[k];
            let gb = &mut grads.dense_b[k];
            let w = &p.dense_w[k];
            let mut d_in = vec![F::zero(); n_in];
            for (o, &g) in dz.iter().enumerate() {
                if g == F::zero() {
                    continue;
                }
                gb[o] += g;
                let row = o * n_in;
                for i in 0..n_in {
                    gw[row + i] += g * input[i];
                    d_in[i] += w[row + i] * g;
                }
            }
            if let Some(mask) = &trace.masks[k] {
                d_in.iter_mut().zip(mask).for_each(|(d, &m)| *d *= m);
            }
            if k > 0 {
                let pre = &trace.dense_pre[k - 1];
                dz = d_in
                    .iter()
                    .zip(pre)
                    .map(|(&d, &z)| if z > F::zero() { d } else { F::zero() })
                    .collect();
            } else {
                d_flat = d_in;
            }
        }

        // conv stack, top down; d_out is the gradient w.r.t. the conv output
        // after ReLU (and before pooling)
        let mut d_out = d_flat;
        for k in (0..4).rev() {
            let (cout, cin, _) = arch.conv_shape(k);
            let len = arch.conv_len(k);
            let pre = &trace.conv_pre[k];
            let dz: Vec<F> = d_out
                .iter()
                .zip(pre)
                .map(|(&d, &z)| if z > F::zero() { d } else { F::zero() })
                .collect();
            let x = &trace.conv_in[k];
            let w = &p.conv_w[k];
            let gw = &mut grads.conv_w[k];
            let gb = &mut grads.conv_b[k];
            let need_dx = k > 0;
            let mut dx = if need_dx {
                vec![F::zero(); cin * len]
            } else {
                Vec::new()
            };
            for o in 0..cout {
                let dzo = &dz[o * len..(o + 1) * len];
                gb[o] += dzo.iter().copied().sum();
                for i in 0..cin {
                    let xi = &x[i * len..(i + 1) * len];
                    let base = (o * cin + i) * 3;
                    let mut g0 = F::zero();
                    let mut g1 = F::zero();
                    let mut g2 = F::zero();
                    for t in 1..len {
                        g0 += dzo[t] * xi[t - 1];
                    }
                    for t in 0..len {
                        g1 += dzo[t] * xi[t];
                    }
                    for t in 0..len - 1 {
                        g2 += dzo[t] * xi[t + 1];
                    }
                    gw[base] += g0;
                    gw[base + 1] += g1;
                    gw[base + 2] += g2;
                    if need_dx {
                        let dxi = &mut dx[i * len..(i + 1) * len];
                        let (w0, w1, w2) = (w[base], w[base + 1], w[base + 2]);
                        for t in 1..len {
                            dxi[t - 1] += w0 * dzo[t];
                        }
                        for t in 0..len {
                            dxi[t] += w1 * dzo[t];
                        }
                        for t in 0..len - 1 {
                            dxi[t + 1] += w2 * dzo[t];
                        }
                    }
                }
            }
            if need_dx {
                // route through the pool that produced this conv's input
                let idx = &trace.pool_idx[k - 1];
                let mut unpooled = vec![F::zero(); trace.conv_pre[k - 1].len()];
                for (j, &src) in idx.iter().enumerate() {
                    unpooled[src] += dx[j];
                }
                d_out = unpooled;
            }
        }
    }

    /// One Adam update with bias correction.
    pub fn adam_step(&mut self, grads: &ParamSet<F>, hyper: &OptimizerHyper) -> Result<()> {
        if !self.params.same_shape(grads) {
            return Err(Error::precondition("gradient shapes do not match parameters"));
        }
        hyper.validate()?;
        self.optimizer.step += 1;
        let step = self.optimizer.step;
        let AdamState { m, v, .. } = &mut self.optimizer;
        for (((p, g), m), v) in self
            .params
            .tensors_mut()
            .zip(grads.tensors())
            .zip(m.tensors_mut())
            .zip(v.tensors_mut())
        {
            super::adam_update(p, g, m, v, step, hyper);
        }
        Ok(())
    }
}

fn fill_he<F: Real, R: Rng>(weights: &mut [F], fan_in: usize, rng: &mut R) {
    let limit = (6.0 / fan_in as f64).sqrt();
    let dist = Uniform::new(-limit, limit).expect("positive fan-in");
    for w in weights {
        *w = F::lit(dist.sample(rng));
    }
}
