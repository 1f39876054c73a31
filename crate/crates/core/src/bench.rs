//! Latency, training-time and size measurements.
//!
//! All timings are wall-clock ([`Instant`]) and reported as medians over
//! repeated runs, after discarding warm-up runs. Scoring runs on a single
//! worker thread unless [`BenchConfig::parallel`] is set.

use std::fmt;
use std::time::Instant;

use crate::acquisition::{score_pool, AcquisitionKind};
use crate::nn::{fit, save, DropoutMode, Network, OptimizerHyper};
use crate::{Error, Result, Window};

pub const CSV_HEADER: &str = "metric,value,unit,samples";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Per-window MC-dropout passes.
    pub passes: usize,
    /// Timed single-window forward passes.
    pub inference_windows: usize,
    /// Runs discarded before timing starts.
    pub warmup: usize,
    /// Timed training epochs.
    pub epochs: usize,
    /// Timed full-pool scoring runs.
    pub scoring_repeats: usize,
    pub parallel: bool,
    pub optimizer: OptimizerHyper,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            passes: 10,
            inference_windows: 1000,
            warmup: 10,
            epochs: 5,
            scoring_repeats: 3,
            parallel: false,
            optimizer: OptimizerHyper::default(),
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.passes == 0 {
            return Err(Error::config("passes must be positive"));
        }
        if self.inference_windows == 0 || self.epochs == 0 || self.scoring_repeats == 0 {
            return Err(Error::config("sample counts must be positive"));
        }
        self.optimizer.validate()
    }
}

/// Median and 95th percentile of a set of timings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub median: f64,
    pub p95: f64,
    pub samples: usize,
}

impl Timing {
    /// Nearest-rank percentiles; the median of an even count averages the
    /// two middle values.
    pub fn from_samples(mut samples: Vec<f64>) -> Option<Timing> {
        if samples.is_empty() {
            return None;
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let median = if n % 2 == 1 {
            samples[n / 2]
        } else {
            0.5 * (samples[n / 2 - 1] + samples[n / 2])
        };
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Some(Timing {
            median,
            p95: samples[rank - 1],
            samples: n,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// Deterministic single-window forward pass, milliseconds.
    pub inference_ms: Timing,
    /// `passes` stochastic forward passes over one window, milliseconds.
    pub mc_window_ms: Timing,
    /// One training epoch over the dataset, seconds.
    pub epoch_s: Timing,
    /// One stochastic pass over the whole pool (scoring time divided by
    /// `passes`), seconds.
    pub pool_pass_s: Timing,
    /// Full acquisition scoring of the pool, seconds.
    pub pool_scoring_s: Timing,
    pub pool_size: usize,
    pub passes: usize,
    pub model_bytes: usize,
    pub parallel: bool,
    pub hardware: String,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let mut row = |metric: &str, value: String, unit: &str, samples: usize| {
            out.push_str(&format!("{metric},{value},{unit},{samples}\n"));
        };
        let t = |metric: &str, timing: &Timing, unit: &str, row: &mut dyn FnMut(&str, String, &str, usize)| {
            row(
                &format!("{metric}_median"),
                format!("{:.6}", timing.median),
                unit,
                timing.samples,
            );
            row(
                &format!("{metric}_p95"),
                format!("{:.6}", timing.p95),
                unit,
                timing.samples,
            );
        };
        t("inference", &self.inference_ms, "ms", &mut row);
        t("mc_window", &self.mc_window_ms, "ms", &mut row);
        t("epoch", &self.epoch_s, "s", &mut row);
        t("pool_pass", &self.pool_pass_s, "s", &mut row);
        t("pool_scoring", &self.pool_scoring_s, "s", &mut row);
        row("pool_size", self.pool_size.to_string(), "windows", 1);
        row("passes", self.passes.to_string(), "count", 1);
        row("model_size", self.model_bytes.to_string(), "bytes", 1);
        row("parallel", self.parallel.to_string(), "flag", 1);
        row("hardware", self.hardware.replace([',', '\n'], " "), "text", 1);
        out
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hardware: {}", self.hardware)?;
        writeln!(f, "{:<34} {:>12} {:>12} {:>8}", "metric", "median", "p95", "samples")?;
        let rows = [
            ("inference per window (ms)", &self.inference_ms),
            (
                &*format!("{} MC passes per window (ms)", self.passes),
                &self.mc_window_ms,
            ),
            ("training epoch (s)", &self.epoch_s),
            ("stochastic pass over pool (s)", &self.pool_pass_s),
            ("pool scoring (s)", &self.pool_scoring_s),
        ];
        for (name, t) in rows {
            writeln!(f, "{:<34} {:>12.4} {:>12.4} {:>8}", name, t.median, t.p95, t.samples)?;
        }
        writeln!(f, "pool size: {} windows, T = {}", self.pool_size, self.passes)?;
        write!(
            f,
            "model size: {} bytes ({:.1} kB)",
            self.model_bytes,
            self.model_bytes as f64 / 1000.0
        )
    }
}

/// A short description of the machine the numbers came from.
pub fn hardware_descriptor() -> String {
    let cpus = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let model = std::fs::read_to_string("/proc/cpuinfo").ok().and_then(|info| {
        info.lines()
            .find(|l| l.starts_with("model name"))
            .and_then(|l| l.split(':').nth(1))
            .map(|s| s.trim().to_owned())
    });
    let mut desc = format!(
        "{}-{}, {} logical cpu(s)",
        std::env::consts::ARCH,
        std::env::consts::OS,
        cpus
    );
    if let Some(model) = model {
        desc.push_str(&format!(", {model}"));
    }
    desc
}

fn run_scoped<T: Send>(parallel: bool, job: impl FnOnce() -> T + Send) -> Result<T> {
    if parallel {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Times `pool` scoring with `passes` MC-dropout passes, `repeats` times
/// after one warm-up run. Returns seconds per full scoring run.
pub fn time_pool_scoring(
    net: &Network<f32>,
    pool: &[Window],
    passes: usize,
    repeats: usize,
    parallel: bool,
) -> Result<Timing> {
    if pool.is_empty() {
        return Err(Error::precondition("cannot time scoring of an empty pool"));
    }
    run_scoped(parallel, || {
        let mut samples = Vec::with_capacity(repeats);
        for i in 0..=repeats {
            let start = Instant::now();
            score_pool(net, pool, AcquisitionKind::VariationRatios, passes, i as u64, 0)?;
            if i > 0 {
                samples.push(start.elapsed().as_secs_f64());
            }
        }
        Ok(Timing::from_samples(samples).expect("repeats > 0"))
    })?
}

/// Times single-window inference, MC inference, training epochs and pool
/// scoring for `net` on `windows`.
///
/// Inference samples cycle through `windows` when there are fewer than
/// `inference_windows`. Epoch timing trains a copy of `net`; unlabeled
/// windows are treated as class 0 since only the timing is kept.
pub fn bench_report(net: &Network<f32>, windows: &[Window], config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    if windows.is_empty() {
        return Err(Error::precondition("benchmark needs at least one window"));
    }
    let total = config.warmup + config.inference_windows;

    let mut inference = Vec::with_capacity(config.inference_windows);
    for (i, w) in windows.iter().cycle().take(total).enumerate() {
        let start = Instant::now();
        std::hint::black_box(net.forward(std::hint::black_box(w), DropoutMode::Off)?);
        if i >= config.warmup {
            inference.push(millis(start));
        }
    }

    let mut mc = Vec::with_capacity(config.inference_windows);
    for (i, w) in windows.iter().cycle().take(total).enumerate() {
        let start = Instant::now();
        std::hint::black_box(crate::bayes::mc_predict(net, w, config.passes, config.seed ^ i as u64)?);
        if i >= config.warmup {
            mc.push(millis(start));
        }
    }

    let train: Vec<Window> = windows
        .iter()
        .map(|w| Window {
            label: Some(w.label.unwrap_or(0)),
            ..w.clone()
        })
        .collect();
    let mut trainee = net.clone();
    let mut epochs = Vec::with_capacity(config.epochs);
    for i in 0..=config.epochs {
        let start = Instant::now();
        fit(
            &mut trainee,
            &train,
            1,
            &config.optimizer,
            config.seed.wrapping_add(i as u64),
        )?;
        if i > 0 {
            epochs.push(start.elapsed().as_secs_f64());
        }
    }

    let scoring = time_pool_scoring(net, windows, config.passes, config.scoring_repeats, config.parallel)?;
    let per_pass = Timing {
        median: scoring.median / config.passes as f64,
        p95: scoring.p95 / config.passes as f64,
        samples: scoring.samples,
    };

    Ok(BenchReport {
        inference_ms: Timing::from_samples(inference).expect("inference samples"),
        mc_window_ms: Timing::from_samples(mc).expect("mc samples"),
        epoch_s: Timing::from_samples(epochs).expect("epoch samples"),
        pool_pass_s: per_pass,
        pool_scoring_s: scoring,
        pool_size: windows.len(),
        passes: config.passes,
        model_bytes: save(net).len(),
        parallel: config.parallel,
        hardware: hardware_descriptor(),
    })
}
