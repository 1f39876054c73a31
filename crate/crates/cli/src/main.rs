use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bal::acquisition::AcquisitionKind;
use bal::al::{eta_sweep, evaluate, split_dataset, ALConfig};
use bal::bench::{bench_report, BenchConfig};
use bal::data::{load_ndjson, save_ndjson, synth_generate, window_signal, Dataset, NormStats, SynthConfig};
use bal::nn::{fit, load_file, save_file, Arch, DropoutPlacement, Network, OptimizerHyper};
use bal::{rng, Window};
use bal_service::{ServiceConfig, ServiceState};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bal", version, about = "Bayesian active learning for stress detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic heart-rate / skin-conductance dataset.
    Synth(SynthArgs),
    /// Window a raw CSV recording into an NDJSON dataset.
    Convert(ConvertArgs),
    /// Split a dataset into train, pool and test files, z-scored with train statistics.
    Prepare(PrepareArgs),
    /// Train a model on a labeled dataset.
    Train(TrainArgs),
    /// Report MC-dropout accuracy of a model on a labeled dataset.
    Evaluate(EvaluateArgs),
    /// Run the η sweep and write the accuracy grid.
    Sweep(SweepArgs),
    /// Measure inference latency, training time and model size.
    Bench(BenchArgs),
    /// Serve the labeling API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    window_len: usize,
    #[arg(long, default_value_t = 1.0)]
    sep: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 0.5)]
    balance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvertArgs {
    /// CSV with a header row: one column per channel plus a label column.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value_t = 32)]
    len: usize,
    #[arg(long, default_value_t = 16)]
    stride: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PrepareArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Fraction of the remaining windows used for pre-training.
    #[arg(long, default_value_t = 0.3)]
    split_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Placement {
    BeforeOutput,
    BeforeEveryDense,
}

impl From<Placement> for DropoutPlacement {
    fn from(p: Placement) -> Self {
        match p {
            Placement::BeforeOutput => DropoutPlacement::BeforeOutput,
            Placement::BeforeEveryDense => DropoutPlacement::BeforeEveryDense,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Continue from this model instead of a fresh initialization.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 0.3)]
    dropout: f32,
    #[arg(long, value_enum, default_value_t = Placement::BeforeOutput)]
    placement: Placement,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 10)]
    passes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    /// Raw (not yet normalized) labeled dataset.
    #[arg(long)]
    data: PathBuf,
    /// Held-out test set; carved from `--data` when absent.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "max_entropy,bald,variation_ratios,random"
    )]
    kinds: Vec<AcquisitionKind>,
    #[arg(long, value_delimiter = ',', default_value = "0.0,0.2,0.4,0.6,0.8,1.0")]
    etas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 10)]
    passes: usize,
    #[arg(long, default_value_t = 32)]
    window_batch: usize,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 10)]
    pretrain_epochs: usize,
    #[arg(long, default_value_t = 0.3)]
    split_ratio: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 10)]
    passes: usize,
    #[arg(long, default_value_t = 1000)]
    windows: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    /// Let pool scoring use every core instead of one.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Unlabeled windows to query from; any labels in the file are ignored.
    #[arg(long)]
    pool: PathBuf,
    /// Labeled windows included in every retrain.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Labeled windows used to report test accuracy.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long, default_value = "variation_ratios")]
    acq: AcquisitionKind,
    #[arg(long, default_value_t = 10)]
    passes: usize,
    #[arg(long)]
    auto_retrain_every: Option<usize>,
    #[arg(long, default_value_t = 10)]
    retrain_epochs: usize,
    /// Cap oracle labels at this fraction of the pool.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where each retrained model and the labeled set are written.
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Synth(a) => synth(a),
        Command::Convert(a) => convert(a),
        Command::Prepare(a) => prepare(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => serve(a),
    }
}

fn load(path: &Path) -> Result<Dataset> {
    load_ndjson(path).with_context(|| format!("reading {}", path.display()))
}

fn save(dataset: &Dataset, path: &Path) -> Result<()> {
    save_ndjson(dataset, path).with_context(|| format!("writing {}", path.display()))
}

fn load_model(path: &Path) -> Result<Network<f32>> {
    load_file(path).with_context(|| format!("reading model {}", path.display()))
}

fn synth(a: SynthArgs) -> Result<()> {
    let ds = synth_generate(&SynthConfig {
        n_windows: a.n,
        window_len: a.window_len,
        sep: a.sep,
        noise: a.noise,
        balance: a.balance,
        seed: a.seed,
    })?;
    save(&ds, &a.out)?;
    println!("wrote {} windows to {}", ds.len(), a.out.display());
    Ok(())
}

/// Binary task: neutral against interruption or time pressure.
fn parse_label(raw: &str) -> Option<u8> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "0" | "n" | "neutral" => Some(0),
        "1" | "i" | "t" | "interruption" | "time_pressure" | "stressed" => Some(1),
        _ => None,
    }
}

fn convert(a: ConvertArgs) -> Result<()> {
    let mut reader = csv::Reader::from_path(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let headers = reader.headers()?.clone();
    let label_at = headers
        .iter()
        .position(|h| h == a.label_column)
        .with_context(|| format!("no `{}` column", a.label_column))?;
    let names: Vec<String> = headers
        .iter()
        .filter(|h| *h != a.label_column)
        .map(str::to_owned)
        .collect();
    if names.is_empty() {
        bail!("no signal columns besides `{}`", a.label_column);
    }
    let mut streams = vec![Vec::new(); names.len()];
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut c = 0;
        for (i, field) in record.iter().enumerate() {
            if i == label_at {
                let label = parse_label(field).with_context(|| format!("row {}: bad label `{field}`", row + 2))?;
                labels.push(label);
            } else {
                let v: f32 = field
                    .trim()
                    .parse()
                    .with_context(|| format!("row {}: bad sample `{field}`", row + 2))?;
                streams[c].push(v);
                c += 1;
            }
        }
    }
    let windows = window_signal(&streams, a.len, a.stride, &labels)?;
    let ds = Dataset::new(windows, names)?;
    save(&ds, &a.out)?;
    println!("wrote {} windows to {}", ds.len(), a.out.display());
    Ok(())
}

fn prepare(a: PrepareArgs) -> Result<()> {
    let ds = load(&a.data)?;
    if ds.is_normalized() {
        bail!("{} is already normalized", a.data.display());
    }
    if !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
        bail!("test fraction {} outside (0, 1)", a.test_fraction);
    }
    let (rest, test) = split_dataset(&ds.windows, 1.0 - a.test_fraction, rng::derive_str(a.seed, "test"))?;
    let (train, pool) = split_dataset(&rest, a.split_ratio, rng::derive_str(a.seed, "split"))?;
    let stats = NormStats::fit(&train)?;
    std::fs::create_dir_all(&a.out_dir)?;
    for (name, windows) in [("train", &train), ("pool", &pool), ("test", &test)] {
        let mut part = Dataset::new(stats.apply_all(windows), ds.channel_names.clone())?;
        part.normalization = Some(stats.clone());
        save(&part, &a.out_dir.join(format!("{name}.ndjson")))?;
    }
    println!(
        "train {} / pool {} / test {} in {}",
        train.len(),
        pool.len(),
        test.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let ds = load(&a.data)?;
    let (channels, len) = ds.shape().context("dataset is empty")?;
    let mut net = match &a.init {
        Some(path) => load_model(path)?,
        None => {
            let arch = Arch::new(channels, len)?
                .with_dropout(a.dropout)?
                .with_placement(a.placement.into());
            Network::init(arch, rng::derive_str(a.seed, "init"))?
        }
    };
    let hyper = OptimizerHyper {
        learning_rate: a.lr,
        batch_size: a.batch,
        ..Default::default()
    };
    let losses = fit(
        &mut net,
        &ds.windows,
        a.epochs,
        &hyper,
        rng::derive_str(a.seed, "train"),
    )?;
    save_file(&net, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let (Some(first), Some(last)) = (losses.first(), losses.last()) {
        println!("loss {first:.4} -> {last:.4} over {} epochs", losses.len());
    }
    println!("saved {}", a.out.display());
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let net = load_model(&a.model)?;
    let ds = load(&a.data)?;
    let accuracy = evaluate(&net, &ds.windows, a.passes, a.seed)?;
    println!("accuracy {accuracy:.2}% on {} windows", ds.len());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let ds = load(&a.data)?;
    if ds.is_normalized() {
        bail!("the sweep normalizes each split itself; pass the raw dataset");
    }
    let (data, test): (Vec<Window>, Vec<Window>) = match &a.test {
        Some(path) => (ds.windows, load(path)?.windows),
        None => split_dataset(&ds.windows, 1.0 - a.test_fraction, a.data_seed)?,
    };
    let config = ALConfig {
        passes: a.passes,
        window_batch: a.window_batch,
        epochs_per_iteration: a.epochs,
        pretrain_epochs: a.pretrain_epochs,
        split_ratio: a.split_ratio,
        ..Default::default()
    };
    config.validate()?;
    log::info!(
        "sweeping {} kinds x {} etas x {} seeds on {} windows, {} held out",
        a.kinds.len(),
        a.etas.len(),
        a.seeds.len(),
        data.len(),
        test.len()
    );
    let report = eta_sweep(&data, &test, &a.kinds, &a.etas, &a.seeds, &config)?;
    let companion = report.write_csv(&a.out)?;
    print!("{}", report.to_csv());
    println!("wrote {} and {}", a.out.display(), companion.display());
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let net = load_model(&a.model)?;
    let ds = load(&a.data)?;
    let config = BenchConfig {
        passes: a.passes,
        inference_windows: a.windows,
        epochs: a.epochs,
        parallel: a.parallel,
        ..Default::default()
    };
    let report = bench_report(&net, &ds.windows, &config)?;
    println!("{report}");
    std::fs::write(&a.out, report.to_csv()).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let pool = load(&a.pool)?.windows;
    let pretrain = match &a.train {
        Some(p) => load(p)?.windows,
        None => Vec::new(),
    };
    let test = a.test.as_deref().map(load).transpose()?.map(|d| d.windows);
    let config = ServiceConfig {
        kind: a.acq,
        passes: a.passes,
        auto_retrain_every: a.auto_retrain_every,
        retrain_epochs: a.retrain_epochs,
        eta: a.eta,
        seed: a.seed,
        checkpoint_dir: a.checkpoint_dir,
        ..Default::default()
    };
    if let Some(eta) = config.eta {
        if !(0.0..=1.0).contains(&eta) {
            bail!("eta {eta} outside [0, 1]");
        }
    }
    let state = ServiceState::new(Some(model), pool, pretrain, test, config)?;
    let addr = SocketAddr::new(a.host, a.port);
    tokio::runtime::Runtime::new()?.block_on(bal_service::serve(bal_service::shared(state), addr))?;
    Ok(())
}
