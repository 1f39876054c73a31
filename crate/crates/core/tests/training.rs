use bal::al::{pretrain, split_dataset, ALConfig, Seeds};
use bal::data::{synth_generate, NormStats, SynthConfig};
use bal::nn::{fit, save, Arch, Network, OptimizerHyper};
use bal::Window;

/// Train split, normalized test split.
fn protocol(config: &SynthConfig, holdout: usize, seed: u64) -> (Vec<Window>, Vec<Window>) {
    let ds = synth_generate(config).unwrap();
    let (data, test) = ds.windows.split_at(ds.len() - holdout);
    let (train, _) = split_dataset(data, 0.3, Seeds::from_master(seed).split).unwrap();
    let stats = NormStats::fit(&train).unwrap();
    (stats.apply_all(&train), stats.apply_all(test))
}

#[test]
fn loss_falls_on_separable_data() {
    let ds = synth_generate(&SynthConfig {
        n_windows: 240,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let stats = NormStats::fit(&ds.windows).unwrap();
    let train = stats.apply_all(&ds.windows);
    let mut net = Network::<f32>::init(Arch::default(), 3).unwrap();
    let trace = fit(&mut net, &train, 10, &OptimizerHyper::default(), 3).unwrap();
    assert_eq!(trace.len(), 10);
    assert!(trace[9] < trace[0], "{trace:?}");
}

#[test]
fn separable_baseline_mean_is_high() {
    let config = SynthConfig {
        seed: 2024,
        ..Default::default()
    };
    let accs: Vec<f64> = (0..5)
        .map(|seed| {
            let (train, test) = protocol(&config, 200, seed);
            let cfg = ALConfig {
                seeds: Seeds::from_master(seed),
                ..ALConfig::default()
            };
            pretrain(&train, &test, &cfg).unwrap().1
        })
        .collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!(mean >= 85.0, "{accs:?}");
}

#[test]
fn indistinguishable_classes_give_chance_accuracy() {
    let config = SynthConfig {
        sep: 0.0,
        n_windows: 2000,
        seed: 11,
        ..Default::default()
    };
    let (train, test) = protocol(&config, 1000, 0);
    let (_, acc) = pretrain(&train, &test, &ALConfig::default()).unwrap();
    assert!((45.0..=55.0).contains(&acc), "{acc}");
}

#[test]
fn pretraining_is_deterministic() {
    let config = SynthConfig {
        n_windows: 300,
        seed: 8,
        ..Default::default()
    };
    let (train, test) = protocol(&config, 100, 4);
    let cfg = ALConfig {
        seeds: Seeds::from_master(4),
        ..ALConfig::default()
    };
    let (a, acc_a) = pretrain(&train, &test, &cfg).unwrap();
    let (b, acc_b) = pretrain(&train, &test, &cfg).unwrap();
    assert_eq!(save(&a), save(&b));
    assert_eq!(acc_a, acc_b);
}
