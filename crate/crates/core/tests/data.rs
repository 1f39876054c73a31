use bal::data::{
    load_ndjson, read_ndjson, save_ndjson, synth_generate, window_signal, write_ndjson, Dataset, NormStats, SynthConfig,
};
use bal::Window;
use proptest::prelude::*;

fn window_strategy(channels: usize, len: usize) -> impl Strategy<Value = (Vec<Vec<f32>>, Option<u8>)> {
    (
        prop::collection::vec(prop::collection::vec(-1e6f32..1e6, len), channels),
        prop::option::of(0u8..2),
    )
}

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (1usize..4, 1usize..40)
        .prop_flat_map(|(c, l)| prop::collection::vec(window_strategy(c, l), 1..12))
        .prop_map(|ws| {
            let windows = ws
                .into_iter()
                .enumerate()
                .map(|(i, (ch, label))| Window::new(format!("id-{i}"), ch, label).unwrap())
                .collect();
            Dataset::new(windows, Vec::new()).unwrap()
        })
}

proptest! {
    #[test]
    fn ndjson_round_trip(ds in dataset_strategy()) {
        let mut buf = Vec::new();
        write_ndjson(&ds, &mut buf).unwrap();
        let back = read_ndjson(buf.as_slice()).unwrap();
        prop_assert_eq!(back.windows, ds.windows);
    }

    #[test]
    fn window_count_formula(n in 1usize..300, len in 1usize..64, stride in 1usize..40) {
        prop_assume!(n >= len);
        let streams = vec![(0..n).map(|i| i as f32).collect::<Vec<_>>()];
        let ws = window_signal(&streams, len, stride, &vec![0; n]).unwrap();
        prop_assert_eq!(ws.len(), (n - len) / stride + 1);
        for (k, w) in ws.iter().enumerate() {
            prop_assert_eq!(w.channels[0][0], (k * stride) as f32);
            prop_assert_eq!(w.len(), len);
        }
    }
}

#[test]
fn short_stream_rejected() {
    assert!(window_signal(&[vec![0.0; 10]], 32, 32, &[0; 10]).is_err());
}

#[test]
fn synthetic_dataset_survives_a_file_round_trip() {
    let ds = synth_generate(&SynthConfig {
        n_windows: 50,
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synth.ndjson");
    save_ndjson(&ds, &path).unwrap();
    let back = load_ndjson(&path).unwrap();
    assert_eq!(back.windows, ds.windows);
    assert_eq!(back.channel_names, ["hr", "sc"]);
}

#[test]
fn normalization_stats_survive_a_round_trip() {
    let ds = synth_generate(&SynthConfig {
        n_windows: 20,
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    let stats = NormStats::fit(&ds.windows).unwrap();
    let mut normalized = Dataset::new(stats.apply_all(&ds.windows), ds.channel_names.clone()).unwrap();
    normalized.normalization = Some(stats.clone());
    let mut buf = Vec::new();
    write_ndjson(&normalized, &mut buf).unwrap();
    let back = read_ndjson(buf.as_slice()).unwrap();
    assert_eq!(back.normalization, Some(stats));
    assert!(back.is_normalized());
}

#[test]
fn missing_file_is_an_error() {
    assert!(load_ndjson("/nonexistent/never.ndjson").is_err());
}
