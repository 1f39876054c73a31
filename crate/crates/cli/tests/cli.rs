use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

fn bal(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_bal"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "bal {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn synth_prepare_train_evaluate_bench() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    bal(&["synth", "--n", "300", "--seed", "3", "--out", &path(d, "all.ndjson")]);
    let out = bal(&[
        "prepare",
        "--data",
        &path(d, "all.ndjson"),
        "--out-dir",
        &path(d, "split"),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("train 72 / pool 168 / test 60"));

    let train = bal::data::load_ndjson(d.join("split/train.ndjson")).unwrap();
    let pool = bal::data::load_ndjson(d.join("split/pool.ndjson")).unwrap();
    assert!(train.is_normalized());
    assert_eq!(train.normalization, pool.normalization);

    bal(&[
        "train",
        "--data",
        &path(d, "split/train.ndjson"),
        "--epochs",
        "5",
        "--out",
        &path(d, "model.balm"),
    ]);
    let net = bal::nn::load_file(d.join("model.balm")).unwrap();
    assert_eq!(net.arch(), &bal::nn::Arch::default());

    let out = bal(&[
        "evaluate",
        "--model",
        &path(d, "model.balm"),
        "--data",
        &path(d, "split/test.ndjson"),
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.starts_with("accuracy ") && text.contains("on 60 windows"),
        "{text}"
    );

    bal(&[
        "bench",
        "--model",
        &path(d, "model.balm"),
        "--data",
        &path(d, "split/pool.ndjson"),
        "--windows",
        "50",
        "--epochs",
        "1",
        "--out",
        &path(d, "bench.csv"),
    ]);
    let csv = std::fs::read_to_string(d.join("bench.csv")).unwrap();
    assert!(csv.starts_with("metric,value,unit,samples\n"));
    assert!(csv.contains("\nmodel_size,"));
}

#[test]
fn sweep_writes_grid_and_spread() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    bal(&["synth", "--n", "150", "--seed", "4", "--out", &path(d, "all.ndjson")]);
    bal(&[
        "sweep",
        "--data",
        &path(d, "all.ndjson"),
        "--etas",
        "0.0,1.0",
        "--seeds",
        "0,1",
        "--passes",
        "2",
        "--epochs",
        "1",
        "--pretrain-epochs",
        "1",
        "--out",
        &path(d, "table.csv"),
    ]);
    let grid = std::fs::read_to_string(d.join("table.csv")).unwrap();
    let rows: Vec<&str> = grid.lines().collect();
    assert_eq!(rows[0], "eta,max_entropy,bald,variation_ratios,random");
    assert_eq!(rows.len(), 3);
    let zero: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(zero[0], "0.0");
    assert!(zero[1..].iter().all(|c| *c == zero[1]));
    assert!(d.join("table.stddev.csv").exists());
}

#[test]
fn sweep_rejects_normalized_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    bal(&["synth", "--n", "100", "--out", &path(d, "all.ndjson")]);
    bal(&[
        "prepare",
        "--data",
        &path(d, "all.ndjson"),
        "--out-dir",
        &path(d, "split"),
    ]);
    let out = Command::new(env!("CARGO_BIN_EXE_bal"))
        .args([
            "sweep",
            "--data",
            &path(d, "split/train.ndjson"),
            "--out",
            &path(d, "t.csv"),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("raw dataset"));
}

#[test]
fn convert_windows_a_recording() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut csv = String::from("hr,sc,label\n");
    for i in 0..100 {
        let label = if i < 50 { "N" } else { "T" };
        csv.push_str(&format!("{},{},{label}\n", 70 + i % 5, 2.0 + 0.01 * i as f64));
    }
    std::fs::write(d.join("rec.csv"), csv).unwrap();
    bal(&[
        "convert",
        "--input",
        &path(d, "rec.csv"),
        "--len",
        "32",
        "--stride",
        "16",
        "--out",
        &path(d, "rec.ndjson"),
    ]);
    let ds = bal::data::load_ndjson(d.join("rec.ndjson")).unwrap();
    assert_eq!(ds.len(), (100 - 32) / 16 + 1);
    assert_eq!(ds.channel_names, ["hr", "sc"]);
    assert_eq!(ds.windows[0].label, Some(0));
    assert_eq!(ds.windows.last().unwrap().label, Some(1));
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn get(port: u16, route: &str) -> Option<String> {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(
        stream,
        "GET {route} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n"
    )
    .ok()?;
    let mut response = String::new();
    stream.read_to_string(&mut response).ok()?;
    Some(response)
}

#[test]
fn serve_answers_status() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    bal(&["synth", "--n", "100", "--out", &path(d, "all.ndjson")]);
    bal(&[
        "prepare",
        "--data",
        &path(d, "all.ndjson"),
        "--out-dir",
        &path(d, "split"),
    ]);
    bal(&[
        "train",
        "--data",
        &path(d, "split/train.ndjson"),
        "--epochs",
        "1",
        "--out",
        &path(d, "m.balm"),
    ]);

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let _server = Server(
        Command::new(env!("CARGO_BIN_EXE_bal"))
            .args([
                "serve",
                "--model",
                &path(d, "m.balm"),
                "--pool",
                &path(d, "split/pool.ndjson"),
                "--train",
                &path(d, "split/train.ndjson"),
                "--port",
                &port.to_string(),
                "--acq",
                "bald",
                "--passes",
                "3",
            ])
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let deadline = Instant::now() + Duration::from_secs(30);
    let response = loop {
        if let Some(r) = get(port, "/api/status") {
            break r;
        }
        assert!(Instant::now() < deadline, "server did not come up");
        std::thread::sleep(Duration::from_millis(100));
    };
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"pool_remaining\":56"), "{response}");
    let queue = get(port, "/api/queue?limit=1").unwrap();
    assert!(queue.contains("\"kind\":\"bald\""), "{queue}");
}
