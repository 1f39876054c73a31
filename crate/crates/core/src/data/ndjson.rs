//! One JSON record per line:
//!
//! ```text
//! {"meta":{"channels":["hr","sc"],"window_len":32}}          optional header
//! {"id":"w0","label":0,"channels":[[...],[...]]}
//! {"id":"w1","label":null,"channels":[[...],[...]]}
//! ```
//!
//! A normalized dataset also records its statistics in the header under
//! `"normalization":{"mean":[...],"std":[...]}`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Dataset, NormStats, DEFAULT_CHANNELS};
use crate::{Error, Result, Window};

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    channels: Vec<String>,
    window_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalization: Option<NormStats>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    meta: Meta,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: &'a str,
    label: Option<u8>,
    channels: &'a [Vec<f32>],
}

#[derive(Deserialize)]
struct RecordIn {
    id: String,
    #[serde(default)]
    label: Option<i64>,
    channels: Vec<Vec<f32>>,
}

fn err(line: usize, reason: impl Into<String>) -> Error {
    Error::Dataset {
        line,
        reason: reason.into(),
    }
}

pub fn load_ndjson(path: impl AsRef<Path>) -> Result<Dataset> {
    read_ndjson(BufReader::new(File::open(path)?))
}

/// Parses and validates a dataset. Errors carry the 1-based line number.
pub fn read_ndjson(reader: impl BufRead) -> Result<Dataset> {
    let mut meta: Option<Meta> = None;
    let mut windows: Vec<Window> = Vec::new();
    let mut ids = HashSet::new();
    let mut shape: Option<(usize, usize)> = None;

    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| err(n, format!("malformed JSON: {e}")))?;
        if value.get("meta").is_some() {
            if !windows.is_empty() || meta.is_some() {
                return Err(err(n, "meta header must be the first line"));
            }
            let header: Header = serde_json::from_value(value).map_err(|e| err(n, format!("bad meta header: {e}")))?;
            meta = Some(header.meta);
            continue;
        }
        let rec: RecordIn = serde_json::from_value(value).map_err(|e| err(n, format!("bad record: {e}")))?;
        let label = match rec.label {
            None => None,
            Some(l @ 0..=1) => Some(l as u8),
            Some(l) => return Err(err(n, format!("label {l} is not 0, 1 or null"))),
        };
        if !ids.insert(rec.id.clone()) {
            return Err(err(n, format!("duplicate id `{}`", rec.id)));
        }
        let window = Window::new(rec.id, rec.channels, label).map_err(|e| err(n, e.to_string()))?;
        let this = (window.num_channels(), window.len());
        match (shape, &meta) {
            (Some(s), _) if s != this => {
                return Err(err(
                    n,
                    format!("shape {}x{} differs from {}x{}", this.0, this.1, s.0, s.1),
                ));
            }
            (None, Some(m)) if m.channels.len() != this.0 || m.window_len != this.1 => {
                return Err(err(
                    n,
                    format!(
                        "shape {}x{} differs from header {}x{}",
                        this.0,
                        this.1,
                        m.channels.len(),
                        m.window_len
                    ),
                ));
            }
            _ => shape = Some(this),
        }
        windows.push(window);
    }

    let (channel_names, normalization) = match meta {
        Some(m) => (m.channels, m.normalization),
        None => (default_channel_names(shape.map_or(0, |s| s.0)), None),
    };
    let mut ds = Dataset::new(windows, channel_names).map_err(|e| err(0, e.to_string()))?;
    ds.normalization = normalization;
    Ok(ds)
}

/// `hr`/`sc` for two channels, `ch0`, `ch1`, ... otherwise.
fn default_channel_names(count: usize) -> Vec<String> {
    if count == DEFAULT_CHANNELS.len() {
        DEFAULT_CHANNELS.iter().map(|s| s.to_string()).collect()
    } else {
        (0..count).map(|i| format!("ch{i}")).collect()
    }
}

pub fn save_ndjson(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_ndjson(dataset, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Writes the header line followed by one record per window.
pub fn write_ndjson(dataset: &Dataset, mut out: impl Write) -> Result<()> {
    let header = Header {
        meta: Meta {
            channels: if dataset.channel_names.is_empty() {
                default_channel_names(dataset.shape().map_or(0, |s| s.0))
            } else {
                dataset.channel_names.clone()
            },
            window_len: dataset.shape().map_or(0, |s| s.1),
            normalization: dataset.normalization.clone(),
        },
    };
    writeln!(
        out,
        "{}",
        serde_json::to_string(&header).map_err(std::io::Error::other)?
    )?;
    for w in &dataset.windows {
        let rec = RecordOut {
            id: &w.id,
            label: w.label,
            channels: &w.channels,
        };
        writeln!(out, "{}", serde_json::to_string(&rec).map_err(std::io::Error::other)?)?;
    }
    Ok(())
}
