//! Datasets, windowing, normalization and the synthetic signal generator.

mod ndjson;
mod normalize;
mod synth;
mod windowing;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Window};

pub use ndjson::{load_ndjson, read_ndjson, save_ndjson, write_ndjson};
pub use normalize::{zscore_normalize, NormStats};
pub use synth::{synth_generate, SynthConfig};
pub use windowing::window_signal;

/// Default channel names, in storage order.
pub const DEFAULT_CHANNELS: [&str; 2] = ["hr", "sc"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Pool,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub windows: Vec<Window>,
    /// Split tag per window id; untagged ids are unassigned.
    pub splits: BTreeMap<String, Split>,
    pub channel_names: Vec<String>,
    /// Statistics the windows were z-scored with, if any.
    pub normalization: Option<NormStats>,
}

impl Dataset {
    /// Checks id uniqueness, per-window validity and a common shape.
    pub fn new(windows: Vec<Window>, channel_names: Vec<String>) -> Result<Self> {
        let ds = Dataset {
            windows,
            splits: BTreeMap::new(),
            channel_names,
            normalization: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let shape = self.shape();
        for (i, w) in self.windows.iter().enumerate() {
            w.validate()?;
            if !seen.insert(w.id.as_str()) {
                return Err(Error::config(format!("duplicate window id `{}` at index {i}", w.id)));
            }
            if Some((w.num_channels(), w.len())) != shape {
                return Err(Error::config(format!(
                    "window `{}` does not share the dataset shape",
                    w.id
                )));
            }
        }
        if let Some((c, _)) = shape {
            if !self.channel_names.is_empty() && self.channel_names.len() != c {
                return Err(Error::config(format!(
                    "{} channel names for {c} channels",
                    self.channel_names.len()
                )));
            }
        }
        Ok(())
    }

    /// `(channels, window_len)` of the first window.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.windows.first().map(|w| (w.num_channels(), w.len()))
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization.is_some()
    }

    pub fn tag(&mut self, id: impl Into<String>, split: Split) {
        self.splits.insert(id.into(), split);
    }

    pub fn split_of(&self, id: &str) -> Option<Split> {
        self.splits.get(id).copied()
    }

    pub fn windows_in(&self, split: Split) -> impl Iterator<Item = &Window> {
        self.windows.iter().filter(move |w| self.split_of(&w.id) == Some(split))
    }
}
