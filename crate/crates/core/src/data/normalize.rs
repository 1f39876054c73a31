use serde::{Deserialize, Serialize};

use super::{Dataset, Split};
use crate::{Error, Result, Window};

/// Channels whose spread falls below this are only centred.
const MIN_STD: f64 = 1e-9;

/// Per-channel mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Population statistics over every sample of every window.
    pub fn fit<'a>(windows: impl IntoIterator<Item = &'a Window>) -> Result<Self> {
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        let mut count = 0usize;
        for w in windows {
            if sum.is_empty() {
                sum = vec![0.0; w.num_channels()];
                sq = vec![0.0; w.num_channels()];
            }
            if w.num_channels() != sum.len() {
                return Err(Error::config(format!(
                    "window `{}` has a different channel count",
                    w.id
                )));
            }
            for (c, row) in w.channels.iter().enumerate() {
                for &v in row {
                    sum[c] += f64::from(v);
                    sq[c] += f64::from(v) * f64::from(v);
                }
            }
            count += w.len();
        }
        if count == 0 {
            return Err(Error::precondition("normalization statistics need at least one window"));
        }
        let n = count as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let s = (q / n - m * m).max(0.0).sqrt();
                if s < MIN_STD {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(NormStats { mean, std })
    }

    pub fn apply(&self, window: &Window) -> Window {
        let channels = window
            .channels
            .iter()
            .enumerate()
            .map(|(c, row)| {
                row.iter()
                    .map(|&v| ((f64::from(v) - self.mean[c]) / self.std[c]) as f32)
                    .collect()
            })
            .collect();
        Window {
            id: window.id.clone(),
            channels,
            label: window.label,
        }
    }

    pub fn apply_all(&self, windows: &[Window]) -> Vec<Window> {
        windows.iter().map(|w| self.apply(w)).collect()
    }
}

/// Z-scores every window with statistics taken from the train split only.
///
/// A dataset that already carries statistics is rejected, since applying
/// the transform twice is not the same as applying it once.
pub fn zscore_normalize(dataset: &Dataset) -> Result<(Dataset, NormStats)> {
    if dataset.is_normalized() {
        return Err(Error::precondition("dataset is already normalized"));
    }
    let stats =
        NormStats::fit(dataset.windows_in(Split::Train)).map_err(|_| Error::precondition("train split is empty"))?;
    let mut out = dataset.clone();
    out.windows = stats.apply_all(&dataset.windows);
    out.normalization = Some(stats.clone());
    Ok((out, stats))
}
