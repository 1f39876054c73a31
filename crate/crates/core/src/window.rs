use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One fixed-length multichannel signal segment.
///
/// `channels[c][t]` is sample `t` of channel `c`. Label `0` is neutral,
/// `1` is stressed; `None` marks an unlabeled pool window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub id: String,
    pub channels: Vec<Vec<f32>>,
    pub label: Option<u8>,
}

impl Window {
    /// Builds a window after checking that every channel has the same
    /// non-zero length and every value is finite.
    pub fn new(id: impl Into<String>, channels: Vec<Vec<f32>>, label: Option<u8>) -> Result<Self> {
        let w = Window {
            id: id.into(),
            channels,
            label,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let len = self
            .channels
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::config(format!("window `{}` has no channels", self.id)))?;
        if len == 0 {
            return Err(Error::config(format!("window `{}` is empty", self.id)));
        }
        if let Some(c) = self.channels.iter().position(|row| row.len() != len) {
            return Err(Error::config(format!(
                "window `{}`: channel {c} has length {}, expected {len}",
                self.id,
                self.channels[c].len()
            )));
        }
        if self.channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::config(format!(
                "window `{}` contains non-finite values",
                self.id
            )));
        }
        if let Some(l) = self.label {
            if l > 1 {
                return Err(Error::config(format!(
                    "window `{}` has label {l}, expected 0 or 1",
                    self.id
                )));
            }
        }
        Ok(())
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copy of the window with its label removed.
    pub fn unlabeled(&self) -> Self {
        Window {
            label: None,
            ..self.clone()
        }
    }
}
