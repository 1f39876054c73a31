use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Filters per convolution layer.
pub const CONV_FILTERS: [usize; 4] = [4, 8, 16, 32];
/// Hidden widths of the two fully-connected layers before the output layer.
pub const DENSE_UNITS: [usize; 2] = [32, 16];
pub const KERNEL_SIZE: usize = 3;

/// Where MC-dropout masks are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropoutPlacement {
    /// A single dropout layer between the 16-unit layer and the output layer.
    #[default]
    BeforeOutput,
    /// Dropout on the input of every fully-connected layer.
    BeforeEveryDense,
}

impl DropoutPlacement {
    /// Whether the input of dense layer `layer` (0, 1 or 2) is masked.
    pub fn masks_dense_input(self, layer: usize) -> bool {
        match self {
            DropoutPlacement::BeforeOutput => layer == 2,
            DropoutPlacement::BeforeEveryDense => true,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            DropoutPlacement::BeforeOutput => 0,
            DropoutPlacement::BeforeEveryDense => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DropoutPlacement::BeforeOutput),
            1 => Some(DropoutPlacement::BeforeEveryDense),
            _ => None,
        }
    }
}

/// Architecture descriptor. Every parameter shape follows from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arch {
    pub in_channels: usize,
    pub window_len: usize,
    pub classes: usize,
    pub dropout: f32,
    pub placement: DropoutPlacement,
}

impl Default for Arch {
    fn default() -> Self {
        Arch {
            in_channels: 2,
            window_len: 32,
            classes: 2,
            dropout: 0.3,
            placement: DropoutPlacement::BeforeOutput,
        }
    }
}

impl Arch {
    pub fn new(in_channels: usize, window_len: usize) -> Result<Self> {
        let arch = Arch {
            in_channels,
            window_len,
            ..Arch::default()
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn with_dropout(mut self, p: f32) -> Result<Self> {
        self.dropout = p;
        self.validate()?;
        Ok(self)
    }

    pub fn with_placement(mut self, placement: DropoutPlacement) -> Self {
        self.placement = placement;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 {
            return Err(Error::config("at least one input channel is required"));
        }
        if self.window_len == 0 || !self.window_len.is_multiple_of(8) {
            return Err(Error::config(format!(
                "window length {} must be a positive multiple of 8",
                self.window_len
            )));
        }
        if self.classes < 2 {
            return Err(Error::config(format!("need at least 2 classes, got {}", self.classes)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// Input length of conv layer `k`: `L`, `L/2`, `L/4`, `L/8`.
    pub fn conv_len(&self, k: usize) -> usize {
        self.window_len >> k
    }

    /// `(out_channels, in_channels, kernel)` of conv layer `k`.
    pub fn conv_shape(&self, k: usize) -> (usize, usize, usize) {
        let cin = if k == 0 { self.in_channels } else { CONV_FILTERS[k - 1] };
        (CONV_FILTERS[k], cin, KERNEL_SIZE)
    }

    pub fn flatten_width(&self) -> usize {
        CONV_FILTERS[3] * self.conv_len(3)
    }

    /// `(out, in)` of dense layer `k`.
    pub fn dense_shape(&self, k: usize) -> (usize, usize) {
        match k {
            0 => (DENSE_UNITS[0], self.flatten_width()),
            1 => (DENSE_UNITS[1], DENSE_UNITS[0]),
            _ => (self.classes, DENSE_UNITS[1]),
        }
    }

    pub fn param_count(&self) -> usize {
        let conv: usize = (0..4)
            .map(|k| {
                let (o, i, kk) = self.conv_shape(k);
                o * i * kk + o
            })
            .sum();
        let dense: usize = (0..3)
            .map(|k| {
                let (o, i) = self.dense_shape(k);
                o * i + o
            })
            .sum();
        conv + dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shapes() {
        let a = Arch::default();
        assert_eq!([a.conv_len(1), a.conv_len(2), a.conv_len(3)], [16, 8, 4]);
        assert_eq!(a.flatten_width(), 128);
        // 28 + 104 + 400 + 1568 conv, 4128 + 528 + 34 dense
        assert_eq!(a.param_count(), 6790);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(Arch::new(2, 30).is_err());
        assert!(Arch::new(0, 32).is_err());
        assert!(Arch::default().with_dropout(1.0).is_err());
        assert!(Arch::new(3, 64).is_ok());
    }
}
