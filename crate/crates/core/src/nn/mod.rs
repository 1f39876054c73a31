//! The fixed Conv1D classifier.
//!
//! Layer order, for an input of `C_in` channels by `L` samples:
//!
//! ```text
//! conv(4) relu pool  conv(8) relu pool  conv(16) relu pool  conv(32) relu
//! flatten  dense(32) relu  dense(16) relu  [dropout]  dense(C)  softmax
//! ```
//!
//! Convolutions use kernel size 3 with zero "same" padding, pools have size
//! and stride 2, and the flattened width is `32 * L / 8` in channel-major
//! order. Dropout is inverted: kept units are scaled by `1 / (1 - p)` when
//! the mask is drawn, so [`DropoutMode::Off`] needs no rescaling.
//!
//! All backward passes are written by hand; there is no autodiff graph.

mod adam;
mod arch;
mod blob;
mod model;
mod params;
mod train;

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use adam::{adam_update, AdamState, OptimizerHyper};
pub use arch::{Arch, DropoutPlacement, CONV_FILTERS, DENSE_UNITS, KERNEL_SIZE};
pub use blob::{load, load_file, save, save_file, MAGIC};
pub use model::{DropoutMode, Gradients, ModelParams, Network};
pub use params::ParamSet;
pub use train::fit;

/// Floating-point element type of a [`Network`].
///
/// `f32` is used for training and inference, `f64` for gradient checking.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + AddAssign + SubAssign + MulAssign + Sum + Debug + Default + Send + Sync + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + Sum
        + Debug
        + Default
        + Send
        + Sync
        + 'static
{
}
