//! Pool-based active learning: split, pre-train, then repeatedly score the
//! pool, query the oracle for the top windows and retrain incrementally,
//! until the η budget or the pool runs out.

mod config;
mod eval;
mod split;
mod state;
mod sweep;

pub use config::{ALConfig, Seeds};
pub use eval::{evaluate, pretrain};
pub use split::{budget_for, round_half_up, split_dataset};
pub use state::{
    al_step, run_active_learning, ALState, AcquisitionRecord, FnOracle, Oracle, SimulatedOracle, StepOutcome,
};
pub use sweep::{eta_sweep, run_seed, SweepCell, SweepReport, CSV_HEADER};
