//! Synthetic ground truth and the slot-by-slot simulation.

pub mod generator;
pub mod output;
pub mod predict;
pub mod run;
pub mod sweep;

use thiserror::Error;

use crate::cesn::CesnError;
use crate::channel::ChannelError;

pub use generator::World;
pub use predict::{check_models, train_models, PeriodForecast, Predictor, TrainRow, UserModels};
pub use run::{run, run_world, Baseline, PeriodPlan, RunOutput, SlotLog, SlotTotals, Summary, UavSlot};
pub use sweep::{parse_values, sweep, SweepParam, SweepRow};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invariant violated in slot {slot}: {message}")]
    Invariant { slot: usize, message: String },
    #[error("user {user}: {source}")]
    Model { user: usize, source: CesnError },
    #[error("models do not match the configuration: {0}")]
    ModelMismatch(String),
    #[error("sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}
