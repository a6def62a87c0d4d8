//! Slotted-time simulator and analysis toolkit for Fast-CSMA (FCSMA)
//! scheduling of deadline-constrained traffic over fading channels in a
//! fully-connected network.
//!
//! - [`weight`] and [`model`]: weight functions, contention rates and the
//!   closed-form selection probability.
//! - [`processes`] and [`rng`]: seeded arrival, channel and drop-allowance
//!   streams.
//! - [`scheduler`]: the FCSMA race, its mini-slot discretization, the QCSMA
//!   baseline and max-weight.
//! - [`engine`]: the per-slot virtual-queue simulation.
//! - [`region`]: the maximal satisfiable region (closed form, LP and dual check).
//! - [`config`], [`sweep`] and [`verify`]: experiment plumbing.

pub mod config;
pub mod engine;
pub mod error;
pub mod model;
pub mod processes;
pub mod region;
pub mod rng;
pub mod scheduler;
pub mod sweep;
pub mod verify;
pub mod weight;

pub use config::{parse_config, ScenarioConfig};
pub use engine::{run_horizon, run_summary, Engine, RunOutput, RunSummary, SlotMetrics, VirtualQueueState};
pub use error::{Error, FieldError, Result};
pub use model::{contention_rate, lemma2_tail_bound, link_weight, ContentionProfile, LinkObservation};
pub use scheduler::{CompletionRule, ScheduleOutcome, SchedulerKind};
pub use sweep::{parse_sweep, run_sweep, SweepAxis, SweepSpec};
pub use weight::WeightFunction;
