//! Bus dispatch timetabling as a minute-stepped control problem.
//!
//! The crate is organised bottom-up:
//!
//! - [`od_data`]: origin-destination passenger demand (CSV ingestion, synthetic
//!   generation, peak shifting and resampling).
//! - [`line_model`]: static line description, travel-time bands and capacity math.
//! - [`simulator`]: the deterministic trip engine and timetable metrics.
//! - [`env`]: the six-feature state, the departure reward and the episode driver.
//! - [`agent`]: value network, replay buffer, rule-constrained action selection
//!   and the DQN training loop.
//! - [`baselines`]: GA and memetic timetable search, and the two ablation schemes.
//!
//! Numeric code in [`env`] and [`agent`] is generic over [`Real`]; the aliases
//! below fix the scalar to `f64`, which is what the CLI and checkpoints use.

pub mod agent;
pub mod baselines;
pub mod env;
mod error;
pub mod line_model;
pub mod od_data;
pub mod presets;
pub mod scalar;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub use line_model::{LineConfig, TravelTimeTable};
pub use od_data::{DemandSet, Direction, PassengerRecord};
pub use simulator::{Metrics, StationQueues, Timetable, TripResult};

/// Value network over `f64`.
pub type ValueNetwork = agent::ValueNetwork<f64>;
/// Value network over `f32`.
pub type ValueNetwork32 = agent::ValueNetwork<f32>;
/// Six-feature state over `f64`.
pub type StateVector = env::StateVector<f64>;
/// Experience tuple over `f64`.
pub type Transition = env::Transition<f64>;
/// Replay buffer over `f64`.
pub type ReplayBuffer = agent::ReplayBuffer<f64>;
/// Reward weights over `f64`.
pub type RewardParams = env::RewardParams<f64>;
/// Episode driver over `f64`.
pub type BusEnv<'a> = env::BusEnv<'a, f64>;
/// Training output over `f64`.
pub type TrainOutcome = agent::TrainOutcome<f64>;
