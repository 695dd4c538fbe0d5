//! Discrete-event Monte Carlo model of the transactional measurement
//! transition.
//!
//! * [`substratum`]: emitters, absorbers, detectors and offer/confirmation waves
//! * [`amplitudes`]: first-order transition amplitudes and `(1 - α)^N` algebra
//! * [`classifier`]: micro / meso / macro classification by constituent count
//! * [`engine`]: per-tick confirmation gate, collapse and ensembles
//! * [`causet`]: the causal set grown by actualized transactions
//! * [`relativistic_gate`]: which sources can carry offers, plus scenarios

pub mod amplitudes;
pub mod causet;
pub mod classifier;
pub mod count;
pub mod engine;
pub mod relativistic_gate;
pub mod substratum;

pub use amplitudes::{CouplingConstant, Sign, TransitionParams};
pub use causet::{CausalSet, EventId, ExportFormat};
pub use classifier::{Scale, ScaleClass, Thresholds};
pub use count::Count;
pub use engine::{EnsembleStats, Scenario, Simulation};
