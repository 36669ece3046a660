//! Deterministic testbed for online co-evolution of terrain friction
//! parameters and tracking-control gains on a slope-driving Ackermann car.
//!
//! The crate simulates a small rear-driven car on a slippery incline,
//! estimates its state from noisy pose measurements, and runs two
//! controllers against a closed track: a pure-pursuit baseline and a
//! genetic-algorithm learner that evolves a friction model and a linear
//! gain-matrix policy side by side while the car drives. The experiment
//! harness wires these together, logs every control step, and reduces runs
//! to comparable tracking-cost summaries.
//!
//! Modules:
//! - [`dynamics`]: slope-plane rigid-body model and RK4 integrator
//! - [`track`]: closed polyline geometry and reference generation
//! - [`baseline`]: pure-pursuit + proportional speed controller
//! - [`estimation`]: measurement corruption and causal filtering
//! - [`ga`]: chromosomes, fitness, genetic operators, and the online learner
//! - [`harness`]: experiment loop, metrics, logging, and comparisons

pub mod baseline;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod ga;
pub mod harness;
pub mod track;

pub use error::{Error, Result};
