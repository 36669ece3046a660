//! Online co-evolution of a friction model and a tracking policy.
//!
//! Two small populations evolve in lockstep with the control loop, one
//! generation per control period:
//!
//! - dynamics chromosomes `[mu_s_hat, mu_w_hat]` are scored by how well the
//!   shared vehicle model reproduces the most recent recorded motion when
//!   run with the candidate friction coefficients;
//! - control chromosomes (six gains forming a 2x3 matrix from the features
//!   `[alpha, dv, slope]` to `[steering, wheel speed]`) are scored by
//!   rolling the model forward under the current best friction estimate and
//!   comparing against references marching along the track.
//!
//! Ranked survivors breed by per-gene crossover and Gaussian mutation; a
//! fresh member is injected each generation (uniform random on the dynamics
//! side, a least-squares imitation of recently executed actions on the
//! control side). The learner starts in baseline mode and latches over to
//! the evolved policy once both best fitness values stay below their
//! activation thresholds for a configured number of consecutive steps.

mod fitness;
mod injection;
mod learner;
mod operators;

pub use fitness::{
    control_fitness, policy_action, policy_features, predict_state, prediction_fitness,
    rollout_tracking, weighted_state_error,
};
pub use injection::inject_inverse_model;
pub use learner::{ActivationGate, ControllerMode, Learner, LearnerStep};
pub use operators::{crossover, evolve_generation, mutate, select_index, select_parents, EvolveParams};

use crate::dynamics::{Action, VehicleState};
use std::collections::VecDeque;

/// Candidate friction coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynChromosome {
    pub genes: [f64; 2],
}

impl DynChromosome {
    pub fn mu_s(&self) -> f64 {
        self.genes[0]
    }

    pub fn mu_w(&self) -> f64 {
        self.genes[1]
    }
}

/// Candidate policy gains, row-major 2x3: the first three genes map the
/// features to the steering angle, the last three to the wheel speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtrlChromosome {
    pub genes: [f64; 6],
}

/// Hyperparameters of the co-evolution; defaults are the tuned operating
/// point the acceptance suite runs at.
#[derive(Debug, Clone, Copy)]
pub struct GaConfig {
    /// Control periods looked back for the dynamics fitness.
    pub prediction_lookback: usize,
    /// Control periods rolled forward for the control fitness.
    pub tracking_horizon: usize,
    /// Probability each child gene comes from the second parent.
    pub crossover_rate: f64,
    pub dyn_population: usize,
    pub ctrl_population: usize,
    /// Members copied unchanged into the next generation.
    pub elite_count: usize,
    /// Fresh members injected per generation.
    pub inject_count: usize,
    /// State-error weights for the dynamics fitness
    /// ([x, y, vx, vy, psi, psi_dot]; heading error in degrees-equivalent).
    pub w_s: [f64; 6],
    /// Reference-error weights for the control fitness.
    pub w_r: [f64; 6],
    /// Per-gene magnitude penalty added once to the control fitness.
    pub w_k: [f64; 6],
    /// Search bounds of the slope friction coefficient.
    pub mu_s_bounds: (f64, f64),
    /// Search bounds of the wheel friction coefficient.
    pub mu_w_bounds: (f64, f64),
    /// Search bounds shared by all control genes.
    pub gain_bounds: (f64, f64),
    /// Mutation sigma as a fraction of each population's bound range.
    pub mutation_frac: f64,
    /// History rows used by the least-squares injection.
    pub injection_horizon: usize,
    /// Dynamics fitness must stay below this to arm the activation gate.
    pub q_threshold: f64,
    /// Control fitness must stay below this to arm the activation gate.
    pub c_threshold: f64,
    /// Consecutive qualifying steps before the learned policy takes over.
    pub gate_window: usize,
    /// m, look-ahead used to form the bearing feature (matches the baseline).
    pub feature_lookahead: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            prediction_lookback: 1,
            tracking_horizon: 2,
            crossover_rate: 0.67,
            dyn_population: 8,
            ctrl_population: 8,
            elite_count: 3,
            inject_count: 1,
            w_s: [1e3, 1e3, 0.0, 0.0, 180.0 / std::f64::consts::PI, 0.0],
            w_r: [1.0, 1.0, 0.01, 0.0, 0.0, 0.0],
            w_k: [0.0, 1e-7, 0.0, 0.0, 0.0, 1e-7],
            mu_s_bounds: (0.0, 20.0),
            mu_w_bounds: (0.0, 4.0),
            gain_bounds: (-50.0, 50.0),
            mutation_frac: 0.02,
            injection_horizon: 10,
            q_threshold: 0.05,
            c_threshold: 0.1,
            gate_window: 25,
            feature_lookahead: 0.5,
        }
    }
}

impl GaConfig {
    /// Reject configurations the evolve step cannot satisfy.
    pub fn validate(&self) -> Result<(), String> {
        for (name, size) in [("dyn", self.dyn_population), ("ctrl", self.ctrl_population)] {
            if size < 2 {
                return Err(format!("{name} population must have at least 2 members"));
            }
            if self.elite_count + self.inject_count > size {
                return Err(format!(
                    "elite_count {} + inject_count {} exceeds {name} population {size}",
                    self.elite_count, self.inject_count
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(format!("crossover_rate {} outside [0, 1]", self.crossover_rate));
        }
        if self.prediction_lookback == 0 || self.tracking_horizon == 0 {
            return Err("lookback and horizon must be at least 1".into());
        }
        for bounds in [self.mu_s_bounds, self.mu_w_bounds, self.gain_bounds] {
            if bounds.0 >= bounds.1 {
                return Err("bounds must be ordered lo < hi".into());
            }
        }
        if self.mu_s_bounds.0 < 0.0 || self.mu_w_bounds.0 < 0.0 {
            return Err("friction coefficients cannot be negative".into());
        }
        if self.mutation_frac < 0.0 || self.injection_horizon == 0 || self.gate_window == 0 {
            return Err("mutation_frac, injection_horizon, gate_window must be positive".into());
        }
        Ok(())
    }

    pub fn dyn_bounds(&self) -> [(f64, f64); 2] {
        [self.mu_s_bounds, self.mu_w_bounds]
    }

    pub fn ctrl_bounds(&self) -> [(f64, f64); 6] {
        [self.gain_bounds; 6]
    }

    /// Mutation sigma per gene: `mutation_frac` of that gene's bound range.
    pub fn dyn_mutation_sigma(&self) -> [f64; 2] {
        self.dyn_bounds().map(|(lo, hi)| self.mutation_frac * (hi - lo))
    }

    pub fn ctrl_mutation_sigma(&self) -> [f64; 6] {
        self.ctrl_bounds().map(|(lo, hi)| self.mutation_frac * (hi - lo))
    }
}

/// One completed control step as the learner saw it: the state estimate, the
/// action actually applied, the reference it was chasing, and the policy
/// features at decision time.
#[derive(Debug, Clone, Copy)]
pub struct HistoryEntry {
    pub t: f64,
    pub state: VehicleState,
    pub action: Action,
    pub reference: VehicleState,
    /// `[alpha, dv, slope]` at decision time.
    pub features: [f64; 3],
}

/// Chronological ring buffer of recent control steps.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    entries: VecDeque<HistoryEntry>,
    capacity: usize,
}

impl HistoryBuffer {
    pub fn new(capacity: usize) -> HistoryBuffer {
        assert!(capacity > 0);
        HistoryBuffer { entries: VecDeque::with_capacity(capacity + 1), capacity }
    }

    /// Append the newest entry, dropping the oldest once full. Timestamps
    /// must arrive in increasing order.
    pub fn push(&mut self, entry: HistoryEntry) {
        if let Some(last) = self.entries.back() {
            debug_assert!(entry.t > last.t, "history must be chronological");
        }
        self.entries.push_back(entry);
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// The most recent `n` entries in chronological order.
    /// Panics if fewer are stored.
    pub fn last_n(&self, n: usize) -> impl Iterator<Item = &HistoryEntry> {
        assert!(n <= self.entries.len(), "asked for {n} of {}", self.entries.len());
        self.entries.range(self.entries.len() - n..)
    }

    pub fn iter(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.entries.iter()
    }
}
