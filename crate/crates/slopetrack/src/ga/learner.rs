//! Online learner: per-step evaluation, gating, and evolution.
//!
//! Each control period the harness hands the learner the newest state
//! estimate. Once enough history exists the learner scores both
//! populations against that estimate, remembers the generation's best
//! members, updates the activation gate, and evolves both populations.
//! The returned action is `None` until the gate latches; the harness keeps
//! the baseline in command until then.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{Action, SimContext, VehicleState};
use crate::track::Track;

use super::{
    control_fitness, evolve_generation, inject_inverse_model, policy_action, policy_features,
    predict_state, prediction_fitness, rollout_tracking, CtrlChromosome, DynChromosome,
    EvolveParams, GaConfig, HistoryBuffer, HistoryEntry,
};

/// Who is in command of the vehicle this step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerMode {
    Baseline,
    Learned,
}

/// Latching handover condition: both best fitness values must stay below
/// their thresholds for `window` consecutive evaluations. A single miss
/// resets the count; once latched the gate never releases.
#[derive(Debug, Clone)]
pub struct ActivationGate {
    q_threshold: f64,
    c_threshold: f64,
    window: usize,
    consecutive: usize,
    latched: bool,
}

impl ActivationGate {
    pub fn new(q_threshold: f64, c_threshold: f64, window: usize) -> ActivationGate {
        assert!(window >= 1);
        ActivationGate { q_threshold, c_threshold, window, consecutive: 0, latched: false }
    }

    /// Feed one generation's best fitness pair; returns the latched state.
    pub fn update(&mut self, best_q: f64, best_c: f64) -> bool {
        if self.latched {
            return true;
        }
        if best_q < self.q_threshold && best_c < self.c_threshold {
            self.consecutive += 1;
            if self.consecutive >= self.window {
                self.latched = true;
            }
        } else {
            self.consecutive = 0;
        }
        self.latched
    }

    pub fn latched(&self) -> bool {
        self.latched
    }

    pub fn consecutive(&self) -> usize {
        self.consecutive
    }
}

struct Best {
    q: f64,
    c: f64,
    dyn_c: DynChromosome,
    ctrl_c: CtrlChromosome,
}

/// Outcome of one learner step.
#[derive(Debug, Clone, Copy)]
pub struct LearnerStep {
    pub mode: ControllerMode,
    /// Policy action; `Some` only once the gate has latched.
    pub action: Option<Action>,
    /// Whether populations were evaluated and evolved this step.
    pub evaluated: bool,
    /// Best fitness values of this step's generation (NaN before the first
    /// evaluation).
    pub best_q: f64,
    pub best_c: f64,
    pub best_dyn: Option<DynChromosome>,
    pub best_ctrl: Option<CtrlChromosome>,
}

/// Co-evolving friction estimator and tracking policy.
pub struct Learner {
    cfg: GaConfig,
    dyn_pop: Vec<[f64; 2]>,
    ctrl_pop: Vec<[f64; 6]>,
    history: HistoryBuffer,
    rng: ChaCha8Rng,
    gate: ActivationGate,
    best: Option<Best>,
}

impl Learner {
    /// Seeded construction; both populations start uniform inside their
    /// search bounds.
    pub fn new(cfg: GaConfig, seed: u64) -> Learner {
        if let Err(msg) = cfg.validate() {
            panic!("invalid learner config: {msg}");
        }
        // Stream 1 keeps evolution draws independent of the measurement
        // noise stream, which the harness derives from the same seed.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let dyn_pop = (0..cfg.dyn_population)
            .map(|_| uniform_genes(&cfg.dyn_bounds(), &mut rng))
            .collect();
        let ctrl_pop = (0..cfg.ctrl_population)
            .map(|_| uniform_genes(&cfg.ctrl_bounds(), &mut rng))
            .collect();
        let capacity = cfg.prediction_lookback.max(cfg.injection_horizon) + 2;
        Learner {
            gate: ActivationGate::new(cfg.q_threshold, cfg.c_threshold, cfg.gate_window),
            history: HistoryBuffer::new(capacity),
            dyn_pop,
            ctrl_pop,
            rng,
            cfg,
            best: None,
        }
    }

    pub fn config(&self) -> &GaConfig {
        &self.cfg
    }

    pub fn mode(&self) -> ControllerMode {
        if self.gate.latched() {
            ControllerMode::Learned
        } else {
            ControllerMode::Baseline
        }
    }

    pub fn gate(&self) -> &ActivationGate {
        &self.gate
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.history
    }

    /// Record the step that was actually executed (whoever commanded it).
    pub fn record(&mut self, entry: HistoryEntry) {
        self.history.push(entry);
    }

    /// Evaluate, gate, and evolve one generation against the newest state
    /// estimate, then report the action the learned policy would take.
    ///
    /// Evaluation is skipped (and fitness reported as NaN) until the
    /// history covers the prediction lookback. Candidates whose rollout
    /// diverges score infinite fitness and lose every selection.
    pub fn step(&mut self, estimate: &VehicleState, track: &Track, sim: &SimContext) -> LearnerStep {
        let evaluated = self.history.len() >= self.cfg.prediction_lookback;
        if evaluated {
            self.evaluate_and_evolve(estimate, track, sim);
        }

        let mode = self.mode();
        let action = match (&self.best, mode) {
            (Some(best), ControllerMode::Learned) => {
                let features =
                    policy_features(estimate, track, self.cfg.feature_lookahead, sim.terrain.slope);
                Some(policy_action(&best.ctrl_c, &features, &sim.vehicle))
            }
            _ => None,
        };

        LearnerStep {
            mode,
            action,
            evaluated,
            best_q: self.best.as_ref().map_or(f64::NAN, |b| b.q),
            best_c: self.best.as_ref().map_or(f64::NAN, |b| b.c),
            best_dyn: self.best.as_ref().map(|b| b.dyn_c),
            best_ctrl: self.best.as_ref().map(|b| b.ctrl_c),
        }
    }

    fn evaluate_and_evolve(&mut self, estimate: &VehicleState, track: &Track, sim: &SimContext) {
        let cfg = &self.cfg;

        // Dynamics population: replay recorded actions, score against the
        // newest estimate.
        let q: Vec<f64> = self
            .dyn_pop
            .iter()
            .map(|genes| {
                let theta = DynChromosome { genes: *genes };
                match predict_state(&theta, &self.history, cfg.prediction_lookback, sim) {
                    Ok(predicted) => finite_or_inf(prediction_fitness(estimate, &predicted, &cfg.w_s)),
                    Err(_) => f64::INFINITY,
                }
            })
            .collect();
        let best_dyn_idx = argmin(&q);
        let best_dyn = DynChromosome { genes: self.dyn_pop[best_dyn_idx] };

        // Control population: roll forward under the best friction estimate,
        // score against references marching along the track.
        let refs =
            track.reference_states([estimate.x, estimate.y], cfg.tracking_horizon, sim.dt_control);
        let c: Vec<f64> = self
            .ctrl_pop
            .iter()
            .map(|genes| {
                let theta = CtrlChromosome { genes: *genes };
                match rollout_tracking(
                    &theta,
                    &best_dyn,
                    estimate,
                    track,
                    cfg.tracking_horizon,
                    cfg.feature_lookahead,
                    sim,
                ) {
                    Ok(trace) => {
                        finite_or_inf(control_fitness(&refs, &trace, &theta, &cfg.w_r, &cfg.w_k))
                    }
                    Err(_) => f64::INFINITY,
                }
            })
            .collect();
        let best_ctrl_idx = argmin(&c);

        self.best = Some(Best {
            q: q[best_dyn_idx],
            c: c[best_ctrl_idx],
            dyn_c: best_dyn,
            ctrl_c: CtrlChromosome { genes: self.ctrl_pop[best_ctrl_idx] },
        });
        self.gate.update(q[best_dyn_idx], c[best_ctrl_idx]);

        // Evolve dynamics first, then control; injected members are drawn
        // before each evolve so the stream layout is fixed.
        let dyn_injected: Vec<[f64; 2]> = (0..cfg.inject_count)
            .map(|_| uniform_genes(&cfg.dyn_bounds(), &mut self.rng))
            .collect();
        let dyn_params = EvolveParams {
            elite_count: cfg.elite_count,
            crossover_rate: cfg.crossover_rate,
            mutation_sigma: cfg.dyn_mutation_sigma(),
            bounds: cfg.dyn_bounds(),
        };
        self.dyn_pop = evolve_generation(&self.dyn_pop, &q, &dyn_injected, &dyn_params, &mut self.rng);

        let mut ctrl_injected: Vec<[f64; 6]> = Vec::with_capacity(cfg.inject_count);
        for k in 0..cfg.inject_count {
            let fitted = if k == 0 {
                inject_inverse_model(&self.history, cfg.injection_horizon)
            } else {
                None
            };
            match fitted {
                Some(theta) => ctrl_injected.push(theta.genes),
                None => ctrl_injected.push(uniform_genes(&cfg.ctrl_bounds(), &mut self.rng)),
            }
        }
        let ctrl_params = EvolveParams {
            elite_count: cfg.elite_count,
            crossover_rate: cfg.crossover_rate,
            mutation_sigma: cfg.ctrl_mutation_sigma(),
            bounds: cfg.ctrl_bounds(),
        };
        self.ctrl_pop =
            evolve_generation(&self.ctrl_pop, &c, &ctrl_injected, &ctrl_params, &mut self.rng);
    }
}

fn uniform_genes<const N: usize, R: Rng + ?Sized>(
    bounds: &[(f64, f64); N],
    rng: &mut R,
) -> [f64; N] {
    let mut genes = [0.0; N];
    for (gene, &(lo, hi)) in genes.iter_mut().zip(bounds) {
        *gene = lo + (hi - lo) * rng.random::<f64>();
    }
    genes
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Index of the smallest value; ties keep the earliest index.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if v.total_cmp(&values[best]).is_lt() {
            best = i;
        }
    }
    best
}
