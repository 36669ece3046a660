//! Fitness evaluation for both populations.
//!
//! Dynamics candidates replay recently executed actions through the vehicle
//! model under their own friction coefficients and are scored on the gap to
//! the newest state estimate. Control candidates roll the model forward
//! under the current best friction estimate and are scored on the gap to
//! references marching along the track at the desired speed, plus a small
//! penalty on gain magnitude.

use crate::dynamics::{wrap_angle, Action, SimContext, VehicleState};
use crate::error::Result;
use crate::track::{intersection_angle, Track};

use super::{CtrlChromosome, DynChromosome, HistoryBuffer};

/// Policy input `[alpha, dv, slope]`: bearing to a fixed-distance look-ahead
/// point, forward speed shortfall, and the configured slope constant.
pub fn policy_features(state: &VehicleState, track: &Track, lookahead: f64, slope: f64) -> [f64; 3] {
    let target = track.lookahead([state.x, state.y], lookahead);
    let alpha = intersection_angle(state.x, state.y, state.psi, target);
    let dv = track.desired_speed() - state.forward_speed();
    [alpha, dv, slope]
}

/// Apply the 2x3 gain matrix to the features; rows map to steering and
/// wheel speed, clamped to actuator limits by `Action::new`.
pub fn policy_action(
    theta: &CtrlChromosome,
    features: &[f64; 3],
    vehicle: &crate::dynamics::VehicleParams,
) -> Action {
    let g = &theta.genes;
    let phi = g[0] * features[0] + g[1] * features[1] + g[2] * features[2];
    let omega = g[3] * features[0] + g[4] * features[1] + g[5] * features[2];
    Action::new(phi, omega, vehicle)
}

/// Weighted squared state error with the heading component wrapped.
pub fn weighted_state_error(a: &VehicleState, b: &VehicleState, w: &[f64; 6]) -> f64 {
    let da = a.to_array();
    let db = b.to_array();
    let mut sum = 0.0;
    for i in 0..6 {
        let d = if i == 4 { wrap_angle(da[i] - db[i]) } else { da[i] - db[i] };
        sum += w[i] * d * d;
    }
    sum
}

/// Replay the last `lookback` recorded actions from the state estimate
/// recorded `lookback` steps ago, using the candidate friction coefficients.
///
/// Panics if the history holds fewer than `lookback` entries.
pub fn predict_state(
    theta: &DynChromosome,
    history: &HistoryBuffer,
    lookback: usize,
    sim: &SimContext,
) -> Result<VehicleState> {
    assert!(lookback >= 1, "lookback must be at least 1");
    let mut state = None;
    for entry in history.last_n(lookback) {
        let start = state.unwrap_or(entry.state);
        state = Some(sim.step_with_mu(&start, &entry.action, theta.mu_s(), theta.mu_w())?);
    }
    Ok(state.expect("lookback >= 1"))
}

/// Dynamics fitness: weighted squared gap between the newest estimate and
/// the candidate's replayed prediction.
pub fn prediction_fitness(measured: &VehicleState, predicted: &VehicleState, w_s: &[f64; 6]) -> f64 {
    weighted_state_error(measured, predicted, w_s)
}

/// Roll the policy forward `horizon` control periods from `start` under the
/// friction estimate `theta_d`, returning the visited states (one per step).
pub fn rollout_tracking(
    theta_k: &CtrlChromosome,
    theta_d: &DynChromosome,
    start: &VehicleState,
    track: &Track,
    horizon: usize,
    lookahead: f64,
    sim: &SimContext,
) -> Result<Vec<VehicleState>> {
    let mut trace = Vec::with_capacity(horizon);
    let mut state = *start;
    for _ in 0..horizon {
        let features = policy_features(&state, track, lookahead, sim.terrain.slope);
        let action = policy_action(theta_k, &features, &sim.vehicle);
        state = sim.step_with_mu(&state, &action, theta_d.mu_s(), theta_d.mu_w())?;
        trace.push(state);
    }
    Ok(trace)
}

/// Control fitness: weighted squared gap to the reference at every horizon
/// step plus a one-off penalty on gain magnitude.
pub fn control_fitness(
    references: &[VehicleState],
    trace: &[VehicleState],
    theta_k: &CtrlChromosome,
    w_r: &[f64; 6],
    w_k: &[f64; 6],
) -> f64 {
    assert_eq!(references.len(), trace.len());
    let mut cost = 0.0;
    for (r, s) in references.iter().zip(trace) {
        cost += weighted_state_error(r, s, w_r);
    }
    for (g, w) in theta_k.genes.iter().zip(w_k) {
        cost += w * g * g;
    }
    cost
}
