//! Geometric path-following baseline: pure-pursuit steering plus a
//! proportional wheel-speed command.
//!
//! This controller knows nothing about the terrain. It serves two roles:
//! it drives the car before the learned policy is trusted, and it is the
//! reference point the learned policy is compared against.

use crate::dynamics::{Action, VehicleParams, VehicleState};
use crate::track::{intersection_angle, Track};

#[derive(Debug, Clone, Copy)]
pub struct BaselineConfig {
    /// Proportional gain from forward-speed error to wheel speed command.
    pub k_p: f64,
    /// m, look-ahead arc distance for the pursuit target.
    pub lookahead: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { k_p: 5.0, lookahead: 0.5 }
    }
}

/// Wheel speed command `k_p * (v_desired - v_forward)`, clamped to the
/// actuator limit.
pub fn velocity_command(
    desired_speed: f64,
    forward_speed: f64,
    k_p: f64,
    wheel_speed_limit: f64,
) -> f64 {
    (k_p * (desired_speed - forward_speed)).clamp(-wheel_speed_limit, wheel_speed_limit)
}

/// Pure-pursuit steering toward a target seen at bearing `alpha`:
/// `atan(2 * wheelbase * sin(alpha) / lookahead)`, clamped to the steering
/// limit.
pub fn pure_pursuit(alpha: f64, wheelbase: f64, lookahead: f64, steering_limit: f64) -> f64 {
    (2.0 * wheelbase * alpha.sin() / lookahead)
        .atan()
        .clamp(-steering_limit, steering_limit)
}

/// Full baseline decision for one control step: chase the look-ahead point,
/// regulate forward speed toward the track's desired speed.
pub fn baseline_action(
    state: &VehicleState,
    track: &Track,
    cfg: &BaselineConfig,
    vehicle: &VehicleParams,
) -> Action {
    let target = track.lookahead([state.x, state.y], cfg.lookahead);
    let alpha = intersection_angle(state.x, state.y, state.psi, target);
    let phi = pure_pursuit(alpha, vehicle.wheelbase(), cfg.lookahead, vehicle.steering_limit);
    let omega = velocity_command(
        track.desired_speed(),
        state.forward_speed(),
        cfg.k_p,
        vehicle.wheel_speed_limit,
    );
    Action::new(phi, omega, vehicle)
}
