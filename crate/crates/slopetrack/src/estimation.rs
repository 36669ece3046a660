//! Measurement corruption and causal pose/velocity estimation.
//!
//! The simulated sensor reports planar pose only. Velocities are
//! reconstructed by finite-differencing low-passed poses, then low-passing
//! the result: a deliberately simple causal pipeline whose lag is small at
//! the control period used here. The heading difference is unwrapped before
//! dividing by dt so crossings of the ±pi seam do not spike the rate.

use crate::dynamics::{wrap_angle, VehicleState};
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Standard deviations of the additive pose noise.
#[derive(Debug, Clone, Copy)]
pub struct NoiseParams {
    /// m, applied independently to x and y.
    pub sigma_pos: f64,
    /// rad, applied to the heading.
    pub sigma_rot: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams { sigma_pos: 1.3e-4, sigma_rot: 0.83e-4 }
    }
}

/// Timestamped noisy pose sample.
#[derive(Debug, Clone, Copy)]
pub struct Measurement {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

/// Corrupt the true pose with zero-mean Gaussian noise. Draw order is fixed
/// (x, y, psi) so the measurement stream stays aligned across runs that
/// share a seed.
pub fn corrupt<R: Rng>(
    t: f64,
    state: &VehicleState,
    noise: &NoiseParams,
    rng: &mut R,
) -> Measurement {
    let pos = Normal::new(0.0, noise.sigma_pos).expect("sigma_pos must be finite and >= 0");
    let rot = Normal::new(0.0, noise.sigma_rot).expect("sigma_rot must be finite and >= 0");
    Measurement {
        t,
        x: state.x + pos.sample(rng),
        y: state.y + pos.sample(rng),
        psi: wrap_angle(state.psi + rot.sample(rng)),
    }
}

/// First-order low-pass pose filter with filtered finite-difference
/// velocities. `beta` in (0, 1] is the update weight on new data; 1 means
/// pass-through.
#[derive(Debug, Clone)]
pub struct Estimator {
    beta: f64,
    inner: Option<Inner>,
}

#[derive(Debug, Clone, Copy)]
struct Inner {
    t: f64,
    /// Filtered x, y, and unwrapped heading.
    pose: [f64; 3],
    /// Filtered vx, vy, heading rate.
    vel: [f64; 3],
}

impl Estimator {
    pub fn new(beta: f64) -> Estimator {
        assert!(beta > 0.0 && beta <= 1.0, "beta must be in (0, 1], got {beta}");
        Estimator { beta, inner: None }
    }

    /// Fold in one measurement and return the current state estimate.
    /// The first measurement initializes the pose with zero velocity.
    /// Errors with [`Error::NonMonotoneTime`] unless timestamps strictly
    /// increase.
    pub fn update(&mut self, m: &Measurement) -> Result<VehicleState> {
        let inner = match &mut self.inner {
            None => {
                self.inner = Some(Inner { t: m.t, pose: [m.x, m.y, m.psi], vel: [0.0; 3] });
                self.inner.as_mut().unwrap()
            }
            Some(inner) => {
                let dt = m.t - inner.t;
                if dt <= 0.0 {
                    return Err(Error::NonMonotoneTime { prev: inner.t, next: m.t });
                }
                // Unwrap the heading sample onto the filter's continuous
                // heading before mixing.
                let psi_meas = inner.pose[2] + wrap_angle(m.psi - inner.pose[2]);
                let meas = [m.x, m.y, psi_meas];
                for i in 0..3 {
                    let prev = inner.pose[i];
                    inner.pose[i] += self.beta * (meas[i] - prev);
                    let raw_vel = (inner.pose[i] - prev) / dt;
                    inner.vel[i] += self.beta * (raw_vel - inner.vel[i]);
                }
                inner.t = m.t;
                inner
            }
        };
        Ok(VehicleState {
            x: inner.pose[0],
            y: inner.pose[1],
            vx: inner.vel[0],
            vy: inner.vel[1],
            psi: wrap_angle(inner.pose[2]),
            psi_dot: inner.vel[2],
        })
    }
}
