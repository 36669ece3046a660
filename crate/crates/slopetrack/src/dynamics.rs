//! Planar rigid-body model of a rear-driven Ackermann car on a uniform
//! incline.
//!
//! The body moves in a slope-aligned frame whose `x` axis points downslope
//! and whose `y` axis runs across the slope, so the in-plane gravity
//! component is `m*g*sin(slope)` along `+x` and the out-of-plane load is
//! `m*g*cos(slope)`. State layout:
//!
//! ```text
//! [x, y, vx, vy, psi, psi_dot]
//! ```
//!
//! with `(x, y)` and `(vx, vy)` the center-of-mass position and velocity in
//! the slope frame and `psi` the heading of the body `b1` axis, normalized
//! to `(-pi, pi]` at API boundaries.
//!
//! Both axles are collapsed to single contact points on the body centerline:
//! the driven rear contact sits `rear_offset` behind the center of mass, the
//! steered front contact `front_offset` ahead of it. Each contact produces a
//! slip-dependent friction force per direction,
//!
//! ```text
//! F = mu * (slip + normal * sgn_eps(slip))
//! ```
//!
//! where `sgn_eps(v) = tanh(v / sign_eps)` smooths the Coulomb sign so the
//! vector field stays C^1 for the fixed-step integrator (`sign_eps <= 0`
//! selects the exact sign, used by analytic oracles). Longitudinal slip is
//! wheel surface speed minus ground speed, so positive slip drives the car
//! forward; lateral forces oppose the lateral ground velocity. Normal loads
//! are quasi-static: they sum to the out-of-plane weight and balance the
//! pitch moment about the center of mass.
//!
//! Integration is classical fixed-step RK4. `sign_eps` and `dt_sim` trade
//! off friction sharpness against stability: the boundary-layer stiffness is
//! roughly `mu * (1 + normal / sign_eps) / mass` on translation and the same
//! times `(dr^2 + df^2) / I_zz` on yaw, and `dt_sim` times that must stay
//! inside RK4's real stability interval (~2.78). The defaults hold that
//! margin for `mu` up to 20.

use crate::error::{Error, Result};

/// Geometry, inertia, and actuator limits of the car.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// m
    pub wheel_radius: f64,
    /// Center of mass to rear contact, m.
    pub rear_offset: f64,
    /// Center of mass to front contact, m.
    pub front_offset: f64,
    /// kg m^2, yaw inertia about the center of mass.
    pub yaw_inertia: f64,
    /// rad, symmetric steering clamp.
    pub steering_limit: f64,
    /// rad/s, symmetric wheel speed clamp.
    pub wheel_speed_limit: f64,
}

impl VehicleParams {
    pub fn wheelbase(&self) -> f64 {
        self.rear_offset + self.front_offset
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            mass: 1.0,
            wheel_radius: 0.10,
            rear_offset: 0.16,
            front_offset: 0.16,
            yaw_inertia: 0.01,
            steering_limit: 30f64.to_radians(),
            wheel_speed_limit: 50.0,
        }
    }
}

/// Slope and friction environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainParams {
    /// Lateral slip friction coefficient.
    pub mu_s: f64,
    /// Longitudinal (wheel) slip friction coefficient.
    pub mu_w: f64,
    /// rad, incline angle.
    pub slope: f64,
    /// m/s^2
    pub gravity: f64,
    /// m/s, width of the smoothed sign boundary layer; <= 0 for exact sign.
    pub sign_eps: f64,
}

impl TerrainParams {
    /// Same environment with substituted friction coefficients; how candidate
    /// dynamics chromosomes are evaluated against recorded motion.
    pub fn with_mu(&self, mu_s: f64, mu_w: f64) -> TerrainParams {
        TerrainParams { mu_s, mu_w, ..*self }
    }
}

impl Default for TerrainParams {
    fn default() -> Self {
        TerrainParams {
            mu_s: 5.0,
            mu_w: 1.0,
            slope: 30f64.to_radians(),
            gravity: 9.81,
            sign_eps: 0.05,
        }
    }
}

/// Planar pose and velocity; see the module doc for the layout convention.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub psi: f64,
    pub psi_dot: f64,
}

impl VehicleState {
    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.vx, self.vy, self.psi, self.psi_dot]
    }

    pub fn from_array(a: [f64; 6]) -> VehicleState {
        VehicleState { x: a[0], y: a[1], vx: a[2], vy: a[3], psi: a[4], psi_dot: a[5] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Body-frame forward velocity, `v . b1`.
    pub fn forward_speed(&self) -> f64 {
        self.vx * self.psi.cos() + self.vy * self.psi.sin()
    }
}

/// Steering angle and commanded wheel speed, clamped to the vehicle's
/// actuator limits on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    phi: f64,
    omega_w: f64,
}

impl Action {
    pub fn new(phi: f64, omega_w: f64, vehicle: &VehicleParams) -> Action {
        Action {
            phi: phi.clamp(-vehicle.steering_limit, vehicle.steering_limit),
            omega_w: omega_w.clamp(-vehicle.wheel_speed_limit, vehicle.wheel_speed_limit),
        }
    }

    pub fn zero() -> Action {
        Action { phi: 0.0, omega_w: 0.0 }
    }

    /// rad, front steering angle.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// rad/s, driven wheel angular speed.
    pub fn omega_w(&self) -> f64 {
        self.omega_w
    }
}

/// Slip velocities at the two contacts, m/s. Longitudinal components are
/// wheel surface speed minus ground speed along the rolling direction
/// (`b1` at the rear, the steered `w1` at the front); lateral components are
/// the ground velocity across the rolling direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipVelocities {
    pub rear_long: f64,
    pub rear_lat: f64,
    pub front_long: f64,
    pub front_lat: f64,
}

/// Per-contact normal loads and signed friction forces, each expressed along
/// its own contact frame axis (rear: body `b1`/`b2`; front: wheel `w1`/`w2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactForces {
    pub rear_normal: f64,
    pub front_normal: f64,
    pub rear_long: f64,
    pub rear_lat: f64,
    pub front_long: f64,
    pub front_lat: f64,
}

/// Normalize an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(std::f64::consts::TAU);
    if r > std::f64::consts::PI {
        r - std::f64::consts::TAU
    } else {
        r
    }
}

/// Smoothed sign: `tanh(v / eps)`, or the exact sign when `eps <= 0`.
fn smoothed_sign(v: f64, eps: f64) -> f64 {
    if eps > 0.0 {
        (v / eps).tanh()
    } else if v == 0.0 {
        0.0
    } else {
        v.signum()
    }
}

/// Quasi-static `(rear, front)` normal loads: they sum to `m g cos(slope)`
/// and satisfy the pitch balance `rear * rear_offset = front * front_offset`.
pub fn normal_forces(vehicle: &VehicleParams, terrain: &TerrainParams) -> (f64, f64) {
    let weight = vehicle.mass * terrain.gravity * terrain.slope.cos();
    let wheelbase = vehicle.wheelbase();
    let rear = weight * vehicle.front_offset / wheelbase;
    let front = weight * vehicle.rear_offset / wheelbase;
    (rear, front)
}

/// Slip velocities at both contacts for the given state and action.
///
/// Contact velocities are rigid-body: `v_contact = v_cm + psi_dot * z x r`,
/// with the rear contact at `-rear_offset * b1` and the front at
/// `+front_offset * b1`.
pub fn slip_velocities(
    state: &VehicleState,
    action: &Action,
    vehicle: &VehicleParams,
) -> SlipVelocities {
    let (sin_psi, cos_psi) = state.psi.sin_cos();
    // Body axes in the slope frame.
    let b1 = [cos_psi, sin_psi];
    let b2 = [-sin_psi, cos_psi];

    // z x b1 = b2, so the rear contact moves at v - psi_dot*dr*b2 and the
    // front at v + psi_dot*df*b2.
    let v_rear = [
        state.vx - state.psi_dot * vehicle.rear_offset * b2[0],
        state.vy - state.psi_dot * vehicle.rear_offset * b2[1],
    ];
    let v_front = [
        state.vx + state.psi_dot * vehicle.front_offset * b2[0],
        state.vy + state.psi_dot * vehicle.front_offset * b2[1],
    ];

    let surface_speed = vehicle.wheel_radius * action.omega_w;

    let (sin_phi, cos_phi) = action.phi.sin_cos();
    // Front wheel axes: w1 = cos(phi) b1 + sin(phi) b2, w2 = z x w1.
    let w1 = [
        cos_phi * b1[0] + sin_phi * b2[0],
        cos_phi * b1[1] + sin_phi * b2[1],
    ];
    let w2 = [
        -sin_phi * b1[0] + cos_phi * b2[0],
        -sin_phi * b1[1] + cos_phi * b2[1],
    ];

    SlipVelocities {
        rear_long: surface_speed - (v_rear[0] * b1[0] + v_rear[1] * b1[1]),
        rear_lat: v_rear[0] * b2[0] + v_rear[1] * b2[1],
        front_long: surface_speed - (v_front[0] * w1[0] + v_front[1] * w1[1]),
        front_lat: v_front[0] * w2[0] + v_front[1] * w2[1],
    }
}

/// Signed friction force magnitude for one contact direction:
/// `mu * (slip + normal * sgn_eps(slip))`.
pub fn friction_force(slip: f64, normal: f64, mu: f64, sign_eps: f64) -> f64 {
    mu * (slip + normal * smoothed_sign(slip, sign_eps))
}

/// Normal loads plus the four signed friction forces. Longitudinal forces
/// point along the rolling direction (propulsive for positive slip); lateral
/// forces oppose lateral ground velocity.
pub fn contact_forces(
    state: &VehicleState,
    action: &Action,
    vehicle: &VehicleParams,
    terrain: &TerrainParams,
) -> ContactForces {
    let (rear_normal, front_normal) = normal_forces(vehicle, terrain);
    let slips = slip_velocities(state, action, vehicle);
    ContactForces {
        rear_normal,
        front_normal,
        rear_long: friction_force(slips.rear_long, rear_normal, terrain.mu_w, terrain.sign_eps),
        rear_lat: -friction_force(slips.rear_lat, rear_normal, terrain.mu_s, terrain.sign_eps),
        front_long: friction_force(slips.front_long, front_normal, terrain.mu_w, terrain.sign_eps),
        front_lat: -friction_force(slips.front_lat, front_normal, terrain.mu_s, terrain.sign_eps),
    }
}

/// Net in-plane force (slope frame) and yaw moment about the center of mass.
pub fn net_force_moment(
    state: &VehicleState,
    action: &Action,
    vehicle: &VehicleParams,
    terrain: &TerrainParams,
) -> ([f64; 2], f64) {
    let f = contact_forces(state, action, vehicle, terrain);
    let (sin_phi, cos_phi) = action.phi.sin_cos();

    // Front contact force resolved into body axes.
    let front_b1 = f.front_long * cos_phi - f.front_lat * sin_phi;
    let front_b2 = f.front_long * sin_phi + f.front_lat * cos_phi;

    let body_b1 = f.rear_long + front_b1;
    let body_b2 = f.rear_lat + front_b2;

    // r x F about z: rear at -dr*b1 contributes -dr*F_b2, front at +df*b1
    // contributes +df*F_b2; longitudinal components pass through the axis.
    let moment = -vehicle.rear_offset * f.rear_lat + vehicle.front_offset * front_b2;

    let (sin_psi, cos_psi) = state.psi.sin_cos();
    let gravity_x = vehicle.mass * terrain.gravity * terrain.slope.sin();
    let force = [
        body_b1 * cos_psi - body_b2 * sin_psi + gravity_x,
        body_b1 * sin_psi + body_b2 * cos_psi,
    ];
    (force, moment)
}

/// Time derivative of the state under the given action.
pub fn state_derivative(
    state: &VehicleState,
    action: &Action,
    vehicle: &VehicleParams,
    terrain: &TerrainParams,
) -> [f64; 6] {
    let (force, moment) = net_force_moment(state, action, vehicle, terrain);
    [
        state.vx,
        state.vy,
        force[0] / vehicle.mass,
        force[1] / vehicle.mass,
        state.psi_dot,
        moment / vehicle.yaw_inertia,
    ]
}

/// Advance the state by `dt` holding `action` constant, integrating with
/// fixed-step RK4 at internal steps no larger than `dt_sim`. The heading is
/// normalized to `(-pi, pi]` on return.
///
/// Errors with [`Error::NonFinite`] if any component leaves the finite range
/// (candidate friction parameters outside the integrator's stability margin
/// can do this; callers treat it as worst-possible fitness).
pub fn step(
    state: &VehicleState,
    action: &Action,
    dt: f64,
    dt_sim: f64,
    vehicle: &VehicleParams,
    terrain: &TerrainParams,
) -> Result<VehicleState> {
    debug_assert!(dt > 0.0 && dt_sim > 0.0);
    // Slack absorbs representation error in dt/dt_sim so exact multiples do
    // not gain a spurious extra substep.
    let n = (dt / dt_sim - 1e-9).ceil().max(1.0) as usize;
    let h = dt / n as f64;

    let mut s = state.to_array();
    for _ in 0..n {
        let k1 = deriv_array(&s, action, vehicle, terrain);
        let k2 = deriv_array(&advance(&s, &k1, h / 2.0), action, vehicle, terrain);
        let k3 = deriv_array(&advance(&s, &k2, h / 2.0), action, vehicle, terrain);
        let k4 = deriv_array(&advance(&s, &k3, h), action, vehicle, terrain);
        for i in 0..6 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    s[4] = wrap_angle(s[4]);
    let out = VehicleState::from_array(s);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::NonFinite)
    }
}

fn deriv_array(
    s: &[f64; 6],
    action: &Action,
    vehicle: &VehicleParams,
    terrain: &TerrainParams,
) -> [f64; 6] {
    let state = VehicleState::from_array(*s);
    state_derivative(&state, action, vehicle, terrain)
}

fn advance(s: &[f64; 6], k: &[f64; 6], h: f64) -> [f64; 6] {
    let mut out = *s;
    for i in 0..6 {
        out[i] += h * k[i];
    }
    out
}

/// Everything needed to propagate the model: plant parameters, environment,
/// and the two timescales (control period and integrator substep).
#[derive(Debug, Clone, Copy)]
pub struct SimContext {
    pub vehicle: VehicleParams,
    pub terrain: TerrainParams,
    /// s, control period; one recorded step per period.
    pub dt_control: f64,
    /// s, RK4 substep bound.
    pub dt_sim: f64,
}

impl SimContext {
    /// One control period with this context's own terrain.
    pub fn step(&self, state: &VehicleState, action: &Action) -> Result<VehicleState> {
        step(state, action, self.dt_control, self.dt_sim, &self.vehicle, &self.terrain)
    }

    /// One control period with substituted friction coefficients; used to
    /// roll out candidate dynamics parameters. The derivative function is
    /// the same one the truth simulation uses.
    pub fn step_with_mu(
        &self,
        state: &VehicleState,
        action: &Action,
        mu_s: f64,
        mu_w: f64,
    ) -> Result<VehicleState> {
        let terrain = self.terrain.with_mu(mu_s, mu_w);
        step(state, action, self.dt_control, self.dt_sim, &self.vehicle, &terrain)
    }
}
