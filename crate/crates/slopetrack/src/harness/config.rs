//! Experiment configuration: TOML sections mirroring the domain types.
//!
//! Angles are configured in degrees (`*_deg` keys) and converted to radians
//! when the runtime configuration is built. Every key has a default, so an
//! empty file describes the stock experiment; unknown keys are rejected to
//! surface typos.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::BaselineConfig;
use crate::dynamics::{SimContext, TerrainParams, VehicleParams};
use crate::error::{Error, Result};
use crate::estimation::NoiseParams;
use crate::ga::GaConfig;
use crate::track::Track;

/// Which controller commands the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Baseline,
    Ga,
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ControllerKind::Baseline => write!(f, "baseline"),
            ControllerKind::Ga => write!(f, "ga"),
        }
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ControllerKind> {
        match s {
            "baseline" => Ok(ControllerKind::Baseline),
            "ga" => Ok(ControllerKind::Ga),
            other => Err(Error::Config(format!(
                "unknown controller '{other}' (expected 'baseline' or 'ga')"
            ))),
        }
    }
}

fn deg(v: f64) -> f64 {
    v.to_radians()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSection {
    pub mass: f64,
    pub wheel_radius: f64,
    pub rear_offset: f64,
    pub front_offset: f64,
    pub yaw_inertia: f64,
    pub steering_limit_deg: f64,
    pub wheel_speed_limit: f64,
}

impl Default for VehicleSection {
    fn default() -> Self {
        let v = VehicleParams::default();
        VehicleSection {
            mass: v.mass,
            wheel_radius: v.wheel_radius,
            rear_offset: v.rear_offset,
            front_offset: v.front_offset,
            yaw_inertia: v.yaw_inertia,
            steering_limit_deg: v.steering_limit.to_degrees(),
            wheel_speed_limit: v.wheel_speed_limit,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainSection {
    pub mu_s: f64,
    pub mu_w: f64,
    pub slope_deg: f64,
    pub gravity: f64,
    pub sign_eps: f64,
}

impl Default for TerrainSection {
    fn default() -> Self {
        let t = TerrainParams::default();
        TerrainSection {
            mu_s: t.mu_s,
            mu_w: t.mu_w,
            slope_deg: t.slope.to_degrees(),
            gravity: t.gravity,
            sign_eps: t.sign_eps,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackSection {
    pub length: f64,
    pub width: f64,
    pub spacing: f64,
    pub orientation_deg: f64,
    pub desired_speed: f64,
    /// Waypoint file overriding the stadium shape (one `x y` pair per line).
    pub file: Option<PathBuf>,
}

impl Default for TrackSection {
    fn default() -> Self {
        TrackSection {
            length: 3.0,
            width: 2.0,
            spacing: 0.05,
            orientation_deg: 45.0,
            desired_speed: 0.2,
            file: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub k_p: f64,
    pub lookahead: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        let b = BaselineConfig::default();
        BaselineSection { k_p: b.k_p, lookahead: b.lookahead }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma_pos: f64,
    pub sigma_rot: f64,
    /// Smoothing factor of the pose/velocity low-pass cascade, in (0, 1].
    /// 1.0 passes measurements through unfiltered: with millimeter-grade
    /// pose noise, any heavier smoothing adds lag that swamps the friction
    /// identification signal in the one-step prediction fitness.
    pub estimator_beta: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseParams::default();
        NoiseSection { sigma_pos: n.sigma_pos, sigma_rot: n.sigma_rot, estimator_beta: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSection {
    pub prediction_lookback: usize,
    pub tracking_horizon: usize,
    pub crossover_rate: f64,
    pub dyn_population: usize,
    pub ctrl_population: usize,
    pub elite_count: usize,
    pub inject_count: usize,
    pub w_s: [f64; 6],
    pub w_r: [f64; 6],
    pub w_k: [f64; 6],
    pub mu_s_min: f64,
    pub mu_s_max: f64,
    pub mu_w_min: f64,
    pub mu_w_max: f64,
    pub gain_min: f64,
    pub gain_max: f64,
    pub mutation_frac: f64,
    pub injection_horizon: usize,
    pub q_threshold: f64,
    pub c_threshold: f64,
    pub gate_window: usize,
    pub feature_lookahead: f64,
}

impl Default for GaSection {
    fn default() -> Self {
        let g = GaConfig::default();
        GaSection {
            prediction_lookback: g.prediction_lookback,
            tracking_horizon: g.tracking_horizon,
            crossover_rate: g.crossover_rate,
            dyn_population: g.dyn_population,
            ctrl_population: g.ctrl_population,
            elite_count: g.elite_count,
            inject_count: g.inject_count,
            w_s: g.w_s,
            w_r: g.w_r,
            w_k: g.w_k,
            mu_s_min: g.mu_s_bounds.0,
            mu_s_max: g.mu_s_bounds.1,
            mu_w_min: g.mu_w_bounds.0,
            mu_w_max: g.mu_w_bounds.1,
            gain_min: g.gain_bounds.0,
            gain_max: g.gain_bounds.1,
            mutation_frac: g.mutation_frac,
            injection_horizon: g.injection_horizon,
            q_threshold: g.q_threshold,
            c_threshold: g.c_threshold,
            gate_window: g.gate_window,
            feature_lookahead: g.feature_lookahead,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub controller: ControllerKind,
    pub laps: u32,
    pub seed: u64,
    pub dt_control: f64,
    pub dt_sim: f64,
    /// Initial lateral displacement from the track, meters to the left of
    /// the tangent at the starting waypoint.
    pub initial_offset: f64,
    /// RMS cross-track threshold declaring convergence, meters.
    pub convergence_eps: f64,
    /// Run abort threshold as a multiple of the nominal completion time.
    pub max_steps_factor: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            controller: ControllerKind::Ga,
            laps: 10,
            seed: 0,
            dt_control: 0.2,
            dt_sim: 2.5e-4,
            initial_offset: 0.3,
            convergence_eps: 0.05,
            max_steps_factor: 8.0,
        }
    }
}

/// On-disk experiment description; see `configs/default.toml` for the
/// annotated stock file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub vehicle: VehicleSection,
    pub terrain: TerrainSection,
    pub track: TrackSection,
    pub baseline: BaselineSection,
    pub noise: NoiseSection,
    pub ga: GaSection,
    pub experiment: ExperimentSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    /// Validate and assemble the runtime configuration.
    pub fn build(&self) -> Result<RunConfig> {
        let v = &self.vehicle;
        for (name, value) in [
            ("vehicle.mass", v.mass),
            ("vehicle.wheel_radius", v.wheel_radius),
            ("vehicle.rear_offset", v.rear_offset),
            ("vehicle.front_offset", v.front_offset),
            ("vehicle.yaw_inertia", v.yaw_inertia),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        let vehicle = VehicleParams {
            mass: v.mass,
            wheel_radius: v.wheel_radius,
            rear_offset: v.rear_offset,
            front_offset: v.front_offset,
            yaw_inertia: v.yaw_inertia,
            steering_limit: deg(v.steering_limit_deg),
            wheel_speed_limit: v.wheel_speed_limit,
        };

        let t = &self.terrain;
        if t.mu_s < 0.0 || t.mu_w < 0.0 {
            return Err(Error::Config("terrain friction coefficients must be >= 0".into()));
        }
        let terrain = TerrainParams {
            mu_s: t.mu_s,
            mu_w: t.mu_w,
            slope: deg(t.slope_deg),
            gravity: t.gravity,
            sign_eps: t.sign_eps,
        };

        let e = &self.experiment;
        if e.laps < 1 {
            return Err(Error::Config("experiment.laps must be >= 1".into()));
        }
        if !(e.dt_control > 0.0 && e.dt_sim > 0.0 && e.dt_sim <= e.dt_control) {
            return Err(Error::Config(format!(
                "need 0 < dt_sim <= dt_control, got dt_sim {} dt_control {}",
                e.dt_sim, e.dt_control
            )));
        }
        if !(e.max_steps_factor >= 1.0) {
            return Err(Error::Config("experiment.max_steps_factor must be >= 1".into()));
        }
        if !(e.convergence_eps > 0.0) {
            return Err(Error::Config("experiment.convergence_eps must be > 0".into()));
        }

        let tr = &self.track;
        if !(tr.desired_speed > 0.0) {
            return Err(Error::Config("track.desired_speed must be > 0".into()));
        }
        let track = match &tr.file {
            Some(path) => Track::from_file(path, tr.desired_speed)?,
            None => Track::stadium(
                tr.length,
                tr.width,
                tr.spacing,
                deg(tr.orientation_deg),
                tr.desired_speed,
            )?,
        };

        let n = &self.noise;
        if n.sigma_pos < 0.0 || n.sigma_rot < 0.0 {
            return Err(Error::Config("noise sigmas must be >= 0".into()));
        }
        if !(n.estimator_beta > 0.0 && n.estimator_beta <= 1.0) {
            return Err(Error::Config(format!(
                "noise.estimator_beta must be in (0, 1], got {}",
                n.estimator_beta
            )));
        }

        let g = &self.ga;
        let ga = GaConfig {
            prediction_lookback: g.prediction_lookback,
            tracking_horizon: g.tracking_horizon,
            crossover_rate: g.crossover_rate,
            dyn_population: g.dyn_population,
            ctrl_population: g.ctrl_population,
            elite_count: g.elite_count,
            inject_count: g.inject_count,
            w_s: g.w_s,
            w_r: g.w_r,
            w_k: g.w_k,
            mu_s_bounds: (g.mu_s_min, g.mu_s_max),
            mu_w_bounds: (g.mu_w_min, g.mu_w_max),
            gain_bounds: (g.gain_min, g.gain_max),
            mutation_frac: g.mutation_frac,
            injection_horizon: g.injection_horizon,
            q_threshold: g.q_threshold,
            c_threshold: g.c_threshold,
            gate_window: g.gate_window,
            feature_lookahead: g.feature_lookahead,
        };
        ga.validate().map_err(|msg| Error::Config(format!("ga: {msg}")))?;

        let b = &self.baseline;
        if !(b.k_p > 0.0 && b.lookahead > 0.0) {
            return Err(Error::Config("baseline.k_p and baseline.lookahead must be > 0".into()));
        }

        Ok(RunConfig {
            sim: SimContext {
                vehicle,
                terrain,
                dt_control: e.dt_control,
                dt_sim: e.dt_sim,
            },
            track,
            baseline: BaselineConfig { k_p: b.k_p, lookahead: b.lookahead },
            noise: NoiseParams { sigma_pos: n.sigma_pos, sigma_rot: n.sigma_rot },
            estimator_beta: n.estimator_beta,
            ga,
            controller: e.controller,
            laps: e.laps,
            seed: e.seed,
            initial_offset: e.initial_offset,
            convergence_eps: e.convergence_eps,
            max_steps_factor: e.max_steps_factor,
        })
    }
}

/// Fully validated runtime configuration consumed by [`super::run`].
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sim: SimContext,
    pub track: Track,
    pub baseline: BaselineConfig,
    pub noise: NoiseParams,
    pub estimator_beta: f64,
    pub ga: GaConfig,
    pub controller: ControllerKind,
    pub laps: u32,
    pub seed: u64,
    pub initial_offset: f64,
    pub convergence_eps: f64,
    pub max_steps_factor: f64,
}
