//! Experiment orchestration: closed-loop runs, tracking cost, convergence
//! detection, and paired baseline/learner comparisons.
//!
//! One control step is: corrupt the true pose into a measurement, update
//! the estimator, let the active controller pick an action (timed), log,
//! then advance the truth one control period. The learner sees only
//! estimates; cross-track and speed errors are logged against the truth.
//! A run ends once the accumulated along-track arc covers the requested
//! laps, or at a step cap for controllers that never get there.

pub mod config;
pub mod logging;

pub use config::{ControllerKind, FileConfig, RunConfig};
pub use logging::{
    format_comparison, mean_std, write_comparison_json, write_generations_csv, write_steps_csv,
    write_summary_json, Aggregate, ComparisonReport, ComparisonRow, GenerationRow, RunSummary,
    StepRow, GENERATIONS_HEADER, STEPS_HEADER,
};

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baseline::baseline_action;
use crate::dynamics::VehicleState;
use crate::error::{Error, Result};
use crate::estimation::{corrupt, Estimator};
use crate::ga::{policy_features, ControllerMode, HistoryEntry, Learner};
use crate::track::Track;

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub steps: Vec<StepRow>,
    pub generations: Vec<GenerationRow>,
}

/// Starting state: displaced `offset` meters to the left of the track's
/// first waypoint, heading along the tangent, at rest.
pub fn initial_state(track: &Track, offset: f64) -> VehicleState {
    let start = track.point_at_arc(0.0);
    let tangent = track.tangent_at_arc(0.0);
    VehicleState {
        x: start[0] - offset * tangent[1],
        y: start[1] + offset * tangent[0],
        vx: 0.0,
        vy: 0.0,
        psi: tangent[1].atan2(tangent[0]),
        psi_dot: 0.0,
    }
}

/// Execute one closed-loop experiment. Deterministic per (config, seed)
/// except for the wall-clock timing fields.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let track = &cfg.track;
    let sim = &cfg.sim;
    let v_d = track.desired_speed();
    let lap_len = track.total_length();
    let target_arc = cfg.laps as f64 * lap_len;
    let nominal_steps = target_arc / v_d / sim.dt_control;
    let max_rows = (nominal_steps * cfg.max_steps_factor).ceil() as usize + 1;

    let mut meas_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut estimator = Estimator::new(cfg.estimator_beta);
    let mut learner = match cfg.controller {
        ControllerKind::Ga => Some(Learner::new(cfg.ga, cfg.seed)),
        ControllerKind::Baseline => None,
    };

    let mut truth = initial_state(track, cfg.initial_offset);
    let mut t = 0.0;
    let mut traveled = 0.0;
    let mut prev_arc = track.nearest([truth.x, truth.y]).arc_position;
    let mut finished = false;

    let mut steps: Vec<StepRow> = Vec::new();
    let mut generations: Vec<GenerationRow> = Vec::new();

    loop {
        let meas = corrupt(t, &truth, &cfg.noise, &mut meas_rng);
        let est = estimator.update(&meas)?;

        let clock = Instant::now();
        let (action, mode, lout) = match learner.as_mut() {
            None => (
                baseline_action(&est, track, &cfg.baseline, &sim.vehicle),
                ControllerMode::Baseline,
                None,
            ),
            Some(l) => {
                let out = l.step(&est, track, sim);
                let action = out
                    .action
                    .unwrap_or_else(|| baseline_action(&est, track, &cfg.baseline, &sim.vehicle));
                (action, out.mode, Some(out))
            }
        };
        let comp_ms = clock.elapsed().as_secs_f64() * 1e3;

        if let Some(l) = learner.as_mut() {
            let features = policy_features(&est, track, cfg.ga.feature_lookahead, sim.terrain.slope);
            let reference = track.reference_states([est.x, est.y], 1, sim.dt_control)[0];
            l.record(HistoryEntry { t, state: est, action, reference, features });
        }

        if let Some(out) = &lout {
            if out.evaluated {
                let best_dyn = out.best_dyn.expect("evaluated step carries a best");
                let best_ctrl = out.best_ctrl.expect("evaluated step carries a best");
                generations.push(GenerationRow {
                    step: steps.len(),
                    t,
                    best_q: out.best_q,
                    mu_s_hat: best_dyn.mu_s(),
                    mu_w_hat: best_dyn.mu_w(),
                    best_c: out.best_c,
                    gains: best_ctrl.genes,
                });
            }
        }

        let q = track.nearest([truth.x, truth.y]);
        steps.push(StepRow {
            t,
            truth,
            estimate: est,
            phi: action.phi(),
            omega_w: action.omega_w(),
            cross_track: q.signed_cross_track,
            v_err: v_d - truth.forward_speed(),
            mode,
            comp_ms,
            best_q: lout.as_ref().map_or(f64::NAN, |o| o.best_q),
            mu_s_hat: lout.as_ref().and_then(|o| o.best_dyn).map_or(f64::NAN, |d| d.mu_s()),
            mu_w_hat: lout.as_ref().and_then(|o| o.best_dyn).map_or(f64::NAN, |d| d.mu_w()),
            best_c: lout.as_ref().map_or(f64::NAN, |o| o.best_c),
        });

        if finished || steps.len() >= max_rows {
            break;
        }

        truth = sim.step(&truth, &action).map_err(|e| match e {
            Error::NonFinite => Error::Diverged { row: steps.len() },
            other => other,
        })?;
        t += sim.dt_control;
        let arc = track.nearest([truth.x, truth.y]).arc_position;
        let mut delta = arc - prev_arc;
        if delta > lap_len / 2.0 {
            delta -= lap_len;
        } else if delta < -lap_len / 2.0 {
            delta += lap_len;
        }
        traveled += delta;
        prev_arc = arc;
        finished = traveled >= target_arc - 1e-9;
    }

    let t_f = steps.last().expect("at least one step").t;
    let window = lap_len / v_d;
    let convergence = detect_convergence(&steps, window, cfg.convergence_eps);
    let j_start = convergence.unwrap_or_else(|| steps[0].t);
    let (j_r, j_v, j_tot) = tracking_cost(&steps, j_start, t_f)?;
    let comp: Vec<f64> = steps.iter().map(|r| r.comp_ms).collect();
    let (comp_ms_mean, comp_ms_std) = mean_std(&comp);
    let laps_completed = (((traveled + 1e-9) / lap_len).floor().max(0.0) as u32).min(cfg.laps);
    let final_gen = generations.last();

    Ok(RunOutput {
        summary: RunSummary {
            controller: cfg.controller.to_string(),
            seed: cfg.seed,
            laps_completed,
            total_time_s: t_f,
            convergence_time_s: convergence,
            j_r,
            j_v,
            j_tot,
            comp_ms_mean,
            comp_ms_std,
            final_mu_s: final_gen.map(|g| g.mu_s_hat),
            final_mu_w: final_gen.map(|g| g.mu_w_hat),
        },
        steps,
        generations,
    })
}

/// Trapezoidal integrals of |cross-track| and |speed error| over the log
/// rows with `t0 <= t <= t1`; the window bounds must be log timestamps.
pub fn tracking_cost(rows: &[StepRow], t0: f64, t1: f64) -> Result<(f64, f64, f64)> {
    if t0 >= t1 {
        return Err(Error::EmptyWindow);
    }
    let tol = 1e-9;
    let slice: Vec<&StepRow> =
        rows.iter().filter(|r| r.t >= t0 - tol && r.t <= t1 + tol).collect();
    if slice.len() < 2 {
        return Err(Error::EmptyWindow);
    }
    let mut j_r = 0.0;
    let mut j_v = 0.0;
    for pair in slice.windows(2) {
        let dt = pair[1].t - pair[0].t;
        j_r += dt * (pair[0].cross_track.abs() + pair[1].cross_track.abs()) / 2.0;
        j_v += dt * (pair[0].v_err.abs() + pair[1].v_err.abs()) / 2.0;
    }
    Ok((j_r, j_v, j_r + j_v))
}

/// Earliest logged time from which the cross-track RMS over one full
/// `window` stays below `eps`. `None` if no full window qualifies.
pub fn detect_convergence(rows: &[StepRow], window: f64, eps: f64) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let tol = 1e-9;
    let last_t = rows[rows.len() - 1].t;
    // Prefix sums of squared cross-track for O(1) window RMS.
    let mut prefix = Vec::with_capacity(rows.len() + 1);
    prefix.push(0.0);
    for r in rows {
        prefix.push(prefix.last().unwrap() + r.cross_track * r.cross_track);
    }
    for (i, row) in rows.iter().enumerate() {
        let end = row.t + window;
        if end > last_t + tol {
            return None;
        }
        let j = rows.partition_point(|r| r.t <= end + tol);
        let count = j - i;
        let rms = ((prefix[j] - prefix[i]) / count as f64).sqrt();
        if rms < eps {
            return Some(row.t);
        }
    }
    None
}

/// Run both configurations across `seeds` and aggregate. Both must share
/// the same track and lap count so the costs are comparable.
pub fn compare(cfg_a: &RunConfig, cfg_b: &RunConfig, seeds: &[u64]) -> Result<ComparisonReport> {
    if cfg_a.laps != cfg_b.laps {
        return Err(Error::Config(format!(
            "compare needs matching lap counts, got {} vs {}",
            cfg_a.laps, cfg_b.laps
        )));
    }
    if cfg_a.track.waypoints() != cfg_b.track.waypoints()
        || cfg_a.track.desired_speed() != cfg_b.track.desired_speed()
    {
        return Err(Error::Config("compare needs both runs on the same track".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("compare needs at least one seed".into()));
    }

    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut a_cfg = cfg_a.clone();
        a_cfg.seed = seed;
        let mut b_cfg = cfg_b.clone();
        b_cfg.seed = seed;
        let a = run(&a_cfg)?.summary;
        let b = run(&b_cfg)?.summary;
        let j_tot_ratio = if b.j_tot > 0.0 { a.j_tot / b.j_tot } else { f64::INFINITY };
        rows.push(ComparisonRow { seed, a, b, j_tot_ratio });
    }

    let agg = |f: &dyn Fn(&ComparisonRow) -> f64| {
        let values: Vec<f64> = rows.iter().map(f).collect();
        let (mean, std) = mean_std(&values);
        Aggregate { mean, std }
    };
    Ok(ComparisonReport {
        controller_a: cfg_a.controller.to_string(),
        controller_b: cfg_b.controller.to_string(),
        laps: cfg_a.laps,
        j_tot_a: agg(&|r| r.a.j_tot),
        j_tot_b: agg(&|r| r.b.j_tot),
        j_tot_ratio: agg(&|r| r.j_tot_ratio),
        comp_ms_a: agg(&|r| r.a.comp_ms_mean),
        comp_ms_b: agg(&|r| r.b.comp_ms_mean),
        rows,
    })
}
