// Release gate: one test per acceptance criterion, each printing a single
// PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//
// Criteria 1, 2, and 9 share ten stock 10-lap experiments per controller,
// cached across tests; expect a few minutes of wall time on first use.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slopetrack::baseline::baseline_action;
use slopetrack::dynamics::{
    normal_forces, Action, SimContext, TerrainParams, VehicleParams, VehicleState,
};
use slopetrack::ga::{
    crossover, evolve_generation, inject_inverse_model, mutate, predict_state,
    prediction_fitness, rollout_tracking, select_index, control_fitness, CtrlChromosome,
    DynChromosome, EvolveParams, HistoryBuffer, HistoryEntry,
};
use slopetrack::harness::{initial_state, run, ControllerKind, FileConfig, RunConfig, RunOutput};

fn verdict(name: &str, pass: bool, details: &str) {
    println!("criterion {name}: {} [{details}]", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {name} failed: {details}");
}

fn stock_config(controller: ControllerKind, seed: u64) -> RunConfig {
    let mut fc = FileConfig::default();
    fc.experiment.controller = controller;
    fc.experiment.seed = seed;
    fc.build().unwrap()
}

struct SeedRuns {
    ga: Vec<RunOutput>,
    baseline_j_tot: Vec<f64>,
}

static RUNS: OnceLock<SeedRuns> = OnceLock::new();

/// Ten stock experiments per controller, seeds 0..10.
fn seed_runs() -> &'static SeedRuns {
    RUNS.get_or_init(|| SeedRuns {
        ga: (0..10).map(|s| run(&stock_config(ControllerKind::Ga, s)).unwrap()).collect(),
        baseline_j_tot: (0..10)
            .map(|s| run(&stock_config(ControllerKind::Baseline, s)).unwrap().summary.j_tot)
            .collect(),
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    values[values.len() / 2]
}

#[test]
fn criterion_1_learner_beats_baseline_fivefold() {
    let runs = seed_runs();
    let mut passes = 0;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (out, &base_j) in runs.ga.iter().zip(&runs.baseline_j_tot) {
        let ratio = base_j / out.summary.j_tot;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        if out.summary.laps_completed == 10 && ratio >= 5.0 {
            passes += 1;
        }
    }
    verdict(
        "1 (post-convergence tracking cost at least 5x below baseline, 10 laps)",
        passes >= 8,
        &format!("{passes}/10 seeds, cost ratios {lo:.1}..{hi:.1}"),
    );
}

#[test]
fn criterion_2_friction_estimate_converges_into_band_and_holds() {
    let runs = seed_runs();
    let cfg = stock_config(ControllerKind::Ga, 0);
    let truth = (cfg.sim.terrain.mu_s, cfg.sim.terrain.mu_w);
    let in_band = |v: f64, t: f64| v >= 0.8 * t && v <= 1.2 * t;

    // One nominal lap of control steps: the excitation pattern repeats per
    // lap, so this is the natural settling window for the estimate. The
    // instantaneous per-generation best carries measurement-noise jitter at
    // the band edge by design; the settled (trailing-median) estimate must
    // enter the +/-20% band and never leave it again, and the raw series
    // must spend at least two thirds of its post-entry time in band.
    let window = (cfg.track.total_length() / cfg.track.desired_speed() / cfg.sim.dt_control)
        .ceil() as usize;

    let mut passes = 0;
    let mut entry_times = Vec::new();
    let mut resid_lo = f64::INFINITY;
    let mut resid_hi = 0.0f64;
    for out in &runs.ga {
        let gens = &out.generations;
        assert!(gens.len() > window, "run too short for a settling window");
        let raw_in: Vec<bool> = gens
            .iter()
            .map(|g| in_band(g.mu_s_hat, truth.0) && in_band(g.mu_w_hat, truth.1))
            .collect();
        let med_in: Vec<bool> = (0..gens.len())
            .map(|i| {
                if i + 1 < window {
                    return false;
                }
                let seg = &gens[i + 1 - window..=i];
                let ms = median(&mut seg.iter().map(|g| g.mu_s_hat).collect::<Vec<_>>());
                let mw = median(&mut seg.iter().map(|g| g.mu_w_hat).collect::<Vec<_>>());
                in_band(ms, truth.0) && in_band(mw, truth.1)
            })
            .collect();

        let entry = med_in.iter().position(|&b| b);
        let holds = entry.is_some_and(|e| med_in[e..].iter().all(|&b| b));
        let raw_entry = raw_in.iter().position(|&b| b);
        let raw_residency = raw_entry.map_or(0.0, |e| {
            raw_in[e..].iter().filter(|&&b| b).count() as f64 / (raw_in.len() - e) as f64
        });
        resid_lo = resid_lo.min(raw_residency);
        resid_hi = resid_hi.max(raw_residency);
        if let Some(e) = entry {
            entry_times.push(gens[e].t);
        }
        if holds && raw_residency >= 2.0 / 3.0 {
            passes += 1;
        }
    }
    let (t_lo, t_hi) = entry_times
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    verdict(
        "2 (friction estimate settles within +/-20% of truth and stays)",
        passes >= 8,
        &format!(
            "{passes}/10 seeds; settled-entry t {t_lo:.1}..{t_hi:.1} s; \
             raw in-band residency {resid_lo:.2}..{resid_hi:.2}"
        ),
    );
}

#[test]
fn criterion_3_fitness_grid_attains_minimum_at_true_friction() {
    let cfg = stock_config(ControllerKind::Ga, 0);
    let sim = cfg.sim;

    // Noiseless replay: 50 control steps of true states and executed
    // actions, driven by the baseline from the stock starting offset.
    let mut state = initial_state(&cfg.track, cfg.initial_offset);
    let mut transitions = Vec::with_capacity(50);
    for _ in 0..50 {
        let action = baseline_action(&state, &cfg.track, &cfg.baseline, &sim.vehicle);
        let next = sim.step(&state, &action).unwrap();
        transitions.push((state, action, next));
        state = next;
    }

    // Brute-force the prediction fitness over the identification domain.
    let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
    for i in 0..=40usize {
        let mu_s = i as f64 * 0.5;
        for j in 0..=40usize {
            let mu_w = j as f64 * 0.1;
            let mut q = 0.0;
            for (s0, a, s1) in &transitions {
                match sim.step_with_mu(s0, a, mu_s, mu_w) {
                    Ok(p) => q += prediction_fitness(s1, &p, &cfg.ga.w_s),
                    Err(_) => {
                        q = f64::INFINITY;
                        break;
                    }
                }
            }
            if q < best.0 {
                best = (q, i, j);
            }
        }
    }
    let got = (best.1 as f64 * 0.5, best.2 as f64 * 0.1);
    verdict(
        "3 (41x41 grid argmin at the true-friction cell)",
        got == (sim.terrain.mu_s, sim.terrain.mu_w),
        &format!("argmin at ({}, {}), residual {:.3e}", got.0, got.1, best.0),
    );
}

/// Independent oracle: least squares via explicitly formed normal equations,
/// solved by Gaussian elimination with partial pivoting. Returns gains in
/// the same row-major 2x3 layout as the injection.
fn normal_equations_gains(features: &[[f64; 3]], actions: &[[f64; 2]]) -> [f64; 6] {
    let mut ftf = [[0.0; 3]; 3];
    let mut fta = [[0.0; 2]; 3];
    for (f, a) in features.iter().zip(actions) {
        for r in 0..3 {
            for c in 0..3 {
                ftf[r][c] += f[r] * f[c];
            }
            for c in 0..2 {
                fta[r][c] += f[r] * a[c];
            }
        }
    }
    let mut m = [[0.0; 5]; 3];
    for r in 0..3 {
        m[r][..3].copy_from_slice(&ftf[r]);
        m[r][3] = fta[r][0];
        m[r][4] = fta[r][1];
    }
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for c in col..5 {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    let mut x = [[0.0; 2]; 3];
    for rhs in 0..2 {
        for row in (0..3).rev() {
            let mut v = m[row][3 + rhs];
            for c in row + 1..3 {
                v -= m[row][c] * x[c][rhs];
            }
            x[row][rhs] = v / m[row][row];
        }
    }
    let mut genes = [0.0; 6];
    for r in 0..2 {
        for c in 0..3 {
            genes[r * 3 + c] = x[c][r];
        }
    }
    genes
}

fn history_from(features: &[[f64; 3]], actions: &[[f64; 2]]) -> HistoryBuffer {
    let wide = VehicleParams {
        steering_limit: 1e9,
        wheel_speed_limit: 1e9,
        ..VehicleParams::default()
    };
    let mut hist = HistoryBuffer::new(features.len());
    for (k, (f, a)) in features.iter().zip(actions).enumerate() {
        hist.push(HistoryEntry {
            t: k as f64 * 0.2,
            state: VehicleState::default(),
            action: Action::new(a[0], a[1], &wide),
            reference: VehicleState::default(),
            features: *f,
        });
    }
    hist
}

fn relative_gap(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}

#[test]
fn criterion_4_injection_matches_independent_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let h = 20;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let features: Vec<[f64; 3]> =
            (0..h).map(|_| std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0)).collect();
        let actions: Vec<[f64; 2]> =
            (0..h).map(|_| std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0)).collect();
        let got = inject_inverse_model(&history_from(&features, &actions), h)
            .expect("random continuous systems are full rank");
        let oracle = normal_equations_gains(&features, &actions);
        worst = worst.max(relative_gap(&got.genes, &oracle));
    }

    // Round trip: noiseless history generated by a known gain matrix.
    let k_true = [0.3, -0.2, 0.05, 1.4, -0.8, 0.6];
    let features: Vec<[f64; 3]> = (0..10)
        .map(|k| {
            let k = k as f64;
            [(0.7 * k).sin(), (1.3 * k).cos(), 0.5236]
        })
        .collect();
    let actions: Vec<[f64; 2]> = features
        .iter()
        .map(|f| {
            [
                k_true[0] * f[0] + k_true[1] * f[1] + k_true[2] * f[2],
                k_true[3] * f[0] + k_true[4] * f[1] + k_true[5] * f[2],
            ]
        })
        .collect();
    let recovered = inject_inverse_model(&history_from(&features, &actions), 10).unwrap();
    let round_trip = relative_gap(&recovered.genes, &k_true);

    verdict(
        "4 (least-squares injection matches the normal-equations oracle)",
        worst <= 1e-8 && round_trip <= 1e-8,
        &format!("worst oracle gap {worst:.2e} over 100 systems, round trip {round_trip:.2e}"),
    );
}

#[test]
fn criterion_5_physics_invariants() {
    let vehicle = VehicleParams::default();
    let sloped = TerrainParams::default();
    let flat = TerrainParams { slope: 0.0, ..sloped };
    let sim_flat = SimContext { vehicle, terrain: flat, dt_control: 0.2, dt_sim: 2.5e-4 };

    // At rest on flat ground with zero action nothing moves.
    let mut s = VehicleState::default();
    for _ in 0..5 {
        s = sim_flat.step(&s, &Action::zero()).unwrap();
    }
    let drift = s.to_array().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let static_ok = drift < 1e-12;

    // Contact normals carry exactly the slope-projected weight.
    let (rear, front) = normal_forces(&vehicle, &sloped);
    let weight = vehicle.mass * sloped.gravity * sloped.slope.cos();
    let normals_ok = ((rear + front) - weight).abs() <= 1e-12 * weight;

    // Frictionless slide from rest: v = g sin(slope) t after one period.
    let ice = TerrainParams { mu_s: 0.0, mu_w: 0.0, ..sloped };
    let sim_ice = SimContext { vehicle, terrain: ice, dt_control: 0.2, dt_sim: 2.5e-4 };
    let slid = sim_ice.step(&VehicleState::default(), &Action::zero()).unwrap();
    let v_expect = sloped.gravity * sloped.slope.sin() * 0.2;
    let slide_ok = (slid.vx - v_expect).abs() < 1e-6 && slid.vy.abs() < 1e-9;

    // Kinetic energy never grows while coasting unpowered on flat ground.
    let ke = |s: &VehicleState| {
        0.5 * vehicle.mass * (s.vx * s.vx + s.vy * s.vy)
            + 0.5 * vehicle.yaw_inertia * s.psi_dot * s.psi_dot
    };
    let mut s = VehicleState { vx: 0.4, vy: 0.15, psi_dot: 3.0, ..VehicleState::default() };
    let mut prev = ke(&s);
    let mut passive_ok = true;
    for _ in 0..10 {
        s = sim_flat.step(&s, &Action::zero()).unwrap();
        let now = ke(&s);
        passive_ok &= now <= prev + 1e-12;
        prev = now;
    }

    // Fourth-order integrator: halving the substep cuts the one-period
    // error by at least 8x (asymptotically 16x).
    let cruise =
        VehicleState { vx: 0.2, vy: -0.01, psi: 0.3, psi_dot: 0.1, ..VehicleState::default() };
    let act = Action::new(0.1, 10.0, &vehicle);
    let with_dt =
        |dt: f64| SimContext { vehicle, terrain: sloped, dt_control: 0.2, dt_sim: dt };
    let reference = with_dt(2.5e-4 / 16.0).step(&cruise, &act).unwrap().to_array();
    let err = |dt: f64| {
        let end = with_dt(dt).step(&cruise, &act).unwrap().to_array();
        end.iter().zip(&reference).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    };
    let ratio = err(2.5e-4) / err(1.25e-4);
    let order_ok = ratio >= 8.0;

    verdict(
        "5 (physics invariants: statics, normals, slide, passivity, order)",
        static_ok && normals_ok && slide_ok && passive_ok && order_ok,
        &format!(
            "drift {drift:.1e}, normals gap {:.1e}, slide gap {:.1e}, \
             energy monotone {passive_ok}, halving ratio {ratio:.1}",
            (rear + front) - weight,
            slid.vx - v_expect
        ),
    );
}

#[test]
fn criterion_6_operator_statistics() {
    let trials = 100_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    let a = [0.0; 6];
    let b = [1.0; 6];
    let mut from_b = 0usize;
    for _ in 0..trials {
        from_b += crossover(&a, &b, 0.67, &mut rng).iter().filter(|&&g| g == 1.0).count();
    }
    let freq = from_b as f64 / (trials * 6) as f64;
    let crossover_ok = (freq - 0.67).abs() <= 0.01;

    let mut counts = [0usize; 8];
    for _ in 0..trials {
        counts[select_index(8, &mut rng)] += 1;
    }
    let selection_ok = counts.windows(2).all(|w| w[1] < w[0]);

    let sigma = 0.1;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..trials {
        let mut g = [0.0];
        mutate(&mut g, &[sigma], &[(-1e9, 1e9)], &mut rng);
        sum += g[0];
        sum_sq += g[0] * g[0];
    }
    let mean = sum / trials as f64;
    let std = (sum_sq / trials as f64 - mean * mean).sqrt();
    let mutation_ok = (std - sigma).abs() / sigma <= 0.02;

    verdict(
        "6 (operator statistics at 1e5 trials)",
        crossover_ok && selection_ok && mutation_ok,
        &format!(
            "crossover b-frequency {freq:.4}, selection counts {counts:?}, \
             mutation std {std:.4} vs {sigma}"
        ),
    );
}

#[test]
fn criterion_7_best_fitness_never_regresses_on_frozen_data() {
    let cfg = stock_config(ControllerKind::Ga, 0);
    let sim = cfg.sim;
    let ga = &cfg.ga;
    let generations = 200;

    // Frozen snapshot: a short noiseless baseline drive. The last recorded
    // transition is the dynamics target; the state after it anchors the
    // control rollouts.
    let mut state = initial_state(&cfg.track, cfg.initial_offset);
    let mut history = HistoryBuffer::new(4);
    for k in 0..3 {
        let action = baseline_action(&state, &cfg.track, &cfg.baseline, &sim.vehicle);
        history.push(HistoryEntry {
            t: k as f64 * sim.dt_control,
            state,
            action,
            reference: VehicleState::default(),
            features: [0.0; 3],
        });
        state = sim.step(&state, &action).unwrap();
    }
    let target = state;

    fn uniform<const N: usize>(bounds: &[(f64, f64); N], rng: &mut ChaCha8Rng) -> [f64; N] {
        std::array::from_fn(|i| {
            let (lo, hi) = bounds[i];
            lo + (hi - lo) * rng.random::<f64>()
        })
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // Dynamics side: the landscape is fixed, so with elitism the best Q can
    // never rise, exactly.
    let dyn_params = EvolveParams {
        elite_count: ga.elite_count,
        crossover_rate: ga.crossover_rate,
        mutation_sigma: ga.dyn_mutation_sigma(),
        bounds: ga.dyn_bounds(),
    };
    let mut dyn_pop: Vec<[f64; 2]> =
        (0..ga.dyn_population).map(|_| uniform(&ga.dyn_bounds(), &mut rng)).collect();
    let mut q_ok = true;
    let mut prev_q = f64::INFINITY;
    let mut final_q = f64::INFINITY;
    for _ in 0..generations {
        let q: Vec<f64> = dyn_pop
            .iter()
            .map(|genes| {
                predict_state(&DynChromosome { genes: *genes }, &history, ga.prediction_lookback, &sim)
                    .map(|p| prediction_fitness(&target, &p, &ga.w_s))
                    .unwrap_or(f64::INFINITY)
            })
            .collect();
        let best = q.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        q_ok &= best <= prev_q;
        prev_q = best;
        final_q = best;
        let inj = uniform(&ga.dyn_bounds(), &mut rng);
        dyn_pop = evolve_generation(&dyn_pop, &q, &[inj], &dyn_params, &mut rng);
    }

    // Control side: friction estimate and start state held fixed, so this
    // landscape is frozen too.
    let theta_d = DynChromosome { genes: [sim.terrain.mu_s, sim.terrain.mu_w] };
    let refs = cfg.track.reference_states([target.x, target.y], ga.tracking_horizon, sim.dt_control);
    let ctrl_params = EvolveParams {
        elite_count: ga.elite_count,
        crossover_rate: ga.crossover_rate,
        mutation_sigma: ga.ctrl_mutation_sigma(),
        bounds: ga.ctrl_bounds(),
    };
    let mut ctrl_pop: Vec<[f64; 6]> =
        (0..ga.ctrl_population).map(|_| uniform(&ga.ctrl_bounds(), &mut rng)).collect();
    let mut c_ok = true;
    let mut prev_c = f64::INFINITY;
    let mut final_c = f64::INFINITY;
    for _ in 0..generations {
        let c: Vec<f64> = ctrl_pop
            .iter()
            .map(|genes| {
                let theta = CtrlChromosome { genes: *genes };
                rollout_tracking(
                    &theta,
                    &theta_d,
                    &target,
                    &cfg.track,
                    ga.tracking_horizon,
                    ga.feature_lookahead,
                    &sim,
                )
                .map(|trace| control_fitness(&refs, &trace, &theta, &ga.w_r, &ga.w_k))
                .unwrap_or(f64::INFINITY)
            })
            .collect();
        let best = c.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        c_ok &= best <= prev_c;
        prev_c = best;
        final_c = best;
        let inj = uniform(&ga.ctrl_bounds(), &mut rng);
        ctrl_pop = evolve_generation(&ctrl_pop, &c, &[inj], &ctrl_params, &mut rng);
    }

    verdict(
        "7 (best Q and C non-increasing over 200 frozen generations, exact)",
        q_ok && c_ok,
        &format!("final Q {final_q:.3e}, final C {final_c:.3e}"),
    );
}

#[test]
fn criterion_8_same_seed_reproduces_output_files() {
    let bin = env!("CARGO_BIN_EXE_slopetrack");
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = std::process::Command::new(bin)
            .args(["run", "--laps", "2", "--seed", "3", "--out"])
            .arg(out)
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "run subcommand failed");
    }

    // generations.csv carries no timing and must match byte for byte.
    let gens_ok = std::fs::read(out_a.join("generations.csv")).unwrap()
        == std::fs::read(out_b.join("generations.csv")).unwrap();

    // steps.csv matches byte for byte once the wall-clock column is
    // dropped; summary.json once the timing statistics are dropped. Wall
    // time is the one quantity a rerun cannot reproduce.
    let strip_steps = |path: &std::path::Path| -> String {
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let drop = header.iter().position(|&h| h == "comp_ms").unwrap();
        text.lines()
            .map(|line| {
                line.split(',')
                    .enumerate()
                    .filter(|(i, _)| *i != drop)
                    .map(|(_, f)| f)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let steps_ok = strip_steps(&out_a.join("steps.csv")) == strip_steps(&out_b.join("steps.csv"));

    let strip_summary = |path: &std::path::Path| -> String {
        let text = std::fs::read_to_string(path).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let map = v.as_object_mut().unwrap();
        map.remove("comp_ms_mean");
        map.remove("comp_ms_std");
        v.to_string()
    };
    let summary_ok =
        strip_summary(&out_a.join("summary.json")) == strip_summary(&out_b.join("summary.json"));

    verdict(
        "8 (same config and seed reproduce all outputs, timing excluded)",
        gens_ok && steps_ok && summary_ok,
        &format!("generations {gens_ok}, steps {steps_ok}, summary {summary_ok}"),
    );
}

#[test]
fn criterion_9_learner_step_fits_the_compute_budget() {
    let runs = seed_runs();
    let worst = runs.ga.iter().map(|o| o.summary.comp_ms_mean).fold(0.0f64, f64::max);
    verdict(
        "9 (mean learner computation per control step <= 200 ms)",
        worst <= 200.0,
        &format!("worst seed mean {worst:.2} ms"),
    );
}
