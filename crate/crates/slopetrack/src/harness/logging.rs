//! Run artifacts: per-step CSV, per-generation CSV, summary JSON, and the
//! side-by-side comparison report.
//!
//! Floats are written with Rust's shortest round-trip formatting, so logs
//! are bit-faithful to the in-memory values and identical runs produce
//! identical bytes. Wall-clock columns are the one intentional exception
//! to reproducibility and are kept in dedicated fields so consumers can
//! drop them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::VehicleState;
use crate::error::Result;
use crate::ga::ControllerMode;

/// One control step as logged to `steps.csv`.
#[derive(Debug, Clone, Copy)]
pub struct StepRow {
    pub t: f64,
    pub truth: VehicleState,
    pub estimate: VehicleState,
    pub phi: f64,
    pub omega_w: f64,
    /// Signed distance to the track, positive left of travel.
    pub cross_track: f64,
    /// Desired minus actual forward speed.
    pub v_err: f64,
    pub mode: ControllerMode,
    /// Controller wall-clock for this step, milliseconds.
    pub comp_ms: f64,
    /// Learner telemetry; NaN before the first evaluation and for
    /// baseline-only runs.
    pub best_q: f64,
    pub mu_s_hat: f64,
    pub mu_w_hat: f64,
    pub best_c: f64,
}

pub const STEPS_HEADER: &str = "t,x,y,vx,vy,psi,psi_dot,x_est,y_est,vx_est,vy_est,psi_est,\
                                psi_dot_est,phi,omega_w,cross_track,v_err,mode,comp_ms,best_Q,\
                                mu_s_hat,mu_w_hat,best_C";

/// One learner generation as logged to `generations.csv`.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRow {
    /// Control step index the generation ran in.
    pub step: usize,
    pub t: f64,
    pub best_q: f64,
    pub mu_s_hat: f64,
    pub mu_w_hat: f64,
    pub best_c: f64,
    /// Best control gains, row-major 2x3.
    pub gains: [f64; 6],
}

pub const GENERATIONS_HEADER: &str = "step,t,best_Q,mu_s_hat,mu_w_hat,best_C,k1,k2,k3,k4,k5,k6";

/// Headline numbers of a finished run, exported as `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub controller: String,
    pub seed: u64,
    pub laps_completed: u32,
    /// Time of the last logged step, seconds.
    pub total_time_s: f64,
    /// Earliest time from which the cross-track RMS stays inside the
    /// convergence band; `null` when the run never settles.
    pub convergence_time_s: Option<f64>,
    /// Integrated |cross-track| from convergence to the end.
    pub j_r: f64,
    /// Integrated |forward speed error| over the same window.
    pub j_v: f64,
    pub j_tot: f64,
    pub comp_ms_mean: f64,
    pub comp_ms_std: f64,
    /// Final best friction estimate; `null` for baseline-only runs.
    pub final_mu_s: Option<f64>,
    pub final_mu_w: Option<f64>,
}

fn mode_str(mode: ControllerMode) -> &'static str {
    match mode {
        ControllerMode::Baseline => "baseline",
        ControllerMode::Learned => "learned",
    }
}

pub fn write_steps_csv(path: &Path, rows: &[StepRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{STEPS_HEADER}")?;
    for r in rows {
        let s = r.truth.to_array();
        let e = r.estimate.to_array();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            s[0],
            s[1],
            s[2],
            s[3],
            s[4],
            s[5],
            e[0],
            e[1],
            e[2],
            e[3],
            e[4],
            e[5],
            r.phi,
            r.omega_w,
            r.cross_track,
            r.v_err,
            mode_str(r.mode),
            r.comp_ms,
            r.best_q,
            r.mu_s_hat,
            r.mu_w_hat,
            r.best_c
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_generations_csv(path: &Path, rows: &[GenerationRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{GENERATIONS_HEADER}")?;
    for r in rows {
        let k = &r.gains;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.t,
            r.best_q,
            r.mu_s_hat,
            r.mu_w_hat,
            r.best_c,
            k[0],
            k[1],
            k[2],
            k[3],
            k[4],
            k[5]
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Paired baseline/learner outcomes for one seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub seed: u64,
    pub a: RunSummary,
    pub b: RunSummary,
    /// `a.j_tot / b.j_tot`; with `a` the baseline this is the improvement
    /// factor of the learner.
    pub j_tot_ratio: f64,
}

/// Mean and standard deviation of a column across seeds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub controller_a: String,
    pub controller_b: String,
    pub laps: u32,
    pub rows: Vec<ComparisonRow>,
    pub j_tot_a: Aggregate,
    pub j_tot_b: Aggregate,
    pub j_tot_ratio: Aggregate,
    pub comp_ms_a: Aggregate,
    pub comp_ms_b: Aggregate,
}

pub fn write_comparison_json(path: &Path, report: &ComparisonReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Population mean and standard deviation; (0, 0) for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fixed-width text rendering of a comparison report.
pub fn format_comparison(report: &ComparisonReport) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let (a, b) = (&report.controller_a, &report.controller_b);
    let _ = writeln!(out, "comparison over {} laps: {a} (A) vs {b} (B)", report.laps);
    let _ = writeln!(
        out,
        "{:>6} {:>12} {:>12} {:>10} {:>12} {:>12} {:>10} {:>10}",
        "seed", "J_tot(A)", "J_tot(B)", "A/B", "T_c(A)", "T_c(B)", "ms(A)", "ms(B)"
    );
    let fmt_tc = |tc: Option<f64>| match tc {
        Some(v) => format!("{v:.1}"),
        None => "-".to_string(),
    };
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{:>6} {:>12.4} {:>12.4} {:>10.2} {:>12} {:>12} {:>10.3} {:>10.3}",
            row.seed,
            row.a.j_tot,
            row.b.j_tot,
            row.j_tot_ratio,
            fmt_tc(row.a.convergence_time_s),
            fmt_tc(row.b.convergence_time_s),
            row.a.comp_ms_mean,
            row.b.comp_ms_mean,
        );
    }
    let _ = writeln!(
        out,
        "{:>6} {:>12.4} {:>12.4} {:>10.2} {:>12} {:>12} {:>10.3} {:>10.3}",
        "mean",
        report.j_tot_a.mean,
        report.j_tot_b.mean,
        report.j_tot_ratio.mean,
        "",
        "",
        report.comp_ms_a.mean,
        report.comp_ms_b.mean,
    );
    let _ = writeln!(
        out,
        "{:>6} {:>12.4} {:>12.4} {:>10.2}",
        "std", report.j_tot_a.std, report.j_tot_b.std, report.j_tot_ratio.std,
    );
    out
}
