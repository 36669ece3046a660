//! Command-line front end: single experiments and paired comparisons.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slopetrack::harness::{
    self, compare, format_comparison, run, ControllerKind, FileConfig, RunOutput,
};

#[derive(Parser)]
#[command(
    name = "slopetrack",
    version,
    about = "Slope-track experiments: a pure-pursuit baseline vs an online co-evolving learner"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and write steps.csv, generations.csv, summary.json.
    Run(RunArgs),
    /// Run baseline and learner over a seed list and write a comparison.
    Compare(CompareArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML). Stock experiment when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured lap count.
    #[arg(long)]
    laps: Option<u32>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Waypoint file overriding the configured track shape.
    #[arg(long)]
    track: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the configured controller (baseline | ga).
    #[arg(long)]
    controller: Option<ControllerKind>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Seeds to pair the two controllers over.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
}

fn load_config(common: &CommonArgs) -> slopetrack::Result<FileConfig> {
    let mut file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(laps) = common.laps {
        file.experiment.laps = laps;
    }
    if let Some(track) = &common.track {
        file.track.file = Some(track.clone());
    }
    Ok(file)
}

fn write_run_artifacts(out: &std::path::Path, output: &RunOutput) -> slopetrack::Result<()> {
    std::fs::create_dir_all(out)?;
    harness::write_steps_csv(&out.join("steps.csv"), &output.steps)?;
    harness::write_generations_csv(&out.join("generations.csv"), &output.generations)?;
    harness::write_summary_json(&out.join("summary.json"), &output.summary)?;
    Ok(())
}

fn cmd_run(args: &RunArgs) -> slopetrack::Result<()> {
    let mut file = load_config(&args.common)?;
    if let Some(controller) = args.controller {
        file.experiment.controller = controller;
    }
    if let Some(seed) = args.seed {
        file.experiment.seed = seed;
    }
    let cfg = file.build()?;
    let output = run(&cfg)?;
    write_run_artifacts(&args.common.out, &output)?;

    let s = &output.summary;
    println!("controller       {}", s.controller);
    println!("seed             {}", s.seed);
    println!("laps completed   {}", s.laps_completed);
    println!("total time       {:.1} s ({} steps)", s.total_time_s, output.steps.len());
    match s.convergence_time_s {
        Some(tc) => println!("converged at     {tc:.1} s"),
        None => println!("converged at     never"),
    }
    println!("J_r              {:.4}", s.j_r);
    println!("J_V              {:.4}", s.j_v);
    println!("J_tot            {:.4}", s.j_tot);
    println!("controller time  {:.3} ms mean, {:.3} ms std", s.comp_ms_mean, s.comp_ms_std);
    if let (Some(mu_s), Some(mu_w)) = (s.final_mu_s, s.final_mu_w) {
        println!("final mu         [{mu_s:.4}, {mu_w:.4}]");
    }
    println!("logs             {}", args.common.out.display());
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> slopetrack::Result<()> {
    let file = load_config(&args.common)?;

    let mut base_file = file.clone();
    base_file.experiment.controller = ControllerKind::Baseline;
    let cfg_a = base_file.build()?;

    let mut ga_file = file;
    ga_file.experiment.controller = ControllerKind::Ga;
    let cfg_b = ga_file.build()?;

    let report = compare(&cfg_a, &cfg_b, &args.seeds)?;
    let text = format_comparison(&report);
    print!("{text}");

    std::fs::create_dir_all(&args.common.out)?;
    harness::write_comparison_json(&args.common.out.join("comparison.json"), &report)?;
    std::fs::write(args.common.out.join("comparison.txt"), &text)?;
    println!("report           {}", args.common.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
