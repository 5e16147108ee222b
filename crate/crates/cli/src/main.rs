use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use paper_repro::experiments::{
    run_all, run_fig1, run_fig2, run_fig3, run_probmatch, run_wlb_beta, run_wlb_jeffreys,
    MomentSpec, RunCfg,
};
use paper_repro::report::{write_manifest, ExperimentReport};

/// Simulation studies for the mledist library: exact and approximate MLE
/// sampling distributions, weighted-bootstrap laws, and the
/// probability-matching sampler, emitted as CSV plus a JSON report each.
#[derive(Parser)]
#[command(name = "paper-repro", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Sample size override (each experiment has its own default).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Replicate count for the simulation-heavy experiments.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Sampler draw count for the bootstrap experiments.
    #[arg(long, global = true)]
    draws: Option<usize>,
    /// Base seed; every random quantity derives from it.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Output directory for CSVs and reports (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Moment estimator for refined curves: closed | quad | mc:<draws>.
    #[arg(long, global = true, value_parser = parse_moments)]
    moments: Option<MomentSpec>,
    /// Run independent experiments concurrently (only `all` has several).
    #[arg(long, global = true)]
    parallel: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exponential model: refined and normal approximations vs the exact law.
    Fig1,
    /// Fisk model: simulated MLE distribution vs the refined curve.
    Fig2,
    /// Skew-normal pivot study (n = 15, 25, 100 unless --n picks one).
    Fig3,
    /// Power model on beta(2,1) data: exact bootstrap CDF vs sampler draws.
    WlbBeta,
    /// Exponential model: bootstrap density vs the conjugate gamma posterior.
    WlbJeffreys,
    /// Gumbel-rate model: probability matching vs the weighted bootstrap.
    Probmatch,
    /// Every experiment on derived seeds, plus a combined manifest.
    All,
}

fn parse_moments(s: &str) -> Result<MomentSpec, String> {
    MomentSpec::parse(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = RunCfg {
        seed: cli.seed,
        out: cli.out,
        n: cli.n,
        reps: cli.reps,
        draws: cli.draws,
        moments: cli.moments,
        parallel: cli.parallel,
    };
    fs::create_dir_all(&cfg.out)?;
    let reports = match cli.cmd {
        Cmd::Fig1 => vec![run_fig1(&cfg)?],
        Cmd::Fig2 => vec![run_fig2(&cfg)?],
        Cmd::Fig3 => run_fig3(&cfg)?,
        Cmd::WlbBeta => vec![run_wlb_beta(&cfg)?],
        Cmd::WlbJeffreys => vec![run_wlb_jeffreys(&cfg)?],
        Cmd::Probmatch => vec![run_probmatch(&cfg)?],
        Cmd::All => {
            let reports = run_all(&cfg)?;
            let path = write_manifest(&cfg.out, cfg.seed, &reports)?;
            println!("wrote {}", path.display());
            reports
        }
    };
    let mut all_pass = true;
    for rep in &reports {
        rep.write_json(&cfg.out)?;
        print_report(rep);
        all_pass &= rep.passed();
    }
    Ok(all_pass)
}

fn print_report(rep: &ExperimentReport) {
    let verdict = if rep.passed() { "PASS" } else { "FAIL" };
    println!(
        "{}: {verdict} ({} checks, {} ms, seed {})",
        rep.experiment,
        rep.assertions.len(),
        rep.wall_ms,
        rep.seed
    );
    for a in &rep.assertions {
        if !a.pass {
            println!("  FAIL {}: {}", a.name, a.detail);
        }
    }
    for (key, value) in &rep.summary {
        println!("  {key} = {value}");
    }
}
