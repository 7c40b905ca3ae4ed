use std::path::PathBuf;
use std::process::ExitCode;

use bandpulse::harness::{
    cmd_curves, cmd_estimate, cmd_fisher, cmd_montecarlo, cmd_simulate, cmd_synth, ExperimentConfig, HarnessError,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bandpulse", version, about = "Band-limited ranging pulse design, bounds and estimation")]
struct Cli {
    /// Flat `key = value` experiment file; defaults apply to absent keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `mc.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Synthesize the configured pulse.
    Synth,
    /// Resolving power against Legendre dimension and sinc-cosine length.
    Curves,
    /// Fisher information and Cramer-Rao bounds for the configured scene.
    Fisher,
    /// Generate clean and noisy echoes.
    Simulate,
    /// Estimate the separation from `estimate.signal`.
    Estimate,
    /// Monte Carlo estimator statistics over the configured sweep.
    Montecarlo,
}

fn run(cli: &Cli) -> Result<String, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    let out = cli.out.as_path();
    Ok(match cli.command {
        Command::Synth => {
            let m = cmd_synth(&cfg, out)?;
            match m.resolving_power {
                Some(r) => format!("{} pulse: {} samples, R = {r:.6}", m.pulse, m.grid.len),
                None => format!("{} pulse: {} samples, Var[p^2] = {:.6e}", m.pulse, m.grid.len, m.var_p2),
            }
        }
        Command::Curves => {
            let c = cmd_curves(&cfg, out)?;
            format!("{} points in R(N), {} points in R(d)", c.r_vs_n.len(), c.r_vs_d.len())
        }
        Command::Fisher => {
            let f = cmd_fisher(&cfg, out)?;
            format!(
                "I_exact = {:.6e}, I_small_l = {:.6e}, relative difference {:.3e}, CRB(l) = {:.6e}",
                f.fisher_exact, f.fisher_small_l, f.relative_difference, f.crb.l
            )
        }
        Command::Simulate => {
            let s = cmd_simulate(&cfg, out)?;
            format!("echo of {} samples written, seed {}", s.grid.len, s.seed)
        }
        Command::Estimate => {
            let e = cmd_estimate(&cfg, out)?;
            format!("l_hat = {:.6e} ({} estimator)", e.result.l_hat, e.estimator)
        }
        Command::Montecarlo => {
            let cells = cmd_montecarlo(&cfg, out)?;
            let failed = cells.iter().filter(|c| c.error.is_some()).count();
            format!("{} sweep cells, {failed} failed", cells.len())
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
