mod compute;
mod sweep;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use smoothdiv::matcore::{Ensemble, State};

/// Smooth max-divergences and checks of their one-shot relations.
#[derive(Parser)]
#[command(name = "smoothdiv", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate one divergence on a pair of state files and print JSON.
    Compute(compute::ComputeArgs),
    /// Run a verification suite and write its report.
    Verify(verify::VerifyArgs),
    /// Evaluate a divergence over a sampled ensemble and write CSV.
    Sweep(sweep::SweepArgs),
    /// Sample a state pair and write it as two state files.
    Sample(SampleArgs),
}

/// `--rho`/`--sigma` state files.
#[derive(Args, Clone, Debug)]
pub struct PairFiles {
    #[arg(long)]
    pub rho: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<PathBuf>,
}

impl PairFiles {
    pub fn load(&self) -> anyhow::Result<Option<(State, State)>> {
        match (&self.rho, &self.sigma) {
            (Some(r), Some(s)) => Ok(Some((load_state(r)?, load_state(s)?))),
            (None, None) => Ok(None),
            _ => Err(smoothdiv::Error::Parse("--rho and --sigma must be given together".into()).into()),
        }
    }
}

pub fn load_state(path: &PathBuf) -> anyhow::Result<State> {
    smoothdiv::io::read_state(path).with_context(|| format!("reading {}", path.display()))
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value = "hs_mixed")]
    ensemble: Ensemble,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file for rho.
    #[arg(long)]
    rho: PathBuf,
    /// Output file for sigma.
    #[arg(long)]
    sigma: PathBuf,
}

fn sample(a: SampleArgs) -> anyhow::Result<i32> {
    let (rho, sigma) = smoothdiv::matcore::sample_pair(a.ensemble, a.dim, a.seed)?;
    smoothdiv::io::write_state(&a.rho, &rho, None)?;
    smoothdiv::io::write_state(&a.sigma, &sigma, None)?;
    Ok(0)
}

/// Exit code for an error: the library's code when one is in the chain, else 2.
fn exit_code(e: &anyhow::Error) -> i32 {
    e.chain()
        .find_map(|c| c.downcast_ref::<smoothdiv::Error>())
        .map_or(2, smoothdiv::Error::exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Compute(a) => compute::run(a),
        Cmd::Verify(a) => verify::run(a),
        Cmd::Sweep(a) => sweep::run(a),
        Cmd::Sample(a) => sample(a),
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
