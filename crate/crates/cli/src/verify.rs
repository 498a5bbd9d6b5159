use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde_json::Value;
use smoothdiv::matcore::Ensemble;
use smoothdiv::verify::{run_suite, run_suite_on, CheckReport, RunConfig, Suite};
use smoothdiv::Error;

#[derive(Args)]
pub struct VerifyArgs {
    /// equivalence, oneshot, renyi, structural, frenkel, exponents or all.
    pub suite: Suite,
    #[command(flatten)]
    pub files: crate::PairFiles,
    /// Start from this configuration (a RunConfig or a report embedding one).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Pairs per dimension.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated ensembles cycled over the pairs.
    #[arg(long, value_delimiter = ',')]
    pub ensembles: Option<Vec<Ensemble>>,
    /// Comma-separated smoothing levels.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Points in each inner grid (mu, delta, c, eta).
    #[arg(long)]
    pub mu: Option<usize>,
    /// Comma-separated Renyi orders; values above 1 and below 1 form the two grids.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Slack tolerance for inequalities.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Relative tolerance of the integral check.
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// Exponent rate (default: one rate on each side of D).
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub n_max: Option<u32>,
    /// Embed witnesses in the report.
    #[arg(long)]
    pub witnesses: Option<bool>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_config(path: &PathBuf) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(Error::from).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let cfg = match v.get("config") {
        Some(c) if v.get("relations").is_some() => c.clone(),
        _ => v,
    };
    Ok(serde_json::from_value(cfg).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?)
}

fn config(a: &VerifyArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &a.dims {
        cfg.dims = d.clone();
    }
    if let Some(s) = a.samples {
        cfg.samples = s;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = &a.ensembles {
        cfg.ensembles = e.clone();
    }
    if let Some(e) = &a.eps {
        cfg.grid.eps = e.clone();
    }
    if let Some(m) = a.mu {
        cfg.grid.inner_points = m;
    }
    if let Some(al) = &a.alpha {
        cfg.grid.alphas_upper = al.iter().copied().filter(|&x| x > 1.0).collect();
        cfg.grid.alphas_lower = al.iter().copied().filter(|&x| x < 1.0).collect();
    }
    if let Some(t) = a.tol {
        cfg.tol = t;
    }
    if let Some(t) = a.quad_tol {
        cfg.quad_tol = t;
    }
    if a.rate.is_some() {
        cfg.rate = a.rate;
    }
    if let Some(n) = a.n_max {
        cfg.n_max = n;
    }
    if let Some(w) = a.witnesses {
        cfg.witnesses = w;
    }
    if let Some(o) = &a.out {
        cfg.out = Some(o.display().to_string());
    }
    if a.files.rho.is_some() || a.files.sigma.is_some() {
        cfg.rho = a.files.rho.as_ref().map(|p| p.display().to_string());
        cfg.sigma = a.files.sigma.as_ref().map(|p| p.display().to_string());
    }
    Ok(cfg)
}

fn summary(rep: &CheckReport) {
    for r in &rep.relations {
        eprintln!(
            "{:<34} {:<4} samples {:>7}  min slack {:>12}  tol {:.0e}{}",
            r.tag,
            if r.passed { "ok" } else { "FAIL" },
            r.samples,
            format_slack(r.min_slack.value()),
            r.tolerance,
            if r.flagged { "  (flagged)" } else { "" }
        );
    }
    for n in &rep.notes {
        eprintln!("note: {n}");
    }
    eprintln!("{} pairs, {}", rep.pairs, if rep.passed { "all relations hold" } else { "some relations FAIL" });
}

fn format_slack(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3e}")
    } else {
        format!("{x}")
    }
}

pub fn run(a: VerifyArgs) -> anyhow::Result<i32> {
    let cfg = config(&a)?;
    let files = crate::PairFiles { rho: cfg.rho.as_ref().map(PathBuf::from), sigma: cfg.sigma.as_ref().map(PathBuf::from) };
    let rep = match files.load()? {
        Some((rho, sigma)) => run_suite_on(a.suite, &rho, &sigma, &cfg)?,
        None => run_suite(a.suite, &cfg)?,
    };
    let text = serde_json::to_string_pretty(&rep)?;
    match &a.out {
        Some(p) => std::fs::write(p, text + "\n").map_err(Error::from).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    summary(&rep);
    Ok(if rep.passed { 0 } else { 1 })
}
