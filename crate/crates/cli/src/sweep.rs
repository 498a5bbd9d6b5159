use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use smoothdiv::matcore::{sample_pair, sub_seed, Ensemble};
use smoothdiv::verify::{thread_pool, GridSpec};
use smoothdiv::Error;

use crate::compute::{evaluate, Divergence, DivergenceParams};

#[derive(Args)]
pub struct SweepArgs {
    pub divergence: Divergence,
    #[arg(long, default_value = "hs_mixed")]
    pub ensemble: Ensemble,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub dims: Vec<usize>,
    /// Pairs per dimension.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated smoothing levels (default: the verification grid).
    #[arg(long = "eps-grid", value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    #[command(flatten)]
    pub params: DivergenceParams,
    /// CSV path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Row {
    seed: u64,
    dim: usize,
    eps: Option<f64>,
    value: f64,
    method: &'static str,
    residual: f64,
}

fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn run(a: SweepArgs) -> anyhow::Result<i32> {
    let eps_grid: Vec<Option<f64>> = match (&a.eps_grid, a.params.eps) {
        (Some(g), _) => g.iter().copied().map(Some).collect(),
        (None, Some(e)) => vec![Some(e)],
        (None, None) => GridSpec::default().eps.into_iter().map(Some).collect(),
    };
    let mut jobs = Vec::new();
    for &dim in &a.dims {
        for _ in 0..a.samples {
            let i = jobs.len() as u64;
            jobs.push((sub_seed(a.seed, i), dim));
        }
    }
    let pool = thread_pool()?;
    let rows: Vec<smoothdiv::Result<Vec<Row>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, dim)| {
                let (rho, sigma) = sample_pair(a.ensemble, dim, seed)?;
                eps_grid
                    .iter()
                    .map(|&eps| {
                        let mut p = a.params.clone();
                        p.eps = eps;
                        let out = evaluate(a.divergence, &rho, &sigma, &p)?;
                        Ok(Row { seed, dim, eps, value: out.value.value(), method: out.method, residual: out.residual })
                    })
                    .collect()
            })
            .collect()
    });

    let sink: Box<dyn std::io::Write> = match &a.out {
        Some(p) => Box::new(std::fs::File::create(p).map_err(Error::from)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["seed", "dim", "eps", "value", "method", "residual"])?;
    for group in rows {
        for r in group? {
            w.write_record([
                r.seed.to_string(),
                r.dim.to_string(),
                r.eps.map(fmt).unwrap_or_default(),
                fmt(r.value),
                r.method.to_string(),
                fmt(r.residual),
            ])?;
        }
    }
    w.flush().map_err(Error::from)?;
    Ok(0)
}
