use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use smoothdiv::divergences::{self as dv, ExtendedReal, Metric, Normalisation, RenyiKind, SmoothingSpec};
use smoothdiv::matcore::State;
use smoothdiv::sdpsolve::{self, Variant};
use smoothdiv::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Divergence {
    Umegaki,
    Dmax,
    Dtilde,
    DtildeDual,
    Dh,
    DhSdp,
    Dspec,
    Renyi,
    Dobs,
    Hilbert,
    HockeyStick,
    Smooth,
    SmoothHilbert,
    Variant,
}

impl Divergence {
    pub fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

/// Options shared by `compute` and `sweep`.
#[derive(Args, Clone, Debug)]
pub struct DivergenceParams {
    /// Smoothing level.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Renyi order.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Renyi family: petz or sandwiched.
    #[arg(long, default_value = "sandwiched")]
    pub renyi: String,
    /// Ball metric for `smooth` and `smooth_hilbert`: trace or purified.
    #[arg(long, default_value = "purified")]
    pub metric: Metric,
    /// Ball normalisation for `smooth`: normalised or subnormalised.
    #[arg(long, default_value = "normalised")]
    pub norm: Normalisation,
    /// Operator class for `variant`: pos, herm_sub or herm_eq.
    #[arg(long, default_value = "pos")]
    pub variant: Variant,
    /// Threshold of the hockey-stick divergence.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Args)]
pub struct ComputeArgs {
    pub divergence: Divergence,
    #[command(flatten)]
    pub files: crate::PairFiles,
    #[command(flatten)]
    pub params: DivergenceParams,
}

/// A computed value with how it was obtained.
pub struct Outcome {
    pub value: ExtendedReal,
    pub method: &'static str,
    pub residual: f64,
}

fn need(x: Option<f64>, flag: &str) -> smoothdiv::Result<f64> {
    x.ok_or_else(|| Error::Parse(format!("--{flag} is required for this divergence")))
}

fn renyi_kind(s: &str) -> smoothdiv::Result<RenyiKind> {
    match s {
        "petz" => Ok(RenyiKind::Petz),
        "sandwiched" => Ok(RenyiKind::Sandwiched),
        _ => Err(Error::Parse(format!("field 'renyi': unknown family '{s}'"))),
    }
}

/// Parameters that `d` reads, for echoing.
pub fn used_params(d: Divergence, p: &DivergenceParams) -> Value {
    let mut m = Map::new();
    use Divergence::*;
    match d {
        Dtilde | DtildeDual | Dh | DhSdp | Dspec => {
            m.insert("eps".into(), json!(p.eps));
        }
        Renyi => {
            m.insert("alpha".into(), json!(p.alpha));
            m.insert("renyi".into(), json!(p.renyi));
        }
        HockeyStick => {
            m.insert("lambda".into(), json!(p.lambda));
        }
        Smooth => {
            m.insert("eps".into(), json!(p.eps));
            m.insert("metric".into(), json!(p.metric));
            m.insert("norm".into(), json!(p.norm));
        }
        SmoothHilbert => {
            m.insert("eps".into(), json!(p.eps));
            m.insert("metric".into(), json!(p.metric));
        }
        Variant => {
            m.insert("eps".into(), json!(p.eps));
            m.insert("variant".into(), json!(p.variant));
        }
        Umegaki | Dmax | Dobs | Hilbert => {}
    }
    Value::Object(m)
}

pub fn evaluate(d: Divergence, rho: &State, sigma: &State, p: &DivergenceParams) -> smoothdiv::Result<Outcome> {
    let exact = |value: ExtendedReal, method| Outcome { value, method, residual: 0.0 };
    let sdp = |v: sdpsolve::SdpValue| Outcome { value: v.value, method: v.method, residual: v.residual };
    use Divergence::*;
    Ok(match d {
        Umegaki => exact(dv::umegaki(rho, sigma)?, "spectral"),
        Dmax => exact(dv::dmax(rho, sigma)?, "spectral"),
        Dtilde => exact(dv::dtilde_max(rho, sigma, need(p.eps, "eps")?)?, "pencil"),
        DtildeDual => exact(dv::dtilde_max_dual(rho, sigma, need(p.eps, "eps")?)?, "dual"),
        Dh => exact(dv::dh(rho, sigma, need(p.eps, "eps")?)?, "lagrange_dual"),
        DhSdp => sdp(sdpsolve::dh_sdp_detailed(rho, sigma, need(p.eps, "eps")?)?),
        Dspec => exact(dv::dspec(rho, sigma, need(p.eps, "eps")?)?, "spectral_scan"),
        Renyi => exact(dv::renyi(rho, sigma, need(p.alpha, "alpha")?, renyi_kind(&p.renyi)?)?, "spectral"),
        Dobs => exact(dv::dobs(rho, sigma)?, "spectral"),
        Hilbert => exact(dv::hilbert_metric(rho, sigma)?, "spectral"),
        HockeyStick => {
            let v = dv::hockey_stick(rho, sigma, need(p.lambda, "lambda")?)?;
            exact(ExtendedReal::new(v), "spectral")
        }
        Smooth => {
            let spec = SmoothingSpec::new(p.metric, p.norm, need(p.eps, "eps")?)?;
            sdp(sdpsolve::smooth_dmax_detailed(rho, sigma, spec)?)
        }
        SmoothHilbert => {
            let spec = SmoothingSpec::new(p.metric, Normalisation::Normalised, need(p.eps, "eps")?)?;
            sdp(sdpsolve::smooth_hilbert_detailed(rho, sigma, spec)?)
        }
        Variant => sdp(sdpsolve::smooth_dmax_variants_detailed(rho, sigma, need(p.eps, "eps")?, p.variant)?),
    })
}

fn digest(path: &PathBuf) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).map_err(Error::from)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn run(a: ComputeArgs) -> anyhow::Result<i32> {
    let (rho, sigma) = a
        .files
        .load()?
        .ok_or_else(|| Error::Parse("compute needs --rho and --sigma".into()))?;
    let out = evaluate(a.divergence, &rho, &sigma, &a.params)?;
    let (r, s) = (a.files.rho.as_ref().unwrap(), a.files.sigma.as_ref().unwrap());
    let report = json!({
        "divergence": a.divergence.name(),
        "inputs": {"rho_sha256": digest(r)?, "sigma_sha256": digest(s)?},
        "parameters": used_params(a.divergence, &a.params),
        "value": out.value,
        "method": out.method,
        "residuals": {"solver": out.residual},
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}
