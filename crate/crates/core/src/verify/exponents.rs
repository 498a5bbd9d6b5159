use serde::{Deserialize, Serialize};

use super::eval::PairEval;
use super::relations::{rate_of, Params, Rel};
use super::search::refine_max;
use super::{CheckReport, GridSpec, PairTag, Tally, SLACK_TOL};
use crate::divergences::{ExtendedReal, RenyiKind};
use crate::matcore::{State, DIM_CAP};
use crate::{Error, Result};

/// Finite-n exponents of `eps_n(R)` next to their limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSequence {
    pub pair: usize,
    pub rate: f64,
    pub n: Vec<u32>,
    pub eps_n: Vec<f64>,
    /// `-(1/n) log2 eps_n`.
    pub error_exponent: Vec<ExtendedReal>,
    /// `-(1/n) log2 (1 - eps_n)`.
    pub sc_exponent: Vec<ExtendedReal>,
    /// `sup_{alpha > 1} (alpha - 1)(R - Dsand_alpha)` and its maximiser.
    pub error_target: f64,
    pub error_alpha: Option<f64>,
    /// `sup_{alpha in (0,1)} (alpha - 1)(R - D_alpha)` and its maximiser.
    pub sc_target: f64,
    pub sc_alpha: Option<f64>,
}

/// Default rates `((D + Dsand_2) / 2, (D_{1/2} + D) / 2)`, one on each side of `D`.
pub fn exponent_rates(rho: &State, sigma: &State) -> Result<(f64, f64)> {
    let ev = PairEval::new(rho, sigma)?;
    rates(&ev)
}

fn rates(ev: &PairEval<'_>) -> Result<(f64, f64)> {
    let d = ev.umegaki()?;
    let d2 = ev.renyi(2.0, RenyiKind::Sandwiched)?;
    let dh = ev.renyi(0.5, RenyiKind::Petz)?;
    Ok((0.5 * (d + d2), 0.5 * (dh + d)))
}

/// Supremum of `(a - 1)(R - D_a)` over the grid, refined; `None` when the
/// supremum is the limit `0` at `a -> 1`.
fn target(ev: &PairEval<'_>, rate: f64, alphas: &[f64], kind: RenyiKind, refine: bool) -> Result<(f64, Option<f64>)> {
    let mut pts = alphas.to_vec();
    pts.sort_by(|a, b| a.total_cmp(b));
    let (lo, hi) = match kind {
        RenyiKind::Sandwiched => (1.0, pts.last().copied().unwrap_or(2.0) * 1.5),
        RenyiKind::Petz => (0.0, 1.0),
    };
    let o = refine_max(&pts, lo, hi, refine, |a| Ok((a - 1.0) * (rate - ev.renyi(a, kind)?)))?;
    if o.value > 0.0 {
        Ok((o.value, Some(o.x)))
    } else {
        Ok((0.0, None))
    }
}

pub(crate) fn exponents(ev: &PairEval<'_>, rate: Option<f64>, n_max: u32, g: &GridSpec, t: &mut Tally) -> Result<()> {
    let dim = ev.dim();
    let total = (dim as f64).powi(n_max as i32);
    if total > DIM_CAP as f64 {
        return Err(Error::DimensionCap(total.min(usize::MAX as f64) as usize));
    }
    let d = ev.umegaki()?;
    if !d.is_finite() {
        t.pair_note("exponents skipped, D(rho||sigma) is infinite");
        return Ok(());
    }
    let rates = match rate {
        Some(r) => vec![r],
        None => {
            let (r_err, r_sc) = rates(ev)?;
            let mut v = Vec::new();
            if r_err.is_finite() && r_err > d + 1e-9 {
                v.push(r_err);
            }
            if r_sc.is_finite() && r_sc < d - 1e-9 {
                v.push(r_sc);
            }
            if v.is_empty() {
                t.pair_note("exponents skipped, the Renyi divergences are degenerate at D");
            }
            v
        }
    };
    t.note(
        "exponent trend checks (non-decreasing from n = 2, final gap at most 0.15 bits) are calibrated thresholds, not limit values"
            .into(),
    );
    for r in rates {
        let ns: Vec<u32> = (1..=n_max).collect();
        let eps: Vec<f64> = ns.iter().map(|&n| ev.eps_n(n, r)).collect::<Result<_>>()?;
        let (et, ea) = target(ev, r, &g.alphas_upper, RenyiKind::Sandwiched, g.refine)?;
        let (st, sa) = target(ev, r, &g.alphas_lower, RenyiKind::Petz, g.refine)?;
        t.sequence(ExponentSequence {
            pair: 0,
            rate: r,
            n: ns.clone(),
            eps_n: eps.clone(),
            error_exponent: ns.iter().zip(&eps).map(|(&n, &e)| ExtendedReal::new(rate_of(e, n))).collect(),
            sc_exponent: ns.iter().zip(&eps).map(|(&n, &e)| ExtendedReal::new(rate_of(1.0 - e, n))).collect(),
            error_target: et,
            error_alpha: ea,
            sc_target: st,
            sc_alpha: sa,
        });

        let base = Params::default().with_rate(r);
        if r > d {
            for n in 2..n_max {
                t.check(Rel::ExpErrorMonotone, ev, base.with_n(n))?;
            }
            if let Some(a) = ea {
                t.check(Rel::ExpErrorGap, ev, base.with_n(n_max).with_alpha(a))?;
            }
        } else if r < d {
            for n in 2..n_max {
                t.check(Rel::ExpScMonotone, ev, base.with_n(n))?;
            }
            let p = base.with_n(n_max);
            t.check(Rel::ExpScGap, ev, if let Some(a) = sa { p.with_alpha(a) } else { p })?;
        }
        for &n in &ns {
            if ev.sigma_full_rank() {
                for &a in &g.alphas_upper {
                    t.check(Rel::ExpErrorBracket, ev, base.with_n(n).with_alpha(a))?;
                }
            }
            for &a in &g.alphas_lower {
                t.check(Rel::ExpScBracket, ev, base.with_n(n).with_alpha(a))?;
            }
        }
    }
    if !ev.sigma_full_rank() {
        t.pair_note("error-exponent bracket skipped, sigma is rank deficient");
    }
    Ok(())
}

/// Exponent sequences of `eps_n(R)` for `n = 1..=n_max` with trend, gap and
/// one-shot bracket checks.
pub fn estimate_exponents(rho: &State, sigma: &State, rate: f64, n_max: u32, grid: &GridSpec) -> Result<CheckReport> {
    let ev = PairEval::new(rho, sigma)?;
    let mut t = Tally::new(PairTag::supplied(rho.dim()), SLACK_TOL, 1e-4);
    exponents(&ev, Some(rate), n_max, grid, &mut t)?;
    Ok(t.into_report("exponents"))
}
