use num_complex::Complex64 as C64;

use super::eval::PairEval;
use super::relations::{Params, Rel};
use super::search::{bnb_min, half_open_grid, open_grid, refine_max, refine_min, Opt};
use super::{CheckReport, GridSpec, PairTag, Tally, GRID_TOL, REVIEW_TOL, SLACK_TOL};
use crate::divergences::{binary_fidelity, Metric, Normalisation};
use crate::matcore::{sample_pair, CVec, Ensemble, State};
use crate::Result;

use Metric::{Purified as P, Trace as T};
use Normalisation::{Normalised as N, Subnormalised as S};

/// An inner optimum used to reconstruct one divergence from another.
#[derive(Clone, Copy, Debug)]
pub struct Reconstruction {
    pub value: f64,
    /// Optimising `delta`.
    pub delta: f64,
    pub grid_value: f64,
}

impl From<Opt> for Reconstruction {
    fn from(o: Opt) -> Self {
        Reconstruction { value: o.value, delta: o.x, grid_value: o.grid_value }
    }
}

/// `inf_{delta in [0,eps)} [D(delta) - log(eps - delta)]` for `D = Dtilde`
/// or, with `trace_sub`, the subnormalised trace-smoothed divergence.
fn reconstruct_dh_with(ev: &PairEval<'_>, eps: f64, points: usize, refine: bool, trace_sub: bool) -> Result<Reconstruction> {
    let lo = ev.leak();
    if lo >= eps {
        return Ok(Reconstruction { value: f64::INFINITY, delta: lo.min(eps), grid_value: f64::INFINITY });
    }
    let grid: Vec<f64> = (0..points).map(|k| lo + (eps - lo) * k as f64 / points as f64).collect();
    let f = |d: f64| -> Result<f64> {
        let v = if trace_sub { ev.smooth(T, S, d)? } else { ev.dtilde(d)? };
        Ok(v - (eps - d).log2())
    };
    Ok(refine_min(&grid, lo, eps, refine, f)?.into())
}

/// Reconstructs `D_H^{1-eps}` from `Dtilde`.
pub fn reconstruct_dh(rho: &State, sigma: &State, eps: f64, grid: &GridSpec) -> Result<Reconstruction> {
    let ev = PairEval::new(rho, sigma)?;
    reconstruct_dh_with(&ev, eps, grid.inner_points, grid.refine, false)
}

/// `sup_{delta in (eps,1]} [D_H^{1-delta} + log(delta - eps)]`.
fn reconstruct_dtilde_with(ev: &PairEval<'_>, eps: f64, points: usize, refine: bool) -> Result<Reconstruction> {
    let grid = half_open_grid(eps, 1.0, points);
    let f = |d: f64| -> Result<f64> { Ok(ev.dh(1.0 - d)? + (d - eps).log2()) };
    Ok(refine_max(&grid, eps, 1.0, refine, f)?.into())
}

/// Reconstructs `Dtilde^eps` from `D_H`.
pub fn reconstruct_dtilde(rho: &State, sigma: &State, eps: f64, grid: &GridSpec) -> Result<Reconstruction> {
    let ev = PairEval::new(rho, sigma)?;
    reconstruct_dtilde_with(&ev, eps, grid.inner_points, grid.refine)
}

const DENSE_FACTOR: usize = 8;

pub(crate) fn equivalence(ev: &PairEval<'_>, g: &GridSpec, t: &mut Tally) -> Result<()> {
    let k = g.inner_points;
    for &e in &g.eps {
        let target = ev.dh(1.0 - e)?;
        let mut a = reconstruct_dh_with(ev, e, k, g.refine, false)?;
        let mut flag = false;
        if (a.value - target).abs() > GRID_TOL && a.value != target {
            let dense = reconstruct_dh_with(ev, e, k * DENSE_FACTOR, g.refine, false)?;
            flag = (dense.value - a.value).abs() > REVIEW_TOL;
            if dense.value < a.value {
                a = dense;
            }
        }
        t.check(Rel::DhFromDtilde, ev, Params::eps(e).with_delta(a.delta))?;
        if flag {
            t.flag(Rel::DhFromDtilde);
        }

        let target = ev.dtilde(e)?;
        let mut b = reconstruct_dtilde_with(ev, e, k, g.refine)?;
        let mut flag = false;
        if (b.value - target).abs() > GRID_TOL && b.value != target {
            let dense = reconstruct_dtilde_with(ev, e, k * DENSE_FACTOR, g.refine)?;
            flag = (dense.value - b.value).abs() > REVIEW_TOL;
            if dense.value > b.value {
                b = dense;
            }
        }
        t.check(Rel::DtildeFromDh, ev, Params::eps(e).with_delta(b.delta))?;
        if flag {
            t.flag(Rel::DtildeFromDh);
        }

        if ev.commuting() {
            let c = reconstruct_dh_with(ev, e, k, g.refine, true)?;
            t.check(Rel::DhFromTraceSub, ev, Params::eps(e).with_delta(c.delta))?;
        }
    }
    Ok(())
}

/// Minimises the slack of `rel` over one inner parameter, recording every evaluation.
/// Upper end of a refinement bracket kept off a point where both sides of a
/// relation diverge together and their difference loses all precision.
fn edge(hi: f64) -> f64 {
    hi * (1.0 - 1e-6)
}

fn inner_min(
    ev: &PairEval<'_>,
    t: &mut Tally,
    rel: Rel,
    points: &[f64],
    lo: f64,
    hi: f64,
    refine: bool,
    at: impl Fn(f64) -> Params,
) -> Result<()> {
    refine_min(points, lo, hi, refine, |x| t.check(rel, ev, at(x)))?;
    Ok(())
}

/// Branch-and-bound sweep for a relation whose varying side is
/// `sign * D(radius) + const` with `D` a smoothed divergence.
#[allow(clippy::too_many_arguments)]
fn radius_sweep(
    ev: &PairEval<'_>,
    t: &mut Tally,
    rel: Rel,
    radii: &[f64],
    consts: &[f64],
    floor: &[f64],
    ceil: &[f64],
    sign: f64,
    params: &[Params],
    value: impl Fn(f64) -> Result<f64>,
) -> Result<()> {
    bnb_min(radii, consts, floor, ceil, sign, |k| {
        t.check(rel, ev, params[k])?;
        value(radii[k])
    })?;
    Ok(())
}

/// `max(Dtilde^r, 0)`, a lower bound on every normalised smoothed divergence at radius `r`.
fn norm_floor(ev: &PairEval<'_>, r: f64) -> Result<f64> {
    Ok(ev.dtilde(r.min(1.0))?.max(0.0))
}

pub(crate) fn oneshot(ev: &PairEval<'_>, g: &GridSpec, t: &mut Tally) -> Result<()> {
    use Rel::*;
    let k = g.inner_points;
    let inf = vec![f64::INFINITY; k];
    for &e in &g.eps {
        let p = Params::eps(e);
        for rel in [
            DtildeDhLower,
            WscTraceLower,
            WscPurifiedLower,
            WscTraceSubLower,
            WscPurifiedSubLower,
            DrTraceNorm,
            DrTraceSub,
            DrPurifiedNorm,
            DrPurifiedSub,
            DtildeLeTraceSub,
            TraceSubLePurifiedSub,
            DtildeLeTraceNorm,
            TraceNormLePurifiedNorm,
        ] {
            t.check(rel, ev, p)?;
        }
        if ev.commuting() {
            t.check(WscClassicalLower, ev, p)?;
            t.check(WscClassicalSubLower, ev, p)?;
        }

        let mus = half_open_grid(0.0, e, k);
        inner_min(ev, t, DtildeDhUpper, &mus, 0.0, e, g.refine, |m| p.with_mu(m))?;

        let params: Vec<Params> = mus.iter().map(|&m| p.with_mu(m)).collect();
        let radii: Vec<f64> = mus.iter().map(|&m| (e - m).max(0.0)).collect();
        let consts: Vec<f64> = mus.iter().map(|&m| -m.log2()).collect();
        let floor = radii.iter().map(|&r| norm_floor(ev, r)).collect::<Result<Vec<_>>>()?;
        radius_sweep(ev, t, WscTraceUpper, &radii, &consts, &floor, &inf, 1.0, &params, |r| ev.smooth(T, N, r))?;

        let radii: Vec<f64> = mus.iter().map(|&m| (e - m).max(0.0).sqrt()).collect();
        let floor = radii.iter().map(|&r| norm_floor(ev, r)).collect::<Result<Vec<_>>>()?;
        let consts = mus
            .iter()
            .map(|&m| Ok((binary_fidelity(1.0 - e, (e - m).max(0.0))? / (m * m)).log2()))
            .collect::<Result<Vec<_>>>()?;
        radius_sweep(ev, t, WscPurifiedUpper, &radii, &consts, &floor, &inf, 1.0, &params, |r| ev.smooth(P, N, r))?;
        let consts: Vec<f64> = mus.iter().map(|&m| -2.0 * m.log2()).collect();
        radius_sweep(ev, t, WscPurifiedUpperLoose, &radii, &consts, &floor, &inf, 1.0, &params, |r| {
            ev.smooth(P, N, r)
        })?;

        let deltas = open_grid(0.0, 1.0 - e, k);
        inner_min(ev, t, PurifiedLowerAdditive, &deltas, 0.0, edge(1.0 - e), g.refine, |d| p.with_delta(d))?;
        if e < 0.5 {
            let cs = open_grid(2.0, 1.0 / e, k);
            inner_min(ev, t, PurifiedLowerMultiplicative, &cs, 2.0, 1.0 / e, g.refine, |c| p.with_c(c))?;
        }
    }
    Ok(())
}

pub(crate) fn renyi_infospec(ev: &PairEval<'_>, g: &GridSpec, t: &mut Tally) -> Result<()> {
    use Rel::*;
    let k = g.inner_points;
    for &e in &g.eps {
        let p = Params::eps(e);
        for &a in &g.alphas_upper {
            for rel in [RenyiDtildeUpper, RenyiSmoothUpper, RenyiTraceUpper] {
                t.check(rel, ev, p.with_alpha(a))?;
            }
        }
        for &a in &g.alphas_lower {
            for rel in [RenyiDtildeLower, RenyiTraceSubLower, RenyiPurifiedSubLower, RenyiDhLower] {
                t.check(rel, ev, p.with_alpha(a))?;
            }
        }

        // purified c-family: the alpha-dependent part is cheap, the radius part is an SDP
        let cs = open_grid(0.0, 1.0, k);
        let radii: Vec<f64> = cs.iter().map(|&c| (c * e).sqrt()).collect();
        let mut consts = Vec::with_capacity(k);
        for &c in &cs {
            let mut worst = f64::NEG_INFINITY;
            for &a in &g.alphas_lower {
                let d = ev.renyi(a, crate::divergences::RenyiKind::Petz)?;
                worst = worst.max(d + a / (1.0 - a) * (1.0 - e).log2() + (1.0 - c).log2());
            }
            consts.push(-worst);
        }
        let floor = radii.iter().map(|&r| ev.dtilde(r)).collect::<Result<Vec<_>>>()?;
        let inf = vec![f64::INFINITY; k];
        bnb_min(&radii, &consts, &floor, &inf, 1.0, |i| {
            for &a in &g.alphas_lower {
                t.check(RenyiPurifiedCLower, ev, p.with_alpha(a).with_c(cs[i]))?;
            }
            ev.smooth(P, S, radii[i])
        })?;

        t.check(InfospecDtildeLower, ev, p)?;
        t.check(InfospecDhLower, ev, p)?;
        let mus = open_grid(0.0, 1.0 - e, k);
        inner_min(ev, t, InfospecDtildeUpper, &mus, 0.0, edge(1.0 - e), g.refine, |m| p.with_mu(m))?;
        inner_min(ev, t, InfospecDhUpper, &mus, 0.0, edge(1.0 - e), g.refine, |d| p.with_delta(d))?;
        t.check(Substate, ev, p)?;
    }
    Ok(())
}

/// Smallest `eps` at which `Dtilde^eps` becomes finite, located by bisection.
pub fn bisect_threshold(ev: &PairEval<'_>) -> Result<f64> {
    if ev.dtilde(0.0)?.is_finite() {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0 - 1e-12);
    if !ev.dtilde(hi)?.is_finite() {
        return Ok(1.0);
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        // just above the onset the value is finite but too large to resolve
        let finite = match ev.dtilde(mid) {
            Ok(v) => v.is_finite(),
            Err(crate::Error::Numerical(_)) => false,
            Err(e) => return Err(e),
        };
        if finite {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub(crate) fn structural(ev: &PairEval<'_>, g: &GridSpec, t: &mut Tally) -> Result<()> {
    use Rel::*;
    for &e in &g.eps {
        let p = Params::eps(e);
        for rel in [NormSubTrace, NormSubPurified, ThresholdSign, MeasuredDual, VariantPos, VariantHermSub, VariantHermEq] {
            t.check(rel, ev, p)?;
        }
        if ev.commuting() {
            t.check(ClassicalTraceSub, ev, p)?;
        }
    }
    let td = ev.trace_distance();
    for e in [td - 1e-3, td + 1e-3] {
        if e > 0.0 && e < 1.0 {
            t.check(ThresholdSign, ev, Params::eps(e))?;
        }
    }

    let probe = open_grid(0.0, 1.0, g.monotone_points);
    for w in probe.windows(2) {
        t.check(Monotone, ev, Params::eps(w[0]).with_eps2(w[1]))?;
    }
    for &e in &probe {
        if ev.dtilde(e)?.is_finite() {
            t.check(RightContinuity, ev, Params::eps(e))?;
        }
    }
    if !ev.sigma_full_rank() {
        t.check(DivergenceThreshold, ev, Params::default())?;
    }

    let h = g.hilbert_inner;
    let inf = vec![f64::INFINITY; h];
    let ninf = vec![f64::NEG_INFINITY; h];
    for e in g.hilbert_subset() {
        let p = Params::eps(e);
        t.check(HilbertTraceUpper, ev, p)?;
        t.check(HilbertPurifiedUpper, ev, p)?;

        let etas = open_grid(0.0, e, h);
        let params: Vec<Params> = etas.iter().map(|&x| p.with_eta(x)).collect();
        let radii: Vec<f64> = etas.iter().map(|&x| e + x).collect();
        let ceil = vec![ev.hilbert(T, e)?; h];
        let consts: Vec<f64> = etas.iter().map(|&x| -x.log2()).collect();
        radius_sweep(ev, t, HilbertTraceLower, &radii, &consts, &ninf, &ceil, -1.0, &params, |r| ev.hilbert(T, r))?;
        let ceil = vec![ev.hilbert(P, e)?; h];
        let consts: Vec<f64> = etas.iter().map(|&x| -2.0 * x.log2()).collect();
        radius_sweep(ev, t, HilbertPurifiedLower, &radii, &consts, &ninf, &ceil, -1.0, &params, |r| ev.hilbert(P, r))?;

        let mus = open_grid(0.0, e, h);
        let params: Vec<Params> = mus.iter().map(|&m| p.with_mu(m)).collect();
        let radii: Vec<f64> = mus.iter().map(|&m| e - m).collect();
        let floor = radii.iter().map(|&r| norm_floor(ev, r)).collect::<Result<Vec<_>>>()?;
        let consts: Vec<f64> = mus.iter().map(|&m| -m.log2()).collect();
        radius_sweep(ev, t, HilbertWscTraceUpper, &radii, &consts, &floor, &inf, 1.0, &params, |r| ev.hilbert(T, r))?;
        let radii: Vec<f64> = mus.iter().map(|&m| (e - m).sqrt()).collect();
        let floor = radii.iter().map(|&r| norm_floor(ev, r)).collect::<Result<Vec<_>>>()?;
        let consts: Vec<f64> = mus.iter().map(|&m| -2.0 * m.log2()).collect();
        radius_sweep(ev, t, HilbertWscPurifiedUpper, &radii, &consts, &floor, &inf, 1.0, &params, |r| {
            ev.hilbert(P, r)
        })?;

        let etas = open_grid(0.0, 1.0 - e.sqrt(), h);
        let params: Vec<Params> = etas.iter().map(|&x| p.with_eta(x)).collect();
        let radii: Vec<f64> = etas.iter().map(|&x| e.sqrt() + x).collect();
        let consts: Vec<f64> = etas.iter().map(|&x| -x.log2()).collect();
        radius_sweep(ev, t, HilbertWscTraceLower, &radii, &consts, &ninf, &inf, -1.0, &params, |r| ev.hilbert(T, r))?;
        let consts: Vec<f64> = etas.iter().map(|&x| -2.0 * x.log2()).collect();
        radius_sweep(ev, t, HilbertWscPurifiedLower, &radii, &consts, &ninf, &inf, -1.0, &params, |r| {
            ev.hilbert(P, r)
        })?;
    }
    Ok(())
}

fn single(suite: &str, rho: &State, sigma: &State, run: impl FnOnce(&PairEval<'_>, &mut Tally) -> Result<()>) -> Result<CheckReport> {
    let ev = PairEval::new(rho, sigma)?;
    let mut t = Tally::new(PairTag::supplied(rho.dim()), SLACK_TOL, 1e-4);
    run(&ev, &mut t)?;
    Ok(t.into_report(suite))
}

/// Both equivalence reconstructions over the `eps` grid.
pub fn check_equivalence(rho: &State, sigma: &State, grid: &GridSpec) -> Result<CheckReport> {
    grid.validate()?;
    single("equivalence", rho, sigma, |ev, t| equivalence(ev, grid, t))
}

/// The one-shot inequalities between `D_H`, `Dtilde` and the smoothed max-divergences.
pub fn check_oneshot_bounds(rho: &State, sigma: &State, grid: &GridSpec) -> Result<CheckReport> {
    grid.validate()?;
    single("oneshot", rho, sigma, |ev, t| oneshot(ev, grid, t))
}

/// Renyi, information-spectrum and substate bounds.
pub fn check_renyi_and_infospec(rho: &State, sigma: &State, grid: &GridSpec) -> Result<CheckReport> {
    grid.validate()?;
    single("renyi", rho, sigma, |ev, t| renyi_infospec(ev, grid, t))
}

/// Normalisation, classical, variant, continuity and Hilbert-metric identities.
pub fn check_structural(rho: &State, sigma: &State, grid: &GridSpec) -> Result<CheckReport> {
    grid.validate()?;
    single("structural", rho, sigma, |ev, t| structural(ev, grid, t))
}

fn qubit_pure(f: f64) -> Result<(State, State)> {
    let a = State::pure(&CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]))?;
    let b = State::pure(&CVec::from_vec(vec![C64::new(f.sqrt(), 0.0), C64::new((1.0 - f).sqrt(), 0.0)]))?;
    Ok((a, b))
}

/// Re-runs the saturating cases: `rho = sigma`, the classical pair
/// `(eps, 1-eps)` vs `(mu, 1-mu)`, and the pure pair with overlap `1 - eps + mu`.
pub fn tightness_witnesses(eps: &[f64], mu_fractions: &[f64]) -> Result<CheckReport> {
    let mut rep = CheckReport::empty("tightness");
    let mut idx = 0usize;
    let mut run = |rho: &State, sigma: &State, f: &mut dyn FnMut(&PairEval<'_>, &mut Tally) -> Result<()>| -> Result<CheckReport> {
        let ev = PairEval::new(rho, sigma)?;
        let mut tag = PairTag::supplied(rho.dim());
        tag.pair = idx;
        idx += 1;
        let mut t = Tally::new(tag, SLACK_TOL, 1e-4);
        f(&ev, &mut t)?;
        Ok(t.into_report("tightness"))
    };

    let identical = [State::classical(&[0.3, 0.7])?, sample_pair(Ensemble::HsMixed, 3, 11)?.0];
    for s in &identical {
        rep.merge(run(s, s, &mut |ev, t| {
            for &e in eps {
                for rel in [Rel::TightIdentityDtilde, Rel::TightIdentityTrace, Rel::TightIdentityPurified] {
                    t.check(rel, ev, Params::eps(e))?;
                }
            }
            Ok(())
        })?);
    }
    for &e in eps {
        for &fr in mu_fractions {
            let m = e * fr;
            let p = Params::eps(e).with_mu(m);
            let (r, s) = (State::classical(&[e, 1.0 - e])?, State::classical(&[m, 1.0 - m])?);
            rep.merge(run(&r, &s, &mut |ev, t| t.check(Rel::TightClassicalTrace, ev, p).map(|_| ()))?);
            let (r, s) = qubit_pure(1.0 - e + m)?;
            rep.merge(run(&r, &s, &mut |ev, t| t.check(Rel::TightPurePurified, ev, p).map(|_| ()))?);
        }
    }
    Ok(rep)
}
