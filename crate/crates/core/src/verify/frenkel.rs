use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use super::eval::PairEval;
use super::relations::{Params, Rel};
use super::{CheckReport, PairTag, Tally, SLACK_TOL};
use crate::matcore::State;
use crate::{Error, Result};

/// Quadrature settings for the integral check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Relative tolerance between the integral and `D(rho||sigma)`.
    pub tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { tol: 1e-4 }
    }
}

const MAX_INTERVALS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrenkelValue {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_468_4];

/// 15-point Kronrod estimate and its difference from the embedded 7-point Gauss rule.
fn gk15(a: f64, b: f64, f: &mut impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x)? + f(c + x)?;
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// Globally adaptive Gauss-Kronrod quadrature over consecutive `breaks`.
pub(crate) fn integrate(
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64, usize)> {
    let mut parts: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(w[0], w[1], &mut f)?;
            parts.push((w[0], w[1], v, e));
        }
    }
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || parts.len() >= max_intervals {
            return Ok((total, err, parts.len()));
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (a, b, _, _) = parts.swap_remove(i);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Ok((total, err, parts.len() + 1));
        }
        let (v1, e1) = gk15(a, m, &mut f)?;
        let (v2, e2) = gk15(m, b, &mut f)?;
        parts.push((a, m, v1, e1));
        parts.push((m, b, v2, e2));
    }
}

/// `int_0^{TD} [Dtilde^eps(rho||sigma) + log2(e) (1 - 2^{-Dtilde^eps(sigma||rho)})] d eps`.
///
/// The second term jumps where `Dtilde^eps(sigma||rho)` becomes finite, so the
/// range is split there.
pub fn frenkel_integral(ev: &PairEval<'_>, tol: f64) -> Result<FrenkelValue> {
    if ev.leak() > crate::divergences::LEAK_TOL {
        return Err(Error::domain("supp rho is not contained in supp sigma"));
    }
    let td = ev.trace_distance();
    if td <= 0.0 {
        return Ok(FrenkelValue { value: 0.0, error_estimate: 0.0, intervals: 0 });
    }
    let mut breaks = vec![0.0];
    let split = ev.reverse_leak();
    if split > 0.0 && split < td {
        breaks.push(split);
    }
    breaks.push(td);
    let f = |e: f64| -> Result<f64> {
        let a = ev.dtilde(e)?;
        let b = ev.dtilde_rev(e)?;
        Ok(a + LOG2_E * (1.0 - (-b).exp2()))
    };
    let (value, error_estimate, intervals) = integrate(&breaks, tol * 1e-2, 1e-13, MAX_INTERVALS, f)?;
    Ok(FrenkelValue { value, error_estimate, intervals })
}

pub(crate) fn frenkel(ev: &PairEval<'_>, tol: f64, t: &mut Tally) -> Result<()> {
    t.check(Rel::Frenkel, ev, Params::default().with_tol(tol))?;
    Ok(())
}

/// Compares the integral with the Umegaki relative entropy.
pub fn check_frenkel(rho: &State, sigma: &State, quad: QuadSpec) -> Result<CheckReport> {
    let ev = PairEval::new(rho, sigma)?;
    let mut t = Tally::new(PairTag::supplied(rho.dim()), SLACK_TOL, quad.tol);
    frenkel(&ev, quad.tol, &mut t)?;
    Ok(t.into_report("frenkel"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_integrates_polynomials_exactly() {
        let (v, _, _) = integrate(&[0.0, 2.0], 1e-14, 1e-15, 100, |x| Ok(x.powi(5) - 3.0 * x)).unwrap();
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn adaptive_split_handles_a_kink() {
        let (v, _, n) = integrate(&[0.0, 1.0], 1e-12, 1e-14, 500, |x: f64| Ok((x - 0.3).abs())).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
        assert!(n > 1);
    }
}
