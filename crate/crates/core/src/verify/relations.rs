use serde::{Deserialize, Serialize};

use super::eval::PairEval;
use super::frenkel::frenkel_integral;
use super::GRID_TOL;
use crate::divergences::{binary_fidelity, Metric, Normalisation, RenyiKind};
use crate::sdpsolve::Variant;
use crate::{Error, Result};

use Metric::{Purified as P, Trace as T};
use Normalisation::{Normalised as N, Subnormalised as S};

/// How the two sides are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// `lhs <= rhs`, slack `rhs - lhs`.
    Le,
    /// `lhs = rhs`, slack `-|lhs - rhs|`.
    Eq,
    /// `lhs = rhs` in relative terms, slack `-|lhs - rhs| / |rhs|`.
    Rel,
}

impl Kind {
    pub fn slack(self, lhs: f64, rhs: f64) -> f64 {
        if lhs == rhs {
            return 0.0;
        }
        match self {
            Kind::Le => rhs - lhs,
            Kind::Eq => -(lhs - rhs).abs(),
            Kind::Rel => {
                if rhs == 0.0 || !rhs.is_finite() || !lhs.is_finite() {
                    f64::NEG_INFINITY
                } else {
                    -(lhs - rhs).abs() / rhs.abs()
                }
            }
        }
    }
}

/// Evaluation point of a relation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

fn need<T>(x: Option<T>, name: &str) -> Result<T> {
    x.ok_or_else(|| Error::Parse(format!("relation parameter '{name}' missing")))
}

impl Params {
    pub fn eps(eps: f64) -> Self {
        Params { eps: Some(eps), ..Default::default() }
    }
    pub fn with_eps2(mut self, x: f64) -> Self {
        self.eps2 = Some(x);
        self
    }
    pub fn with_mu(mut self, x: f64) -> Self {
        self.mu = Some(x);
        self
    }
    pub fn with_delta(mut self, x: f64) -> Self {
        self.delta = Some(x);
        self
    }
    pub fn with_alpha(mut self, x: f64) -> Self {
        self.alpha = Some(x);
        self
    }
    pub fn with_c(mut self, x: f64) -> Self {
        self.c = Some(x);
        self
    }
    pub fn with_eta(mut self, x: f64) -> Self {
        self.eta = Some(x);
        self
    }
    pub fn with_n(mut self, n: u32) -> Self {
        self.n = Some(n);
        self
    }
    pub fn with_rate(mut self, x: f64) -> Self {
        self.rate = Some(x);
        self
    }
    pub fn with_tol(mut self, x: f64) -> Self {
        self.tol = Some(x);
        self
    }
}

macro_rules! relations {
    ($( $var:ident => $tag:literal, $kind:ident, $stmt:literal; )*) => {
        /// Every relation the engine checks.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Rel { $($var,)* }

        impl Rel {
            pub const ALL: &'static [Rel] = &[$(Rel::$var,)*];

            pub fn tag(self) -> &'static str {
                match self { $(Rel::$var => $tag,)* }
            }

            pub fn kind(self) -> Kind {
                match self { $(Rel::$var => Kind::$kind,)* }
            }

            pub fn statement(self) -> &'static str {
                match self { $(Rel::$var => $stmt,)* }
            }
        }

        impl std::str::FromStr for Rel {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($tag => Ok(Rel::$var),)*
                    _ => Err(Error::Parse(format!("unknown relation tag '{s}'"))),
                }
            }
        }
    };
}

relations! {
    DhFromDtilde => "dh_from_dtilde", Eq,
        "D_H^{1-eps} = inf_{delta in [0,eps)} [Dtilde^delta - log(eps - delta)]";
    DtildeFromDh => "dtilde_from_dh", Eq,
        "Dtilde^eps = sup_{delta in (eps,1]} [D_H^{1-delta} + log(delta - eps)]";
    DhFromTraceSub => "dh_from_trace_sub", Eq,
        "commuting pairs: D_H^{1-eps} = inf_delta [D^{T,sub,delta} - log(eps - delta)]";

    DtildeDhLower => "dtilde_dh_lower", Le,
        "Dtilde^eps + log 1/(eps(1-eps)) <= D_H^{1-eps}";
    DtildeDhUpper => "dtilde_dh_upper", Le,
        "D_H^{1-eps} <= Dtilde^{eps-mu} + log 1/mu, mu in (0,eps]";
    WscTraceLower => "wsc_trace_lower", Le,
        "D^{T,n,sqrt(eps)} + log 1/eps <= D_H^{1-eps}";
    WscTraceUpper => "wsc_trace_upper", Le,
        "D_H^{1-eps} <= D^{T,n,eps-mu} + log 1/mu, mu in (0,eps]";
    WscPurifiedLower => "wsc_purified_lower", Le,
        "D^{P,n,sqrt(eps)} + log 1/eps <= D_H^{1-eps}";
    WscPurifiedUpper => "wsc_purified_upper", Le,
        "D_H^{1-eps} <= D^{P,n,sqrt(eps-mu)} + log(F2(1-eps, eps-mu)/mu^2), mu in (0,eps]";
    WscPurifiedUpperLoose => "wsc_purified_upper_loose", Le,
        "D_H^{1-eps} <= D^{P,n,sqrt(eps-mu)} + log 1/mu^2, mu in (0,eps]";
    WscClassicalLower => "wsc_classical_lower", Le,
        "commuting pairs: D^{T,n,eps} + log 1/eps <= D_H^{1-eps}";
    WscTraceSubLower => "wsc_trace_sub_lower", Le,
        "D^{T,sub,sqrt(eps(1-3eps/4))+eps/2} + log 1/(eps(1-eps)) <= D_H^{1-eps}";
    WscPurifiedSubLower => "wsc_purified_sub_lower", Le,
        "D^{P,sub,sqrt(eps(2-eps))} + log 1/(eps(1-eps)) <= D_H^{1-eps}";
    WscClassicalSubLower => "wsc_classical_sub_lower", Le,
        "commuting pairs: D^{T,sub,eps} + log 1/(eps(1-eps)) <= D_H^{1-eps}";
    DrTraceNorm => "dr_trace_norm", Le,
        "D^{T,n,sqrt(eps)} - log 1/(1-eps) <= Dtilde^eps";
    DrTraceSub => "dr_trace_sub", Le,
        "D^{T,sub,sqrt(eps(1-3eps/4))+eps/2} <= Dtilde^eps";
    DrPurifiedNorm => "dr_purified_norm", Le,
        "D^{P,n,sqrt(eps)} - log 1/(1-eps) <= Dtilde^eps";
    DrPurifiedSub => "dr_purified_sub", Le,
        "D^{P,sub,sqrt(eps(2-eps))} <= Dtilde^eps";
    DtildeLeTraceSub => "dtilde_le_trace_sub", Le,
        "Dtilde^eps <= D^{T,sub,eps}";
    TraceSubLePurifiedSub => "trace_sub_le_purified_sub", Le,
        "D^{T,sub,eps} <= D^{P,sub,eps}";
    DtildeLeTraceNorm => "dtilde_le_trace_norm", Le,
        "Dtilde^eps <= D^{T,n,eps}";
    TraceNormLePurifiedNorm => "trace_norm_le_purified_norm", Le,
        "D^{T,n,eps} <= D^{P,n,eps}";
    PurifiedLowerAdditive => "purified_lower_additive", Le,
        "Dtilde^{eps+delta} <= D^{P,sub,sqrt(eps)} + log((eps+delta)(1-eps-delta)/delta), delta in (0,1-eps)";
    PurifiedLowerMultiplicative => "purified_lower_multiplicative", Le,
        "Dtilde^{c eps} <= D^{P,sub,sqrt(eps)} + log(c/(c-1)), c in (2,1/eps)";

    TightIdentityDtilde => "tight_identity_dtilde", Eq,
        "rho = sigma: Dtilde^eps + log 1/(eps(1-eps)) = D_H^{1-eps}";
    TightIdentityTrace => "tight_identity_trace", Eq,
        "rho = sigma: D^{T,n,sqrt(eps)} + log 1/eps = D_H^{1-eps}";
    TightIdentityPurified => "tight_identity_purified", Eq,
        "rho = sigma: D^{P,n,sqrt(eps)} + log 1/eps = D_H^{1-eps}";
    TightClassicalTrace => "tight_classical_trace", Eq,
        "p = (eps,1-eps), q = (mu,1-mu): D_H^{1-eps} = D^{T,n,eps-mu} + log 1/mu";
    TightPurePurified => "tight_pure_purified", Eq,
        "pure pair with overlap 1-eps+mu: D_H^{1-eps} = D^{P,n,sqrt(eps-mu)} + log(F2(1-eps, eps-mu)/mu^2)";

    RenyiDtildeUpper => "renyi_dtilde_upper", Le,
        "alpha > 1: Dtilde^eps + log 1/(1-eps) <= Dsand_alpha + 1/(alpha-1) log 1/eps";
    RenyiSmoothUpper => "renyi_smooth_upper", Le,
        "alpha > 1: D^{P,n,eps} <= Dsand_alpha + 1/(alpha-1) log 1/eps^2";
    RenyiTraceUpper => "renyi_trace_upper", Le,
        "alpha > 1: D^{T,n,eps} <= Dsand_alpha + 1/(alpha-1) log 1/eps^2";
    RenyiDtildeLower => "renyi_dtilde_lower", Le,
        "alpha in (0,1): D_alpha - 1/(1-alpha) log 1/(1-eps) <= Dtilde^eps";
    RenyiTraceSubLower => "renyi_trace_sub_lower", Le,
        "alpha in (0,1): D_alpha - 1/(1-alpha) log 1/(1-eps) <= D^{T,sub,eps}";
    RenyiPurifiedSubLower => "renyi_purified_sub_lower", Le,
        "alpha in (0,1): D_alpha - 1/(1-alpha) log 1/(1-eps) <= D^{P,sub,eps}";
    RenyiDhLower => "renyi_dh_lower", Le,
        "alpha in (0,1): D_alpha - alpha/(1-alpha) log 1/eps + log 1/(1-eps) <= D_H^eps";
    RenyiPurifiedCLower => "renyi_purified_c_lower", Le,
        "alpha, c in (0,1): D_alpha - alpha/(1-alpha) log 1/(1-eps) - log 1/(1-c) <= D^{P,sub,sqrt(c eps)}";
    InfospecDtildeLower => "infospec_dtilde_lower", Le,
        "Dtilde^{1-eps} <= D_s^eps";
    InfospecDtildeUpper => "infospec_dtilde_upper", Le,
        "D_s^eps <= Dtilde^{1-eps-mu} + log((1-eps)/mu), mu in (0,1-eps)";
    InfospecDhLower => "infospec_dh_lower", Le,
        "D_s^eps + log 1/(1-eps) <= D_H^eps";
    InfospecDhUpper => "infospec_dh_upper", Le,
        "D_H^eps <= D_s^{eps+delta} + log 1/delta, delta in (0,1-eps)";
    Substate => "substate", Le,
        "D^{P,n,eps} <= (D + 1)/eps^2 - log 1/eps^2";

    NormSubTrace => "norm_sub_trace", Eq,
        "D^{T,n,eps} = max(D^{T,sub,eps}, 0)";
    NormSubPurified => "norm_sub_purified", Eq,
        "D^{P,n,eps} = max(D^{P,sub,eps}, 0)";
    ThresholdSign => "threshold_sign", Le,
        "D^{T,sub,eps} >= 0 below the trace distance and <= 0 above it";
    ClassicalTraceSub => "classical_trace_sub", Eq,
        "commuting pairs: Dtilde^eps = D^{T,sub,eps}";
    MeasuredDual => "measured_dual", Eq,
        "Dtilde^eps from the hockey-stick inverse = Dtilde^eps from the dual program";
    VariantPos => "variant_pos", Eq,
        "smoothing over positive operators with ||rho - rho'||_+ <= eps equals Dtilde^eps";
    VariantHermSub => "variant_herm_sub", Eq,
        "smoothing over Hermitian operators with trace at most 1 equals Dtilde^eps";
    VariantHermEq => "variant_herm_eq", Eq,
        "smoothing over Hermitian operators with unit trace equals max(Dtilde^eps, 0)";
    Monotone => "dtilde_monotone", Le,
        "eps <= eps2: Dtilde^{eps2} <= Dtilde^eps";
    RightContinuity => "dtilde_right_continuity", Le,
        "Dtilde^eps - 1e-3 <= Dtilde^{eps+1e-6} where finite";
    DivergenceThreshold => "divergence_threshold", Eq,
        "bisected onset of finite Dtilde = 1 - Tr rho Pi_sigma";
    HilbertTraceUpper => "hilbert_trace_upper", Le,
        "D^{T,n,eps} <= D_Omega^{T,n,eps}";
    HilbertTraceLower => "hilbert_trace_lower", Le,
        "D_Omega^{T,n,eps+eta} - log 1/eta <= D^{T,n,eps}, eta in (0,eps)";
    HilbertPurifiedUpper => "hilbert_purified_upper", Le,
        "D^{P,n,eps} <= D_Omega^{P,n,eps}";
    HilbertPurifiedLower => "hilbert_purified_lower", Le,
        "D_Omega^{P,n,eps+eta} - log 1/eta^2 <= D^{P,n,eps}, eta in (0,eps)";
    HilbertWscTraceLower => "hilbert_wsc_trace_lower", Le,
        "D_Omega^{T,n,sqrt(eps)+eta} - log 1/eta + log 1/eps <= D_H^{1-eps}, eta in (0,1-sqrt(eps))";
    HilbertWscTraceUpper => "hilbert_wsc_trace_upper", Le,
        "D_H^{1-eps} <= D_Omega^{T,n,eps-mu} + log 1/mu, mu in (0,eps)";
    HilbertWscPurifiedLower => "hilbert_wsc_purified_lower", Le,
        "D_Omega^{P,n,sqrt(eps)+eta} - log 1/eta^2 + log 1/eps <= D_H^{1-eps}, eta in (0,1-sqrt(eps))";
    HilbertWscPurifiedUpper => "hilbert_wsc_purified_upper", Le,
        "D_H^{1-eps} <= D_Omega^{P,n,sqrt(eps-mu)} + log 1/mu^2, mu in (0,eps)";

    Frenkel => "frenkel", Rel,
        "integral over eps in [0, TD] of Dtilde^eps(rho||sigma) + log e (1 - 2^{-Dtilde^eps(sigma||rho)}) = D(rho||sigma)";

    ExpErrorMonotone => "exp_error_monotone", Le,
        "-(1/n) log eps_n(R) is non-decreasing in n";
    ExpErrorGap => "exp_error_gap", Eq,
        "-(1/n) log eps_n(R) at the largest n is near sup_{alpha>1} (alpha-1)(R - Dsand_alpha)";
    ExpScMonotone => "exp_sc_monotone", Le,
        "-(1/n) log(1 - eps_n(R)) is non-decreasing in n";
    ExpScGap => "exp_sc_gap", Eq,
        "-(1/n) log(1 - eps_n(R)) at the largest n is near sup_{alpha in (0,1)} (alpha-1)(R - D_alpha)";
    ExpErrorBracket => "exp_error_bracket", Le,
        "(alpha-1)(R - Dsand_alpha) + (alpha-1)/n log 1/(1-eps_n) <= -(1/n) log eps_n";
    ExpScBracket => "exp_sc_bracket", Le,
        "(alpha-1)(R - D_alpha) <= -(1/n) log(1 - eps_n)";
}

/// Default tolerance on the slack of each relation.
pub fn default_tol(rel: Rel, slack_tol: f64, quad_tol: f64) -> f64 {
    use Rel::*;
    match rel {
        DhFromDtilde | DtildeFromDh | DhFromTraceSub => GRID_TOL,
        DivergenceThreshold => 1e-6,
        Frenkel => quad_tol,
        ExpErrorMonotone | ExpScMonotone => 1e-9,
        ExpErrorGap | ExpScGap => super::EXPONENT_GAP,
        _ => slack_tol,
    }
}

/// `sqrt(eps(1 - 3 eps / 4)) + eps / 2`.
pub fn sub_trace_radius(eps: f64) -> f64 {
    (eps * (1.0 - 0.75 * eps)).sqrt() + 0.5 * eps
}

/// `sqrt(eps(2 - eps))`.
pub fn sub_purified_radius(eps: f64) -> f64 {
    (eps * (2.0 - eps)).sqrt()
}

fn l2(x: f64) -> f64 {
    x.log2()
}

/// `-(1/n) log2 x`.
pub fn rate_of(x: f64, n: u32) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else {
        -x.log2() / n as f64
    }
}

/// Both sides of `rel` at `p`.
pub fn sides(rel: Rel, ev: &PairEval<'_>, p: &Params) -> Result<(f64, f64)> {
    use Rel::*;
    let eps = || need(p.eps, "eps");
    let mu = || need(p.mu, "mu");
    let delta = || need(p.delta, "delta");
    let alpha = || need(p.alpha, "alpha");
    Ok(match rel {
        DhFromDtilde => {
            let (e, d) = (eps()?, delta()?);
            (ev.dh(1.0 - e)?, ev.dtilde(d)? - l2(e - d))
        }
        DtildeFromDh => {
            let (e, d) = (eps()?, delta()?);
            (ev.dtilde(e)?, ev.dh(1.0 - d)? + l2(d - e))
        }
        DhFromTraceSub => {
            let (e, d) = (eps()?, delta()?);
            (ev.dh(1.0 - e)?, ev.smooth(T, S, d)? - l2(e - d))
        }
        DtildeDhLower | TightIdentityDtilde => {
            let e = eps()?;
            (ev.dtilde(e)? - l2(e * (1.0 - e)), ev.dh(1.0 - e)?)
        }
        DtildeDhUpper => {
            let (e, m) = (eps()?, mu()?);
            (ev.dh(1.0 - e)?, ev.dtilde(e - m)? - l2(m))
        }
        WscTraceLower | TightIdentityTrace => {
            let e = eps()?;
            (ev.smooth(T, N, e.sqrt())? - l2(e), ev.dh(1.0 - e)?)
        }
        WscTraceUpper | TightClassicalTrace => {
            let (e, m) = (eps()?, mu()?);
            (ev.dh(1.0 - e)?, ev.smooth(T, N, e - m)? - l2(m))
        }
        WscPurifiedLower | TightIdentityPurified => {
            let e = eps()?;
            (ev.smooth(P, N, e.sqrt())? - l2(e), ev.dh(1.0 - e)?)
        }
        WscPurifiedUpper | TightPurePurified => {
            let (e, m) = (eps()?, mu()?);
            let f2 = binary_fidelity(1.0 - e, (e - m).max(0.0))?;
            (ev.dh(1.0 - e)?, ev.smooth(P, N, (e - m).max(0.0).sqrt())? + l2(f2 / (m * m)))
        }
        WscPurifiedUpperLoose => {
            let (e, m) = (eps()?, mu()?);
            (ev.dh(1.0 - e)?, ev.smooth(P, N, (e - m).max(0.0).sqrt())? - 2.0 * l2(m))
        }
        WscClassicalLower => {
            let e = eps()?;
            (ev.smooth(T, N, e)? - l2(e), ev.dh(1.0 - e)?)
        }
        WscTraceSubLower => {
            let e = eps()?;
            (ev.smooth(T, S, sub_trace_radius(e))? - l2(e * (1.0 - e)), ev.dh(1.0 - e)?)
        }
        WscPurifiedSubLower => {
            let e = eps()?;
            (ev.smooth(P, S, sub_purified_radius(e))? - l2(e * (1.0 - e)), ev.dh(1.0 - e)?)
        }
        WscClassicalSubLower => {
            let e = eps()?;
            (ev.smooth(T, S, e)? - l2(e * (1.0 - e)), ev.dh(1.0 - e)?)
        }
        DrTraceNorm => {
            let e = eps()?;
            (ev.smooth(T, N, e.sqrt())? + l2(1.0 - e), ev.dtilde(e)?)
        }
        DrTraceSub => {
            let e = eps()?;
            (ev.smooth(T, S, sub_trace_radius(e))?, ev.dtilde(e)?)
        }
        DrPurifiedNorm => {
            let e = eps()?;
            (ev.smooth(P, N, e.sqrt())? + l2(1.0 - e), ev.dtilde(e)?)
        }
        DrPurifiedSub => {
            let e = eps()?;
            (ev.smooth(P, S, sub_purified_radius(e))?, ev.dtilde(e)?)
        }
        DtildeLeTraceSub => {
            let e = eps()?;
            (ev.dtilde(e)?, ev.smooth(T, S, e)?)
        }
        TraceSubLePurifiedSub => {
            let e = eps()?;
            (ev.smooth(T, S, e)?, ev.smooth(P, S, e)?)
        }
        DtildeLeTraceNorm => {
            let e = eps()?;
            (ev.dtilde(e)?, ev.smooth(T, N, e)?)
        }
        TraceNormLePurifiedNorm => {
            let e = eps()?;
            (ev.smooth(T, N, e)?, ev.smooth(P, N, e)?)
        }
        PurifiedLowerAdditive => {
            let (e, d) = (eps()?, delta()?);
            (ev.dtilde(e + d)?, ev.smooth(P, S, e.sqrt())? + l2((e + d) * (1.0 - e - d) / d))
        }
        PurifiedLowerMultiplicative => {
            let (e, c) = (eps()?, need(p.c, "c")?);
            (ev.dtilde(c * e)?, ev.smooth(P, S, e.sqrt())? + l2(c / (c - 1.0)))
        }

        RenyiDtildeUpper => {
            let (e, a) = (eps()?, alpha()?);
            let d = ev.renyi(a, RenyiKind::Sandwiched)?;
            (ev.dtilde(e)? - l2(1.0 - e), d - l2(e) / (a - 1.0))
        }
        RenyiSmoothUpper | RenyiTraceUpper => {
            let (e, a) = (eps()?, alpha()?);
            let d = ev.renyi(a, RenyiKind::Sandwiched)?;
            let metric = if rel == RenyiSmoothUpper { P } else { T };
            (ev.smooth(metric, N, e)?, d - 2.0 * l2(e) / (a - 1.0))
        }
        RenyiDtildeLower | RenyiTraceSubLower | RenyiPurifiedSubLower => {
            let (e, a) = (eps()?, alpha()?);
            let lhs = ev.renyi(a, RenyiKind::Petz)? + l2(1.0 - e) / (1.0 - a);
            let rhs = match rel {
                RenyiDtildeLower => ev.dtilde(e)?,
                RenyiTraceSubLower => ev.smooth(T, S, e)?,
                _ => ev.smooth(P, S, e)?,
            };
            (lhs, rhs)
        }
        RenyiDhLower => {
            let (e, a) = (eps()?, alpha()?);
            let lhs = ev.renyi(a, RenyiKind::Petz)? + a / (1.0 - a) * l2(e) - l2(1.0 - e);
            (lhs, ev.dh(e)?)
        }
        RenyiPurifiedCLower => {
            let (e, a, c) = (eps()?, alpha()?, need(p.c, "c")?);
            let lhs = ev.renyi(a, RenyiKind::Petz)? + a / (1.0 - a) * l2(1.0 - e) + l2(1.0 - c);
            (lhs, ev.smooth(P, S, (c * e).sqrt())?)
        }
        InfospecDtildeLower => {
            let e = eps()?;
            (ev.dtilde(1.0 - e)?, ev.dspec(e)?)
        }
        InfospecDtildeUpper => {
            let (e, m) = (eps()?, mu()?);
            (ev.dspec(e)?, ev.dtilde(1.0 - e - m)? + l2((1.0 - e) / m))
        }
        InfospecDhLower => {
            let e = eps()?;
            (ev.dspec(e)? - l2(1.0 - e), ev.dh(e)?)
        }
        InfospecDhUpper => {
            let (e, d) = (eps()?, delta()?);
            (ev.dh(e)?, ev.dspec(e + d)? - l2(d))
        }
        Substate => {
            let e = eps()?;
            (ev.smooth(P, N, e)?, (ev.umegaki()? + 1.0) / (e * e) + 2.0 * l2(e))
        }

        NormSubTrace | NormSubPurified => {
            let e = eps()?;
            let m = if rel == NormSubTrace { T } else { P };
            (ev.smooth(m, N, e)?, ev.smooth(m, S, e)?.max(0.0))
        }
        ThresholdSign => {
            let e = eps()?;
            let v = ev.smooth(T, S, e)?;
            if e < ev.trace_distance() {
                (0.0, v)
            } else {
                (v, 0.0)
            }
        }
        ClassicalTraceSub => {
            let e = eps()?;
            (ev.dtilde(e)?, ev.smooth(T, S, e)?)
        }
        MeasuredDual => {
            let e = eps()?;
            (ev.dtilde(e)?, ev.dtilde_dual(e)?)
        }
        VariantPos | VariantHermSub => {
            let e = eps()?;
            let v = if rel == VariantPos { Variant::Pos } else { Variant::HermSub };
            (ev.variant(v, e)?, ev.dtilde(e)?)
        }
        VariantHermEq => {
            let e = eps()?;
            (ev.variant(Variant::HermEq, e)?, ev.dtilde(e)?.max(0.0))
        }
        Monotone => {
            let (e, e2) = (eps()?, need(p.eps2, "eps2")?);
            (ev.dtilde(e2)?, ev.dtilde(e)?)
        }
        RightContinuity => {
            let e = eps()?;
            (ev.dtilde(e)? - 1e-3, ev.dtilde(e + 1e-6)?)
        }
        DivergenceThreshold => (super::suites::bisect_threshold(ev)?, ev.leak()),
        HilbertTraceUpper | HilbertPurifiedUpper => {
            let e = eps()?;
            let m = if rel == HilbertTraceUpper { T } else { P };
            (ev.smooth(m, N, e)?, ev.hilbert(m, e)?)
        }
        HilbertTraceLower => {
            let (e, h) = (eps()?, need(p.eta, "eta")?);
            (ev.hilbert(T, e + h)? + l2(h), ev.smooth(T, N, e)?)
        }
        HilbertPurifiedLower => {
            let (e, h) = (eps()?, need(p.eta, "eta")?);
            (ev.hilbert(P, e + h)? + 2.0 * l2(h), ev.smooth(P, N, e)?)
        }
        HilbertWscTraceLower | HilbertWscPurifiedLower => {
            let (e, h) = (eps()?, need(p.eta, "eta")?);
            let (m, k) = if rel == HilbertWscTraceLower { (T, 1.0) } else { (P, 2.0) };
            (ev.hilbert(m, e.sqrt() + h)? + k * l2(h) - l2(e), ev.dh(1.0 - e)?)
        }
        HilbertWscTraceUpper => {
            let (e, m) = (eps()?, mu()?);
            (ev.dh(1.0 - e)?, ev.hilbert(T, e - m)? - l2(m))
        }
        HilbertWscPurifiedUpper => {
            let (e, m) = (eps()?, mu()?);
            (ev.dh(1.0 - e)?, ev.hilbert(P, (e - m).max(0.0).sqrt())? - 2.0 * l2(m))
        }

        Frenkel => {
            let tol = need(p.tol, "tol")?;
            let d = ev.umegaki()?;
            if d.is_infinite() {
                (d, d)
            } else {
                (frenkel_integral(ev, tol)?.value, d)
            }
        }

        ExpErrorMonotone | ExpScMonotone => {
            let (n, r) = (need(p.n, "n")?, need(p.rate, "rate")?);
            let (a, b) = (ev.eps_n(n, r)?, ev.eps_n(n + 1, r)?);
            if rel == ExpErrorMonotone {
                (rate_of(a, n), rate_of(b, n + 1))
            } else {
                (rate_of(1.0 - a, n), rate_of(1.0 - b, n + 1))
            }
        }
        ExpErrorGap => {
            let (n, r, a) = (need(p.n, "n")?, need(p.rate, "rate")?, alpha()?);
            let target = (a - 1.0) * (r - ev.renyi(a, RenyiKind::Sandwiched)?);
            (rate_of(ev.eps_n(n, r)?, n), target)
        }
        ExpScGap => {
            let (n, r) = (need(p.n, "n")?, need(p.rate, "rate")?);
            let target = match p.alpha {
                Some(a) => (a - 1.0) * (r - ev.renyi(a, RenyiKind::Petz)?),
                None => 0.0,
            };
            (rate_of(1.0 - ev.eps_n(n, r)?, n), target)
        }
        ExpErrorBracket => {
            let (n, r, a) = (need(p.n, "n")?, need(p.rate, "rate")?, alpha()?);
            let e = ev.eps_n(n, r)?;
            let lhs = (a - 1.0) * (r - ev.renyi(a, RenyiKind::Sandwiched)?) - (a - 1.0) / n as f64 * l2(1.0 - e);
            (lhs, rate_of(e, n))
        }
        ExpScBracket => {
            let (n, r, a) = (need(p.n, "n")?, need(p.rate, "rate")?, alpha()?);
            let e = ev.eps_n(n, r)?;
            ((a - 1.0) * (r - ev.renyi(a, RenyiKind::Petz)?), rate_of(1.0 - e, n))
        }
    })
}
