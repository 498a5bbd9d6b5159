//! Constructive smoothing: gentle measurements and geometric-mean domination.
//!
//! Every construction returns the smoothed operator together with the
//! distances and domination margins recomputed from the matrices, and the
//! bounds those quantities are guaranteed to satisfy.

use crate::error::{Error, Result};
use crate::matcore::{
    eig_hermitian, fidelity, generalized_trace_distance, partial_trace, support_projector,
    trace_distance, HermitianOperator, State, SubState, DIM_CAP, PSD_TOL, SUPPORT_RTOL,
};
use serde::Serialize;

/// Relative tolerance of the domination hypothesis `rho <= A + Q`.
pub const HYPOTHESIS_RTOL: f64 = 1e-8;

/// Distances and margins recomputed from a smoothed operator.
#[derive(Clone, Debug, Serialize)]
pub struct Certificates {
    /// Smoothing parameter the bounds are stated for.
    pub epsilon: f64,
    /// `F(rho, rho')`.
    pub fidelity_sub: f64,
    /// `F(rho, rho' / Tr rho')`.
    pub fidelity_norm: f64,
    /// `1/2 ||rho - rho' / Tr rho'||_1`.
    pub trace_dist_norm: f64,
    /// `1/2 ||rho - rho'||_1`.
    pub trace_dist_sub: f64,
    /// `||rho - rho'||_+`.
    pub gen_trace_dist_sub: f64,
    /// `lambda_min(A - rho')` when a dominating operator is given.
    pub domination_lambda: Option<f64>,
    /// `lambda_min(A / (1 - epsilon) - rho' / Tr rho')`.
    pub domination_norm: Option<f64>,
}

/// One promised inequality `value <= bound` (or `>=`), with signed slack.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    /// Non-negative iff the inequality holds.
    pub slack: f64,
}

impl BoundCheck {
    fn upper(name: &'static str, value: f64, bound: f64) -> Self {
        BoundCheck { name, value, bound, slack: bound - value }
    }

    fn lower(name: &'static str, value: f64, bound: f64) -> Self {
        BoundCheck { name, value, bound, slack: value - bound }
    }
}

#[derive(Clone, Debug)]
pub struct SmoothingWitness {
    pub rho_prime: SubState,
    pub rho_prime_normalised: State,
    pub certified: Certificates,
    /// The operator `G` (or `sqrt M`) with `rho' = G rho G`.
    pub g: HermitianOperator,
}

/// Bound on `1/2 ||rho - sqrt(M) rho sqrt(M)||_1`.
pub fn unnormalised_trace_bound(eps: f64) -> f64 {
    if eps <= 2.0 / 3.0 {
        (eps * (1.0 - 0.75 * eps)).max(0.0).sqrt()
    } else {
        1.0 / 3f64.sqrt()
    }
}

/// Bound on `||rho - sqrt(M) rho sqrt(M)||_+`.
pub fn gen_trace_bound(eps: f64) -> f64 {
    (eps * (1.0 - 0.75 * eps)).max(0.0).sqrt() + 0.5 * eps
}

impl SmoothingWitness {
    /// Every inequality the construction promises, evaluated at the recomputed values.
    pub fn bound_checks(&self) -> Vec<BoundCheck> {
        let c = &self.certified;
        let e = c.epsilon;
        let mut out = vec![
            BoundCheck::lower("fidelity_sub", c.fidelity_sub, (1.0 - e).powi(2)),
            BoundCheck::lower("fidelity_norm", c.fidelity_norm, 1.0 - e),
            BoundCheck::upper("trace_dist_norm", c.trace_dist_norm, e.sqrt()),
            BoundCheck::upper("trace_dist_sub", c.trace_dist_sub, unnormalised_trace_bound(e)),
            BoundCheck::upper("gen_trace_dist_sub", c.gen_trace_dist_sub, gen_trace_bound(e)),
        ];
        if let Some(d) = c.domination_lambda {
            out.push(BoundCheck::lower("domination_sub", d, 0.0));
        }
        if let Some(d) = c.domination_norm {
            out.push(BoundCheck::lower("domination_norm", d, 0.0));
        }
        out
    }

    /// Smallest slack over [`Self::bound_checks`].
    pub fn min_slack(&self) -> f64 {
        self.bound_checks().iter().map(|b| b.slack).fold(f64::INFINITY, f64::min)
    }
}

fn certify(
    rho: &State,
    g: HermitianOperator,
    epsilon: f64,
    a: Option<&HermitianOperator>,
) -> Result<SmoothingWitness> {
    let r = rho.op();
    let rp = r.congruence(g.matrix());
    let t = rp.trace();
    if !(t > 0.0) {
        return Err(Error::Numerical("smoothed operator has zero trace".into()));
    }
    let rn = rp.scale(1.0 / t);
    let (domination_lambda, domination_norm) = match a {
        Some(a) => {
            let sub = (a - &rp).min_eigenvalue()?;
            let norm = if epsilon < 1.0 {
                Some((&a.scale(1.0 / (1.0 - epsilon)) - &rn).min_eigenvalue()?)
            } else {
                None
            };
            (Some(sub), norm)
        }
        None => (None, None),
    };
    let certified = Certificates {
        epsilon,
        fidelity_sub: fidelity(r, &rp)?,
        fidelity_norm: fidelity(r, &rn)?,
        trace_dist_norm: trace_distance(r, &rn)?,
        trace_dist_sub: trace_distance(r, &rp)?,
        gen_trace_dist_sub: generalized_trace_distance(r, &rp)?,
        domination_lambda,
        domination_norm,
    };
    Ok(SmoothingWitness {
        rho_prime: SubState::new(rp)?,
        rho_prime_normalised: State::new(rn)?,
        certified,
        g,
    })
}

/// `rho' = sqrt(M) rho sqrt(M)` with `epsilon = 1 - Tr M rho`.
pub fn gentle_measurement(rho: &State, m: &HermitianOperator) -> Result<SmoothingWitness> {
    if m.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(m.dim(), rho.dim()));
    }
    let e = m.eig()?;
    let (lo, hi) = (*e.values.last().unwrap(), e.values[0]);
    if lo < -PSD_TOL || hi > 1.0 + PSD_TOL {
        return Err(Error::domain(format!(
            "measurement operator spectrum [{lo:e}, {hi:e}] is not within [0, 1]"
        )));
    }
    let eps = (1.0 - rho.op().trace_with(m)).clamp(0.0, 1.0);
    // rounding noise around a zero eigenvalue would otherwise enter at its square root
    let cut = e.cutoff(16.0 * f64::EPSILON);
    let root = e.map(|l| if l > cut { l.min(1.0).sqrt() } else { 0.0 });
    certify(rho, root, eps, None)
}

/// `A # (A + Q)^{-1}` on `supp(A + Q)`.
pub fn domination_operator(a: &HermitianOperator, q: &HermitianOperator) -> Result<HermitianOperator> {
    let sum = a + q;
    let (_, v) = support_projector(&sum, SUPPORT_RTOL)?;
    if v.ncols() == 0 {
        return Ok(HermitianOperator::zeros(a.dim()));
    }
    let vd = v.adjoint();
    let es = sum.congruence(&vd).eig()?;
    let half = es.map(|l| l.max(0.0).sqrt());
    let inv_half = es.map(|l| 1.0 / l.sqrt());
    let inner = eig_hermitian(&a.congruence(&vd).congruence(half.matrix()))?.map(|l| l.max(0.0).sqrt());
    let g = inner.congruence(inv_half.matrix());
    Ok(g.congruence(&v))
}

fn check_domination(rho: &HermitianOperator, a: &HermitianOperator, q: &HermitianOperator) -> Result<()> {
    let sum = a + q;
    let norm = sum.eigenvalues()?.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let gap = (&sum - rho).min_eigenvalue()?;
    if gap < -HYPOTHESIS_RTOL * (1.0 + norm) {
        return Err(Error::HypothesisViolated(gap));
    }
    Ok(())
}

fn check_psd(name: &str, a: &HermitianOperator) -> Result<()> {
    let lo = a.min_eigenvalue()?;
    if lo < -PSD_TOL {
        return Err(Error::domain(format!("{name} is not positive semidefinite (min eigenvalue {lo:e})")));
    }
    Ok(())
}

/// Geometric-mean smoothing: given `rho <= A + Q` with `Tr Q < 1`, returns
/// `rho' = G rho G`, `G = A # (A + Q)^{-1}`, with `rho' <= A`.
/// The bounds are certified at `epsilon = Tr Q`.
pub fn datta_renner(rho: &State, a: &HermitianOperator, q: &HermitianOperator) -> Result<SmoothingWitness> {
    for op in [a, q] {
        if op.dim() != rho.dim() {
            return Err(Error::DimensionMismatch(op.dim(), rho.dim()));
        }
    }
    check_psd("A", a)?;
    check_psd("Q", q)?;
    let eps = q.trace().max(0.0);
    if eps >= 1.0 {
        return Err(Error::domain(format!("Tr Q = {eps} must be below 1")));
    }
    check_domination(rho.op(), a, q)?;
    let g = domination_operator(a, q)?;
    certify(rho, g, eps, Some(a))
}

/// Result of smoothing all marginals of a multipartite state at once.
#[derive(Clone, Debug, Serialize)]
pub struct SimultaneousWitness {
    #[serde(skip)]
    pub rho_prime: State,
    /// `Tr Q_i` per factor.
    pub epsilons: Vec<f64>,
    /// `F(rho, rho')`.
    pub fidelity: f64,
    /// `1/2 ||rho - rho'||_1`.
    pub trace_distance: f64,
    /// `lambda_min(A_i / (1 - sum_j eps_j) - rho'_i)` per factor.
    pub marginal_domination: Vec<f64>,
}

impl SimultaneousWitness {
    pub fn total_epsilon(&self) -> f64 {
        self.epsilons.iter().sum()
    }

    pub fn bound_checks(&self) -> Vec<BoundCheck> {
        let e = self.total_epsilon();
        let mut out = vec![
            BoundCheck::lower("fidelity", self.fidelity, 1.0 - e),
            BoundCheck::upper("trace_distance", self.trace_distance, e.sqrt()),
        ];
        for &d in &self.marginal_domination {
            out.push(BoundCheck::lower("marginal_domination", d, 0.0));
        }
        out
    }
}

/// Smooths `rho` on `dims[0] x dims[1] x ...` with one `(A_i, Q_i)` per factor,
/// `rho_i <= A_i + Q_i`, `sum Tr Q_i < 1`.
pub fn simultaneous_smooth(
    rho: &State,
    dims: &[usize],
    a: &[HermitianOperator],
    q: &[HermitianOperator],
) -> Result<SimultaneousWitness> {
    let total: usize = dims.iter().product();
    if total > DIM_CAP {
        return Err(Error::DimensionCap(total));
    }
    if total != rho.dim() {
        return Err(Error::DimensionMismatch(total, rho.dim()));
    }
    if a.len() != dims.len() || q.len() != dims.len() {
        return Err(Error::DimensionMismatch(a.len().min(q.len()), dims.len()));
    }
    let mut epsilons = Vec::with_capacity(dims.len());
    let mut gs = Vec::with_capacity(dims.len());
    let mut marginals = Vec::with_capacity(dims.len());
    for (i, &d) in dims.iter().enumerate() {
        if a[i].dim() != d || q[i].dim() != d {
            return Err(Error::DimensionMismatch(a[i].dim(), d));
        }
        check_psd("A", &a[i])?;
        check_psd("Q", &q[i])?;
        let rho_i = partial_trace(rho.op(), dims, &[i])?;
        check_domination(&rho_i, &a[i], &q[i])?;
        epsilons.push(q[i].trace().max(0.0));
        gs.push(domination_operator(&a[i], &q[i])?);
        marginals.push(rho_i);
    }
    let total_eps: f64 = epsilons.iter().sum();
    if total_eps >= 1.0 {
        return Err(Error::domain(format!("sum of Tr Q_i = {total_eps} must be below 1")));
    }
    let g = crate::matcore::tensor_all(&gs)?;
    let rp = rho.op().congruence(g.matrix());
    let t = rp.trace();
    if !(t > 0.0) {
        return Err(Error::Numerical("smoothed operator has zero trace".into()));
    }
    let rp = State::new(rp.scale(1.0 / t))?;
    let mut marginal_domination = Vec::with_capacity(dims.len());
    for (i, ai) in a.iter().enumerate() {
        let rpi = partial_trace(rp.op(), dims, &[i])?;
        marginal_domination.push((&ai.scale(1.0 / (1.0 - total_eps)) - &rpi).min_eigenvalue()?);
    }
    Ok(SimultaneousWitness {
        fidelity: fidelity(rho.op(), rp.op())?,
        trace_distance: trace_distance(rho.op(), rp.op())?,
        rho_prime: rp,
        epsilons,
        marginal_domination,
    })
}

/// The qubit measurement `|phi><phi|`, `phi = sqrt(1 - eps)|0> + sqrt(eps)|1>`,
/// which saturates the gentle-measurement bounds on `|0><0|`.
pub fn extremal_qubit_measurement(eps: f64) -> Result<HermitianOperator> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::domain(format!("epsilon = {eps} outside [0, 1]")));
    }
    let v = crate::matcore::CVec::from_vec(vec![
        crate::matcore::c((1.0 - eps).sqrt()),
        crate::matcore::c(eps.sqrt()),
    ]);
    Ok(HermitianOperator::outer(&v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit0() -> State {
        State::classical(&[1.0, 0.0]).unwrap()
    }

    #[test]
    fn identity_measurement_is_trivial() {
        let rho = State::classical(&[0.3, 0.7]).unwrap();
        let w = gentle_measurement(&rho, &HermitianOperator::identity(2)).unwrap();
        assert!(w.certified.trace_dist_sub < 1e-14);
        assert!((w.certified.fidelity_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_family_saturates() {
        for k in 1..=6 {
            let eps = 0.1 * k as f64;
            let m = extremal_qubit_measurement(eps).unwrap();
            let w = gentle_measurement(&qubit0(), &m).unwrap();
            assert!((w.certified.fidelity_norm - (1.0 - eps)).abs() < 1e-12);
            assert!((w.certified.trace_dist_sub - unnormalised_trace_bound(eps)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_contraction() {
        let m = HermitianOperator::diag(&[1.5, 0.0]);
        assert!(matches!(gentle_measurement(&qubit0(), &m), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_remainder_gives_identity() {
        let rho = State::classical(&[0.25, 0.75]).unwrap();
        let a = HermitianOperator::diag(&[0.5, 0.8]);
        let w = datta_renner(&rho, &a, &HermitianOperator::zeros(2)).unwrap();
        let id = HermitianOperator::identity(2);
        assert!((&w.g - &id).frobenius_norm() < 1e-12);
    }

    #[test]
    fn hypothesis_failure_reports_gap() {
        let rho = State::classical(&[0.5, 0.5]).unwrap();
        let a = HermitianOperator::diag(&[0.1, 0.5]);
        match datta_renner(&rho, &a, &HermitianOperator::zeros(2)) {
            Err(Error::HypothesisViolated(g)) => assert!((g + 0.4).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
