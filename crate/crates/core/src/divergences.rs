//! Closed-form and spectral divergences.
//!
//! Logarithms are base 2. Values that can be infinite are returned as
//! [`ExtendedReal`]; every infinite answer comes from a support test, never
//! from numerical overflow.

use crate::error::{Error, Result};
use crate::matcore::{
    c, graded_singular_values, power_on_support, CMat, HermitianOperator, State, SubState, SUPPORT_RTOL,
};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::LN_2;
use std::fmt;

/// Mass of `rho` outside `supp sigma` below which the support is treated as contained.
pub const LEAK_TOL: f64 = 1e-10;
/// Tolerance for `epsilon == 1 - Tr rho Pi_sigma` boundary cases.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Relative tolerance of the bisection on lambda.
pub const LAMBDA_RTOL: f64 = 1e-10;
/// Iteration cap of every bisection in this module.
pub const MAX_BISECTION: usize = 200;
/// `Tr rho sigma` below which a pair counts as orthogonal for Renyi orders below one.
pub const ORTHOGONAL_TOL: f64 = 1e-14;
/// Frobenius norm of a commutator below which operators are treated as commuting.
pub const COMMUTE_TOL: f64 = 1e-12;

fn bits(nats: f64) -> f64 {
    nats / LN_2
}

/// A value in bits, possibly infinite. Never NaN.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ExtendedReal(f64);

impl ExtendedReal {
    pub const INFINITY: ExtendedReal = ExtendedReal(f64::INFINITY);
    pub const NEG_INFINITY: ExtendedReal = ExtendedReal(f64::NEG_INFINITY);

    /// Panics on NaN.
    pub fn new(x: f64) -> Self {
        assert!(!x.is_nan(), "ExtendedReal cannot hold NaN");
        ExtendedReal(x)
    }

    /// `log2 x`, with `log2 0 = -inf`.
    pub fn log2(x: f64) -> Self {
        if x <= 0.0 {
            Self::NEG_INFINITY
        } else {
            ExtendedReal(x.log2())
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_pos_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn max(self, other: ExtendedReal) -> ExtendedReal {
        ExtendedReal(self.0.max(other.0))
    }
}

impl From<ExtendedReal> for f64 {
    fn from(x: ExtendedReal) -> f64 {
        x.0
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::INFINITY {
            f.write_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(if self.0 > 0.0 { "inf" } else { "-inf" })
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(ExtendedReal(x)),
            Raw::Str(s) if s == "inf" => Ok(ExtendedReal::INFINITY),
            Raw::Str(s) if s == "-inf" => Ok(ExtendedReal::NEG_INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected number or 'inf', got '{s}'"))),
        }
    }
}

/// Serialises an `f64` as a number, or as `"inf"` / `"-inf"`.
pub fn serialize_f64_ext<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    ExtendedReal::new(*x).serialize(s)
}

/// Distance used to define a smoothing ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Generalised trace distance, `||rho - rho'||_+ <= eps`.
    Trace,
    /// Purified distance, `F_*(rho, rho') >= 1 - eps^2`.
    Purified,
}

/// Whether the smoothed state must have unit trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalisation {
    Normalised,
    Subnormalised,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    pub metric: Metric,
    pub normalisation: Normalisation,
    pub epsilon: f64,
}

impl SmoothingSpec {
    /// Smoothing level must lie in `[0, 1)`.
    pub fn new(metric: Metric, normalisation: Normalisation, epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::domain(format!("smoothing level {epsilon} outside [0, 1)")));
        }
        Ok(SmoothingSpec { metric, normalisation, epsilon })
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace" => Ok(Metric::Trace),
            "purified" => Ok(Metric::Purified),
            _ => Err(Error::Parse(format!("unknown metric '{s}'"))),
        }
    }
}

impl std::str::FromStr for Normalisation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalised" | "normalized" | "eq" => Ok(Normalisation::Normalised),
            "subnormalised" | "subnormalized" | "le" => Ok(Normalisation::Subnormalised),
            _ => Err(Error::Parse(format!("unknown normalisation '{s}'"))),
        }
    }
}

/// Relative spectral data of a pair `(rho, sigma)`.
#[derive(Clone, Debug)]
pub struct PencilDecomposition {
    /// Generalised eigenvalues of `(rho, sigma)` on `supp sigma`, decreasing.
    pub ratios: Vec<f64>,
    /// `1 - Tr rho Pi_sigma`.
    pub leak: f64,
    /// Whether `rho` commutes with the support projector of `sigma`.
    pub commutes_with_support: bool,
    /// Joint spectrum `(p_i, q_i)` when `rho` and `sigma` commute.
    pub atoms: Option<Vec<(f64, f64)>>,
    /// Orthonormal basis of `supp sigma`, one vector per column.
    pub support_basis: CMat,
}

impl PencilDecomposition {
    pub fn new(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<Self> {
        if rho.dim() != sigma.dim() {
            return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
        }
        let es = sigma.eig()?;
        let cut = es.cutoff(SUPPORT_RTOL);
        let basis = es.columns_where(|l| l > cut);
        let svals: Vec<f64> = es.values.iter().copied().filter(|&l| l > cut).collect();
        let proj = HermitianOperator::outer_sum(&basis);
        let leak = (rho.trace() - rho.trace_with(&proj)).max(0.0);
        let commutes_with_support = rho.commutator_norm(&proj) <= 1e-9;

        let mut scaled = basis.clone();
        for (j, &l) in svals.iter().enumerate() {
            let f = c(1.0 / l.sqrt());
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= f;
            }
        }
        let ratios = if svals.is_empty() {
            Vec::new()
        } else {
            rho.congruence(&scaled.adjoint()).eigenvalues()?
        };

        let atoms = if rho.commutator_norm(sigma) <= COMMUTE_TOL {
            Some(joint_spectrum(rho, &es)?)
        } else {
            None
        };
        Ok(PencilDecomposition { ratios, leak, commutes_with_support, atoms, support_basis: basis })
    }

    /// `log2` of the largest generalised eigenvalue on `supp sigma` (ignores the leak).
    pub fn max_ratio(&self) -> f64 {
        self.ratios.first().copied().unwrap_or(0.0).max(0.0)
    }

    pub fn support_contained(&self) -> bool {
        self.leak <= LEAK_TOL
    }
}

impl HermitianOperator {
    /// `V V^dagger` for a matrix with orthonormal columns.
    pub fn outer_sum(v: &CMat) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(v * v.adjoint())
    }
}

/// Joint eigenvalues of commuting `rho` and `sigma`, given the decomposition of `sigma`.
fn joint_spectrum(
    rho: &HermitianOperator,
    es: &crate::matcore::SpectralDecomposition,
) -> Result<Vec<(f64, f64)>> {
    let n = es.dim();
    let r = rho.congruence(&es.vectors.adjoint());
    let mut atoms = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (es.values[start] - es.values[end]).abs() <= 1e-12 {
            end += 1;
        }
        let block = r.matrix().view((start, start), (end - start, end - start)).into_owned();
        let p = HermitianOperator::from_matrix_unchecked(block).eigenvalues()?;
        for (k, pk) in p.into_iter().enumerate() {
            atoms.push((pk.max(0.0), es.values[start + k].max(0.0)));
        }
        start = end;
    }
    Ok(atoms)
}

fn check_pair(rho: &State, sigma: &State) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    Ok(())
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

/// `D(rho||sigma) = Tr rho (log rho - log sigma)`.
pub fn umegaki(rho: &State, sigma: &State) -> Result<ExtendedReal> {
    check_pair(rho, sigma)?;
    let pencil = PencilDecomposition::new(rho.op(), sigma.op())?;
    if !pencil.support_contained() {
        return Ok(ExtendedReal::INFINITY);
    }
    let er = rho.op().eig()?;
    let neg_entropy: f64 = er.values.iter().filter(|&&l| l > 0.0).map(|&l| l * l.ln()).sum();
    let es = sigma.op().eig()?;
    let cut = es.cutoff(SUPPORT_RTOL);
    let log_sigma = es.map(|l| if l > cut { l.ln() } else { 0.0 });
    let cross = rho.op().trace_with(&log_sigma);
    Ok(ExtendedReal::new(bits(neg_entropy - cross)))
}

/// `D_max(rho||sigma)`; `rho` may be subnormalised.
pub fn dmax_op(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<ExtendedReal> {
    let pencil = PencilDecomposition::new(rho, sigma)?;
    if pencil.leak > LEAK_TOL * rho.trace().max(1e-300) {
        return Ok(ExtendedReal::INFINITY);
    }
    Ok(ExtendedReal::log2(pencil.max_ratio()))
}

pub fn dmax(rho: &State, sigma: &State) -> Result<ExtendedReal> {
    check_pair(rho, sigma)?;
    dmax_op(rho.op(), sigma.op())
}

pub fn dmax_sub(rho: &SubState, sigma: &State) -> Result<ExtendedReal> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    dmax_op(rho.op(), sigma.op())
}

/// `E_lambda(rho||sigma) = Tr (rho - lambda sigma)_+`.
pub fn hockey_stick(rho: &State, sigma: &State, lambda: f64) -> Result<f64> {
    check_pair(rho, sigma)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("lambda = {lambda} must be finite and non-negative")));
    }
    hockey_op(rho.op(), sigma.op(), lambda)
}

fn hockey_op(rho: &HermitianOperator, sigma: &HermitianOperator, lambda: f64) -> Result<f64> {
    crate::matcore::positive_part_trace(&(rho - &sigma.scale(lambda)))
}

/// Optimal point of the primal program for the hockey-stick max-divergence.
#[derive(Clone, Debug)]
pub struct DtildeWitness {
    /// `lambda = 2^value`, with `E_lambda <= epsilon`.
    pub lambda: f64,
    /// `Q = (rho - lambda sigma)_+`, so that `rho <= lambda sigma + Q` and `Tr Q <= epsilon`.
    pub q: HermitianOperator,
}

/// `log2 inf { lambda : E_lambda(rho||sigma) <= epsilon }`.
pub fn dtilde_max(rho: &State, sigma: &State, epsilon: f64) -> Result<ExtendedReal> {
    Ok(dtilde_max_witness(rho, sigma, epsilon)?.0)
}

/// As [`dtilde_max`], also returning the primal witness when the value is finite.
pub fn dtilde_max_witness(
    rho: &State,
    sigma: &State,
    epsilon: f64,
) -> Result<(ExtendedReal, Option<DtildeWitness>)> {
    check_pair(rho, sigma)?;
    check_unit("epsilon", epsilon)?;
    let (r, s) = (rho.op(), sigma.op());
    if epsilon >= 1.0 {
        return Ok((ExtendedReal::NEG_INFINITY, None));
    }
    let pencil = PencilDecomposition::new(r, s)?;
    match boundary_case(r, s, &pencil, epsilon)? {
        Some(v) => return Ok((v, None)),
        None => {}
    }
    let lambda = bisect_hockey(r, s, &pencil, epsilon, |e| e <= epsilon)?;
    let q = crate::matcore::eig_hermitian(&(r - &s.scale(lambda)))?.map(|l| l.max(0.0));
    Ok((ExtendedReal::log2(lambda), Some(DtildeWitness { lambda, q })))
}

/// Handles `epsilon <= 1 - Tr rho Pi_sigma`; `None` means the value is finite and must be searched.
fn boundary_case(
    r: &HermitianOperator,
    s: &HermitianOperator,
    pencil: &PencilDecomposition,
    epsilon: f64,
) -> Result<Option<ExtendedReal>> {
    let leak = pencil.leak;
    if epsilon < leak - BOUNDARY_TOL {
        return Ok(Some(ExtendedReal::INFINITY));
    }
    if epsilon <= leak + BOUNDARY_TOL {
        if !pencil.commutes_with_support {
            return Ok(Some(ExtendedReal::INFINITY));
        }
        let proj = HermitianOperator::outer_sum(&pencil.support_basis);
        let compressed = r.congruence(proj.matrix());
        return Ok(Some(dmax_op(&compressed, s)?));
    }
    Ok(None)
}

/// Smallest lambda (to relative `LAMBDA_RTOL` or better) where `accept(E_lambda)` holds.
/// `accept` must be monotone: false below the threshold, true above.
fn bisect_hockey(
    r: &HermitianOperator,
    s: &HermitianOperator,
    pencil: &PencilDecomposition,
    epsilon: f64,
    accept: impl Fn(f64) -> bool,
) -> Result<f64> {
    let mut hi = pencil.max_ratio().max(1e-300) * (1.0 + 1e-12);
    let mut grow = 0;
    while !accept(hockey_op(r, s, hi)?) {
        hi *= 2.0;
        grow += 1;
        if grow > 2100 || !hi.is_finite() {
            return Err(Error::Numerical(format!("no finite lambda reaches epsilon = {epsilon}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..MAX_BISECTION {
        let mid = if lo == 0.0 { 0.5 * hi } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if accept(hockey_op(r, s, mid)?) {
            hi = mid;
        } else {
            lo = mid;
        }
        if lo > 0.0 && hi - lo <= 1e-3 * LAMBDA_RTOL * hi {
            break;
        }
        if hi < 1e-300 {
            return Ok(0.0);
        }
    }
    Ok(if lo > 0.0 { 0.5 * (lo + hi) } else { hi })
}

/// The same quantity from the dual side: `log2 sup_W (Tr W rho - epsilon) / Tr W sigma`
/// over `0 <= W <= I`. Each candidate is the ratio achieved by an explicit projector.
pub fn dtilde_max_dual(rho: &State, sigma: &State, epsilon: f64) -> Result<ExtendedReal> {
    check_pair(rho, sigma)?;
    check_unit("epsilon", epsilon)?;
    let (r, s) = (rho.op(), sigma.op());
    if epsilon >= 1.0 {
        return Ok(ExtendedReal::NEG_INFINITY);
    }
    let pencil = PencilDecomposition::new(r, s)?;
    if let Some(v) = boundary_case(r, s, &pencil, epsilon)? {
        return Ok(v);
    }
    // largest t with max_W Tr W (rho - t sigma) >= epsilon
    let t_hi = bisect_hockey(r, s, &pencil, epsilon, |e| e < epsilon)?;
    let mut best = 0.0f64;
    let mut t = t_hi * (1.0 - 1e-9);
    for _ in 0..50 {
        let e = (r - &s.scale(t)).eig()?;
        let w = e.columns_where(|l| l > 0.0);
        let wp = HermitianOperator::outer_sum(&w);
        let num = r.trace_with(&wp) - epsilon;
        let den = s.trace_with(&wp);
        if !(den > 0.0) || num <= 0.0 {
            break;
        }
        let ratio = num / den;
        if ratio <= best * (1.0 + 1e-15) {
            break;
        }
        best = ratio;
        t = ratio;
    }
    Ok(ExtendedReal::log2(best))
}

/// `D_H^epsilon(rho||sigma) = -log2 min { Tr M sigma : 0 <= M <= I, Tr M rho >= 1 - epsilon }`.
pub fn dh(rho: &State, sigma: &State, epsilon: f64) -> Result<ExtendedReal> {
    check_pair(rho, sigma)?;
    check_unit("epsilon", epsilon)?;
    let (r, s) = (rho.op(), sigma.op());
    let a = 1.0 - epsilon;
    if a <= 0.0 {
        return Ok(ExtendedReal::INFINITY);
    }
    let pencil = PencilDecomposition::new(r, s)?;
    if pencil.leak >= a - BOUNDARY_TOL {
        return Ok(ExtendedReal::INFINITY);
    }
    let beta = match &pencil.atoms {
        Some(atoms) => neyman_pearson_classical(atoms, a),
        None => neyman_pearson_dual(r, s, a)?,
    };
    if !(beta > 0.0) {
        return Err(Error::Numerical(format!("type-II error {beta:e} is not positive")));
    }
    Ok(ExtendedReal::new(-beta.log2()))
}

/// Greedy likelihood-ratio test on a joint spectrum, randomised on the boundary atom.
fn neyman_pearson_classical(atoms: &[(f64, f64)], a: f64) -> f64 {
    let mut order: Vec<&(f64, f64)> = atoms.iter().filter(|(p, _)| *p > 0.0).collect();
    // decreasing p/q, atoms with q = 0 first
    order.sort_by(|x, y| (y.0 * x.1).total_cmp(&(x.0 * y.1)));
    let mut mass = 0.0;
    let mut beta = 0.0;
    for &(p, q) in order {
        if mass + p >= a {
            beta += q * (a - mass) / p;
            return beta;
        }
        mass += p;
        beta += q;
    }
    beta
}

/// `max_{t >= 0} t a - Tr (t rho - sigma)_+`, the Lagrange dual of the testing problem.
fn neyman_pearson_dual(r: &HermitianOperator, s: &HermitianOperator, a: f64) -> Result<f64> {
    let g = |t: f64| -> Result<(f64, f64)> {
        let e = (&r.scale(t) - s).eig()?;
        let plus: f64 = e.values.iter().filter(|&&l| l > 0.0).sum();
        let w = e.columns_where(|l| l > 0.0);
        let mass = r.trace_with(&HermitianOperator::outer_sum(&w));
        Ok((t * a - plus, mass))
    };
    let mut hi = 1.0;
    let mut grow = 0;
    while g(hi)?.1 < a {
        hi *= 2.0;
        grow += 1;
        if grow > 2000 {
            return Err(Error::Numerical("testing dual did not bracket".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..MAX_BISECTION {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)?.1 < a {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    let best = [lo, 0.5 * (lo + hi), hi]
        .iter()
        .map(|&t| g(t).map(|x| x.0))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best)
}

/// `log2 sup { gamma : Tr rho {rho <= gamma sigma} <= epsilon }`.
pub fn dspec(rho: &State, sigma: &State, epsilon: f64) -> Result<ExtendedReal> {
    check_pair(rho, sigma)?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::domain(format!("epsilon = {epsilon} outside [0, 1)")));
    }
    let (r, s) = (rho.op(), sigma.op());
    let pencil = PencilDecomposition::new(r, s)?;
    if let Some(atoms) = &pencil.atoms {
        return Ok(dspec_classical(atoms, epsilon));
    }
    let inside = 1.0 - pencil.leak;
    if inside <= epsilon + BOUNDARY_TOL {
        return Ok(ExtendedReal::INFINITY);
    }
    let f = |gamma: f64| -> Result<f64> {
        let e = (&s.scale(gamma) - r).eig()?;
        let q = e.columns_where(|l| l >= 0.0);
        Ok(r.trace_with(&HermitianOperator::outer_sum(&q)))
    };
    // above gamma_max the mass is already saturated
    let mut gamma_max = pencil.max_ratio().max(1e-300) * 2.0;
    if !pencil.support_contained() {
        let mut stable = 0;
        while stable < 8 {
            gamma_max *= 4.0;
            if f(gamma_max)? > epsilon {
                stable += 1;
            } else {
                stable = 0;
            }
            if gamma_max > 1e300 {
                return Ok(ExtendedReal::INFINITY);
            }
        }
    }
    let mut gamma_min = gamma_max * 2f64.powi(-60);
    while f(gamma_min)? > epsilon {
        gamma_min *= 2f64.powi(-30);
        if gamma_min < 1e-300 {
            return Ok(ExtendedReal::NEG_INFINITY);
        }
    }
    const GRID: usize = 400;
    let ratio = (gamma_max / gamma_min).powf(1.0 / GRID as f64);
    let mut last_ok = gamma_min;
    let mut g = gamma_min;
    for _ in 0..GRID {
        g *= ratio;
        if f(g)? <= epsilon {
            last_ok = g;
        }
    }
    let (mut lo, mut hi) = (last_ok, last_ok * ratio);
    for _ in 0..MAX_BISECTION {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * hi {
            break;
        }
        if f(mid)? <= epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ExtendedReal::log2(0.5 * (lo + hi)))
}

fn dspec_classical(atoms: &[(f64, f64)], epsilon: f64) -> ExtendedReal {
    // {rho <= gamma sigma} contains the atoms with p <= gamma q
    let mut finite: Vec<(f64, f64)> = atoms
        .iter()
        .filter(|(p, q)| *q > 0.0 && *p > 0.0)
        .map(|&(p, q)| (p / q, p))
        .collect();
    finite.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut mass = 0.0;
    let mut i = 0;
    while i < finite.len() {
        let r = finite[i].0;
        while i < finite.len() && finite[i].0 == r {
            mass += finite[i].1;
            i += 1;
        }
        if mass > epsilon {
            return ExtendedReal::log2(r);
        }
    }
    ExtendedReal::INFINITY
}

/// Which Renyi family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenyiKind {
    Petz,
    Sandwiched,
}

/// Petz `(1/(a-1)) log2 Tr rho^a sigma^(1-a)` or sandwiched
/// `(1/(a-1)) log2 Tr (sigma^((1-a)/2a) rho sigma^((1-a)/2a))^a`.
pub fn renyi(rho: &State, sigma: &State, alpha: f64, kind: RenyiKind) -> Result<ExtendedReal> {
    check_pair(rho, sigma)?;
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::domain(format!("Renyi order {alpha} must be positive, finite and not 1")));
    }
    let (r, s) = (rho.op(), sigma.op());
    if alpha > 1.0 {
        let pencil = PencilDecomposition::new(r, s)?;
        if !pencil.support_contained() {
            return Ok(ExtendedReal::INFINITY);
        }
    } else if r.trace_with(s) <= ORTHOGONAL_TOL {
        return Ok(ExtendedReal::INFINITY);
    }
    let er = r.eig()?;
    let cut = er.cutoff(SUPPORT_RTOL);
    let q = match kind {
        RenyiKind::Petz => {
            let ra = er.map(|l| if l > cut { l.powf(alpha) } else { 0.0 });
            let sb = power_on_support(s, 1.0 - alpha, SUPPORT_RTOL)?;
            ra.trace_with(&sb)
        }
        RenyiKind::Sandwiched => {
            // eigenvalues of s^p r s^p are the squared singular values of
            // diag(sqrt r) W^dagger V diag(s^p), which can span many decades
            let es = s.eig()?;
            let scut = es.cutoff(SUPPORT_RTOL);
            let p = (1.0 - alpha) / (2.0 * alpha);
            let rv: Vec<f64> = er.values.iter().copied().filter(|&l| l > cut).collect();
            let sv: Vec<f64> = es.values.iter().copied().filter(|&l| l > scut).collect();
            let mut g = er.columns_where(|l| l > cut).adjoint() * es.columns_where(|l| l > scut);
            for (i, mut row) in g.row_iter_mut().enumerate() {
                row *= c(rv[i].sqrt());
            }
            for (j, mut col) in g.column_iter_mut().enumerate() {
                col *= c(sv[j].powf(p));
            }
            graded_singular_values(&g)?.iter().map(|&x| x.powf(2.0 * alpha)).sum()
        }
    };
    if !(q > 0.0) {
        return Ok(if alpha < 1.0 { ExtendedReal::INFINITY } else { ExtendedReal::NEG_INFINITY });
    }
    Ok(ExtendedReal::new(bits(q.ln() / (alpha - 1.0))))
}

/// `(sqrt(p q) + sqrt((1-p)(1-q)))^2`.
pub fn binary_fidelity(p: f64, q: f64) -> Result<f64> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    Ok(((p * q).sqrt() + ((1.0 - p) * (1.0 - q)).sqrt()).powi(2))
}

/// Closed forms for two pure states with overlap `f = |<psi1|psi2>|^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PureClosedForms {
    pub dtilde_max: ExtendedReal,
    pub dh: ExtendedReal,
}

pub fn pure_closed_forms(f: f64, epsilon: f64) -> Result<PureClosedForms> {
    check_unit("overlap", f)?;
    check_unit("epsilon", epsilon)?;
    let dtilde_max = if epsilon > 1.0 - f {
        ExtendedReal::log2(epsilon * (1.0 - epsilon) / (f - (1.0 - epsilon)))
    } else {
        ExtendedReal::INFINITY
    };
    let dh = if epsilon < f {
        ExtendedReal::new(-(1.0 - binary_fidelity(epsilon, f)?).log2())
    } else {
        ExtendedReal::INFINITY
    };
    Ok(PureClosedForms { dtilde_max, dh })
}

/// Measured relative entropy `sup_M Tr M rho log2(Tr M rho / Tr M sigma)`.
///
/// The optimal two-outcome test lies on the Neyman-Pearson frontier, so this
/// maximises `a (log2 a + D_H^{1-a})` over the accepted mass `a`.
pub fn dobs(rho: &State, sigma: &State) -> Result<ExtendedReal> {
    check_pair(rho, sigma)?;
    let pencil = PencilDecomposition::new(rho.op(), sigma.op())?;
    if !pencil.support_contained() {
        return Ok(ExtendedReal::INFINITY);
    }
    let obj = |a: f64| -> Result<f64> {
        let d = dh(rho, sigma, 1.0 - a)?;
        Ok(a * (a.log2() + d.value()))
    };
    const GRID: usize = 64;
    let pts: Vec<f64> = (1..=GRID).map(|k| k as f64 / GRID as f64).collect();
    let vals = pts.iter().map(|&a| obj(a)).collect::<Result<Vec<_>>>()?;
    let (mut k, mut best) = (0, f64::NEG_INFINITY);
    for (i, &v) in vals.iter().enumerate() {
        if v > best {
            best = v;
            k = i;
        }
    }
    let lo = if k == 0 { 1e-9 } else { pts[k - 1] };
    let hi = if k + 1 < GRID { pts[k + 1] } else { 1.0 };
    let (_, v) = golden_max(lo, hi, 80, |a| obj(a))?;
    Ok(ExtendedReal::new(v.max(best).max(0.0)))
}

/// Golden-section maximisation of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_max(
    mut lo: f64,
    mut hi: f64,
    iters: usize,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..iters {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// `D_max(rho||sigma) + D_max(sigma||rho)`.
pub fn hilbert_metric(rho: &State, sigma: &State) -> Result<ExtendedReal> {
    let a = dmax(rho, sigma)?;
    let b = dmax(sigma, rho)?;
    Ok(ExtendedReal::new(a.value() + b.value()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{CVec, State};
    use num_complex::Complex64 as C64;

    fn classical(p: &[f64]) -> State {
        State::classical(p).unwrap()
    }

    fn qubit(theta: f64) -> State {
        State::pure(&CVec::from_vec(vec![c(theta.cos()), c(theta.sin())])).unwrap()
    }

    #[test]
    fn dtilde_of_identical_states() {
        let r = classical(&[0.3, 0.7]);
        let v = dtilde_max(&r, &r, 0.25).unwrap();
        assert!((v.value() - 0.75f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn dtilde_orthogonal_pure_is_infinite() {
        let a = qubit(0.0);
        let b = qubit(std::f64::consts::FRAC_PI_2);
        assert!(dtilde_max(&a, &b, 0.5).unwrap().is_pos_infinite());
    }

    #[test]
    fn dh_identical_states() {
        let r = classical(&[0.3, 0.7]);
        let v = dh(&r, &r, 0.2).unwrap();
        assert!((v.value() - (1.0f64 / 0.8).log2()).abs() < 1e-12);
    }

    #[test]
    fn dspec_of_identical_states() {
        let r = classical(&[0.3, 0.7]);
        assert!(dspec(&r, &r, 0.4).unwrap().value().abs() < 1e-12);
    }

    #[test]
    fn dspec_classical_breakpoint() {
        let p = classical(&[0.75, 0.25]);
        let q = classical(&[0.5, 0.5]);
        // only atoms with ratio <= gamma enter; the ratio-1/2 atom alone carries mass 1/4 > 0.2
        assert!((dspec(&p, &q, 0.2).unwrap().value() + 1.0).abs() < 1e-12);
        assert!((dspec(&p, &q, 0.3).unwrap().value() - 1.5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn dmax_infinite_on_support_mismatch() {
        let p = classical(&[0.5, 0.5]);
        let q = classical(&[1.0, 0.0]);
        assert!(dmax(&p, &q).unwrap().is_pos_infinite());
        assert!((dmax(&q, &p).unwrap().value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn renyi_rejects_order_one() {
        let p = classical(&[0.5, 0.5]);
        assert!(matches!(renyi(&p, &p, 1.0, RenyiKind::Petz), Err(Error::Domain(_))));
    }

    #[test]
    fn renyi_orthogonal_below_one_is_infinite() {
        let a = classical(&[1.0, 0.0]);
        let b = classical(&[0.0, 1.0]);
        assert!(renyi(&a, &b, 0.5, RenyiKind::Petz).unwrap().is_pos_infinite());
    }

    #[test]
    fn extended_real_json() {
        let s = serde_json::to_string(&ExtendedReal::INFINITY).unwrap();
        assert_eq!(s, "\"inf\"");
        let back: ExtendedReal = serde_json::from_str(&s).unwrap();
        assert!(back.is_pos_infinite());
        let x: ExtendedReal = serde_json::from_str("1.5").unwrap();
        assert_eq!(x.value(), 1.5);
    }

    #[test]
    fn pencil_atoms_for_diagonal() {
        let p = classical(&[0.2, 0.8]);
        let q = classical(&[0.6, 0.4]);
        let pen = PencilDecomposition::new(p.op(), q.op()).unwrap();
        let mut atoms = pen.atoms.unwrap();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((atoms[0].0 - 0.2).abs() < 1e-14 && (atoms[0].1 - 0.6).abs() < 1e-14);
        let _ = C64::new(0.0, 0.0);
    }
}
