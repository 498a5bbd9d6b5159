//! Dense Hermitian linear algebra on density operators.
//!
//! Every operator is stored as a complex `DMatrix`. Hermiticity is enforced at
//! construction by symmetrisation, so downstream code can rely on it.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Tolerance on `|X - X^dagger|` after symmetrisation.
pub const HERM_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as non-negative.
pub const PSD_TOL: f64 = 1e-10;
/// Tolerance on unit trace.
pub const TRACE_TOL: f64 = 1e-10;
/// Relative eigenvalue cutoff defining the support of an operator.
pub const SUPPORT_RTOL: f64 = 1e-10;
/// Largest dimension accepted by tensor products.
pub const DIM_CAP: usize = 4096;

/// Tolerances used by state validation, overridable at call sites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm: f64,
    pub psd: f64,
    pub trace: f64,
    pub support: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { herm: HERM_TOL, psd: PSD_TOL, trace: TRACE_TOL, support: SUPPORT_RTOL }
    }
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A Hermitian operator on a finite-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    m: CMat,
}

impl HermitianOperator {
    /// Symmetrises `(m + m^dagger) / 2`. Fails on non-square, empty or non-finite input.
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidState("empty matrix".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Like [`new`](Self::new) but rejects input whose anti-Hermitian part exceeds `tol`
    /// relative to its norm.
    pub fn new_checked(m: CMat, tol: f64) -> Result<Self> {
        if m.nrows() == m.ncols() {
            let dev = (&m - m.adjoint()).norm();
            if dev > tol * (1.0 + m.norm()) {
                return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:e})")));
            }
        }
        Self::new(m)
    }

    pub(crate) fn from_matrix_unchecked(m: CMat) -> Self {
        let h = (&m + m.adjoint()) * c(0.5);
        HermitianOperator { m: h }
    }

    pub fn zeros(n: usize) -> Self {
        HermitianOperator { m: CMat::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        HermitianOperator { m: CMat::identity(n, n) }
    }

    pub fn diag(d: &[f64]) -> Self {
        let v = DVector::from_iterator(d.len(), d.iter().map(|&x| c(x)));
        HermitianOperator { m: CMat::from_diagonal(&v) }
    }

    /// The rank-one operator `|v><v|` (not normalised).
    pub fn outer(v: &CVec) -> Self {
        HermitianOperator::from_matrix_unchecked(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    /// `Re Tr(self * other)`, exact for Hermitian arguments.
    pub fn trace_with(&self, other: &HermitianOperator) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self.m[(i, j)] * other.m[(j, i)]).re;
            }
        }
        s
    }

    pub fn scale(&self, a: f64) -> Self {
        HermitianOperator { m: &self.m * c(a) }
    }

    /// `g self g^dagger`.
    pub fn congruence(&self, g: &CMat) -> Self {
        HermitianOperator::from_matrix_unchecked(g * &self.m * g.adjoint())
    }

    pub fn kron(&self, other: &HermitianOperator) -> Self {
        HermitianOperator { m: self.m.kronecker(&other.m) }
    }

    pub fn eig(&self) -> Result<SpectralDecomposition> {
        eig_hermitian(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eig()?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*self.eig()?.values.last().unwrap())
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.values[0])
    }

    /// Frobenius norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &HermitianOperator) -> f64 {
        let ab = &self.m * &other.m;
        (&ab - ab.adjoint()).norm()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.m[(i, j)].norm() <= tol))
    }

    pub fn diagonal_real(&self) -> Vec<f64> {
        self.m.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { m: &self.m + &rhs.m }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { m: &self.m - &rhs.m }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scale(rhs)
    }
}

/// Eigendecomposition with eigenvalues sorted in decreasing order.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, in the order of `values`.
    pub vectors: CMat,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `sum_i f(lambda_i) |v_i><v_i|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            let fl = c(f(l));
            for i in 0..n {
                scaled[(i, j)] *= fl;
            }
        }
        HermitianOperator::from_matrix_unchecked(&scaled * self.vectors.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        self.map(|l| l)
    }

    /// Columns whose eigenvalue satisfies `keep`.
    pub fn columns_where(&self, keep: impl Fn(f64) -> bool) -> CMat {
        let idx: Vec<usize> = (0..self.dim()).filter(|&i| keep(self.values[i])).collect();
        let mut out = CMat::zeros(self.dim(), idx.len());
        for (k, &i) in idx.iter().enumerate() {
            out.set_column(k, &self.vectors.column(i));
        }
        out
    }

    /// Support cutoff `rtol * max |lambda|`.
    pub fn cutoff(&self, rtol: f64) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        rtol * scale.max(f64::MIN_POSITIVE)
    }
}

pub fn eig_hermitian(a: &HermitianOperator) -> Result<SpectralDecomposition> {
    let n = a.dim();
    let eig = SymmetricEigen::try_new(a.m.clone(), f64::EPSILON, 1000 * n.max(10))
        .ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    let mut vectors = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(SpectralDecomposition { values, vectors })
}

/// `Tr A_+`.
pub fn positive_part_trace(a: &HermitianOperator) -> Result<f64> {
    Ok(a.eigenvalues()?.iter().filter(|&&l| l > 0.0).sum())
}

/// `(1/2) ||rho - sigma||_1`.
pub fn trace_distance(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    Ok(0.5 * (rho - sigma).eigenvalues()?.iter().map(|l| l.abs()).sum::<f64>())
}

/// `(1/2) ||rho - sigma||_1 + (1/2) |Tr rho - Tr sigma|`.
pub fn generalized_trace_distance(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    Ok(trace_distance(rho, sigma)? + 0.5 * (rho.trace() - sigma.trace()).abs())
}

/// `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2` for positive semidefinite arguments.
pub fn fidelity(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    // nuclear norm of sqrt(rho) sqrt(sigma); eigenvalue noise near zero only enters at second order
    let prod = sqrt_psd(rho)?.matrix() * sqrt_psd(sigma)?.matrix();
    let svd = nalgebra::linalg::SVD::try_new(prod, false, false, f64::EPSILON, 1000 * rho.dim().max(10))
        .ok_or(Error::ConvergenceFailure)?;
    let s: f64 = svd.singular_values.iter().sum();
    Ok(s * s)
}

/// Fidelity extended to subnormalised arguments.
pub fn generalized_fidelity(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    let f = fidelity(rho, sigma)?.sqrt();
    let tail = ((1.0 - rho.trace()).max(0.0) * (1.0 - sigma.trace()).max(0.0)).sqrt();
    Ok((f + tail).powi(2))
}

/// `sqrt(1 - F_*)` with the generalised fidelity.
pub fn purified_distance(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    Ok((1.0 - generalized_fidelity(rho, sigma)?).max(0.0).sqrt())
}

/// Projector onto the span of eigenvectors with eigenvalue above `rtol * max |lambda|`,
/// together with an orthonormal basis of that span (one vector per column).
pub fn support_projector(a: &HermitianOperator, rtol: f64) -> Result<(HermitianOperator, CMat)> {
    let e = a.eig()?;
    let cut = e.cutoff(rtol);
    let basis = e.columns_where(|l| l > cut);
    let proj = HermitianOperator::from_matrix_unchecked(&basis * basis.adjoint());
    Ok((proj, basis))
}

/// Moore-Penrose inverse power `A^p` on the support of a positive semidefinite `A`.
pub fn power_on_support(a: &HermitianOperator, p: f64, rtol: f64) -> Result<HermitianOperator> {
    let e = a.eig()?;
    let cut = e.cutoff(rtol);
    Ok(e.map(|l| if l > cut { l.powf(p) } else { 0.0 }))
}

/// Singular values of `g` to high relative accuracy when `g` is a well
/// conditioned matrix scaled by diagonals on either side.
///
/// Column-pivoted QR, then one-sided Jacobi on `R^dagger`.
pub fn graded_singular_values(g: &CMat) -> Result<Vec<f64>> {
    if g.is_empty() {
        return Ok(Vec::new());
    }
    let mut h = g.clone().col_piv_qr().r().adjoint();
    let k = h.ncols();
    for _ in 0..100 {
        let mut rotated = false;
        for i in 0..k {
            for j in i + 1..k {
                let a = h.column(i).norm_squared();
                let b = h.column(j).norm_squared();
                let cij = h.column(i).dotc(&h.column(j));
                let m = cij.norm();
                if m == 0.0 || m <= f64::EPSILON * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * m);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let ph = cij / m;
                for r in 0..h.nrows() {
                    let x = h[(r, i)];
                    let y = h[(r, j)] * ph.conj();
                    h[(r, i)] = x * cs - y * sn;
                    h[(r, j)] = (x * sn + y * cs) * ph;
                }
            }
        }
        if !rotated {
            return Ok((0..k).map(|i| h.column(i).norm()).collect());
        }
    }
    Err(Error::Numerical("one-sided Jacobi did not converge".into()))
}

pub fn sqrt_psd(a: &HermitianOperator) -> Result<HermitianOperator> {
    Ok(a.eig()?.map(|l| l.max(0.0).sqrt()))
}

/// Matrix geometric mean `A # B`.
///
/// When both arguments are singular the mean is taken on `supp(A + B)`; if
/// the compressed arguments are still singular it is the limit of a small
/// identity shift.
pub fn geometric_mean(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let (_, v) = support_projector(&(a + b), SUPPORT_RTOL)?;
    if v.ncols() == 0 {
        return Ok(HermitianOperator::zeros(a.dim()));
    }
    let vd = v.adjoint();
    let ac = a.congruence(&vd);
    let bc = b.congruence(&vd);
    let m = mean_compressed(&ac, &bc)?;
    Ok(m.congruence(&v))
}

fn is_invertible(e: &SpectralDecomposition) -> bool {
    let min = *e.values.last().unwrap();
    min > SUPPORT_RTOL * e.values[0].abs().max(f64::MIN_POSITIVE)
}

fn mean_compressed(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    let ea = a.eig()?;
    if is_invertible(&ea) {
        return mean_formula(&ea, b);
    }
    let eb = b.eig()?;
    if is_invertible(&eb) {
        return mean_formula(&eb, a);
    }
    let shift = 1e-13 * (ea.values[0].abs() + eb.values[0].abs()).max(f64::MIN_POSITIVE);
    let id = HermitianOperator::identity(a.dim()).scale(shift);
    mean_formula(&(a + &id).eig()?, &(b + &id))
}

/// `A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}` for invertible `A` given by its decomposition.
fn mean_formula(ea: &SpectralDecomposition, b: &HermitianOperator) -> Result<HermitianOperator> {
    let half = ea.map(|l| l.sqrt());
    let inv_half = ea.map(|l| 1.0 / l.sqrt());
    let inner = b.congruence(inv_half.matrix());
    let root = sqrt_psd(&inner)?;
    Ok(root.congruence(half.matrix()))
}

/// `A^{(x) n}`.
pub fn tensor_power(a: &HermitianOperator, n: u32) -> Result<HermitianOperator> {
    if n == 0 {
        return Ok(HermitianOperator::identity(1));
    }
    let total = (a.dim() as u128).checked_pow(n).unwrap_or(u128::MAX);
    if total > DIM_CAP as u128 {
        return Err(Error::DimensionCap(total.min(usize::MAX as u128) as usize));
    }
    let mut out = a.clone();
    for _ in 1..n {
        out = out.kron(a);
    }
    Ok(out)
}

/// Tensor product of a list of operators.
pub fn tensor_all(ops: &[HermitianOperator]) -> Result<HermitianOperator> {
    let total: usize = ops.iter().map(|o| o.dim()).product();
    if total > DIM_CAP {
        return Err(Error::DimensionCap(total));
    }
    let mut out = HermitianOperator::identity(1);
    for o in ops {
        out = out.kron(o);
    }
    Ok(out)
}

/// Reduced operator on the subsystems listed in `keep` (in increasing order).
pub fn partial_trace(a: &HermitianOperator, dims: &[usize], keep: &[usize]) -> Result<HermitianOperator> {
    let total: usize = dims.iter().product();
    if total != a.dim() {
        return Err(Error::DimensionMismatch(total, a.dim()));
    }
    if keep.iter().any(|&k| k >= dims.len()) || keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("partial_trace: keep must list distinct subsystems in increasing order"));
    }
    let kept: usize = keep.iter().map(|&k| dims[k]).product();
    let nsys = dims.len();
    let mut strides = vec![1usize; nsys];
    for k in (0..nsys.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut d = vec![0; nsys];
        for k in 0..nsys {
            d[k] = idx / strides[k];
            idx %= strides[k];
        }
        d
    };
    let kept_index = |d: &[usize]| -> usize { keep.iter().fold(0, |acc, &k| acc * dims[k] + d[k]) };
    let mut out = CMat::zeros(kept, kept);
    for i in 0..total {
        let di = digits(i);
        for j in 0..total {
            let dj = digits(j);
            let traced_equal = (0..nsys).all(|k| keep.contains(&k) || di[k] == dj[k]);
            if traced_equal {
                out[(kept_index(&di), kept_index(&dj))] += a.m[(i, j)];
            }
        }
    }
    Ok(HermitianOperator::from_matrix_unchecked(out))
}

/// A density operator: positive semidefinite with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct State(HermitianOperator);

/// A positive semidefinite operator with trace at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct SubState(HermitianOperator);

fn check_psd(op: &HermitianOperator, tol: &Tolerances) -> Result<()> {
    let min = op.min_eigenvalue()?;
    if min < -tol.psd {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

impl State {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        Self::with_tolerances(op, &Tolerances::default())
    }

    pub fn with_tolerances(op: HermitianOperator, tol: &Tolerances) -> Result<Self> {
        check_psd(&op, tol)?;
        let t = op.trace();
        if (t - 1.0).abs() > tol.trace {
            return Err(Error::InvalidState(format!("trace {t} is not one")));
        }
        Ok(State(op))
    }

    pub fn from_matrix(m: CMat) -> Result<Self> {
        Self::new(HermitianOperator::new_checked(m, 1e-9)?)
    }

    /// Diagonal state from a probability vector.
    pub fn classical(p: &[f64]) -> Result<Self> {
        if p.iter().any(|&x| !x.is_finite() || x < -PSD_TOL) {
            return Err(Error::InvalidState("probabilities must be non-negative".into()));
        }
        Self::new(HermitianOperator::diag(p))
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let n2 = psi.norm_squared();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::new(HermitianOperator::outer(psi).scale(1.0 / n2))
    }

    /// Normalises a positive semidefinite operator. Fails on zero trace.
    pub fn normalize(op: &HermitianOperator) -> Result<Self> {
        let t = op.trace();
        if !(t > 0.0) {
            return Err(Error::InvalidState("cannot normalise an operator of zero trace".into()));
        }
        Self::new(op.scale(1.0 / t))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        State(HermitianOperator::identity(n).scale(1.0 / n as f64))
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn into_op(self) -> HermitianOperator {
        self.0
    }
}

impl SubState {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tol = Tolerances::default();
        check_psd(&op, &tol)?;
        let t = op.trace();
        if t > 1.0 + tol.trace {
            return Err(Error::InvalidState(format!("trace {t} exceeds one")));
        }
        Ok(SubState(op))
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl From<State> for SubState {
    fn from(s: State) -> SubState {
        SubState(s.0)
    }
}

impl AsRef<HermitianOperator> for State {
    fn as_ref(&self) -> &HermitianOperator {
        &self.0
    }
}

impl AsRef<HermitianOperator> for SubState {
    fn as_ref(&self) -> &HermitianOperator {
        &self.0
    }
}

/// Random state ensembles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// Haar-random pure states.
    HaarPure,
    /// Hilbert-Schmidt random mixed states `G G^dagger / Tr G G^dagger`.
    HsMixed,
    /// Diagonal states with flat-Dirichlet spectrum.
    ClassicalDirichlet,
}

impl std::str::FromStr for Ensemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar_pure" | "pure" => Ok(Ensemble::HaarPure),
            "hs_mixed" | "mixed" => Ok(Ensemble::HsMixed),
            "classical_dirichlet" | "classical" => Ok(Ensemble::ClassicalDirichlet),
            _ => Err(Error::Parse(format!("unknown ensemble '{s}'"))),
        }
    }
}

impl std::fmt::Display for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ensemble::HaarPure => "haar_pure",
            Ensemble::HsMixed => "hs_mixed",
            Ensemble::ClassicalDirichlet => "classical_dirichlet",
        })
    }
}

pub const SAMPLE_DIM_MIN: usize = 2;
pub const SAMPLE_DIM_MAX: usize = 16;

pub fn sample_state<R: Rng + ?Sized>(kind: Ensemble, dim: usize, rng: &mut R) -> Result<State> {
    if !(SAMPLE_DIM_MIN..=SAMPLE_DIM_MAX).contains(&dim) {
        return Err(Error::domain(format!("sample dimension {dim} outside 2..=16")));
    }
    let mut gauss = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    match kind {
        Ensemble::HaarPure => {
            let v = CVec::from_fn(dim, |_, _| gauss());
            State::pure(&v)
        }
        Ensemble::HsMixed => {
            let g = CMat::from_fn(dim, dim, |_, _| gauss());
            State::normalize(&HermitianOperator::from_matrix_unchecked(&g * g.adjoint()))
        }
        Ensemble::ClassicalDirichlet => {
            let w: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let s: f64 = w.iter().sum();
            State::classical(&w.iter().map(|x| x / s).collect::<Vec<_>>())
        }
    }
}

/// Derives the seed of the `index`-th sample from a master seed.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Samples an independent pair `(rho, sigma)` from the sub-seed.
pub fn sample_pair(kind: Ensemble, dim: usize, seed: u64) -> Result<(State, State)> {
    let mut rng = rng_from_seed(seed);
    let rho = sample_state(kind, dim, &mut rng)?;
    let sigma = sample_state(kind, dim, &mut rng)?;
    Ok((rho, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pure2(a: f64, b: C64) -> State {
        State::pure(&CVec::from_vec(vec![c(a), b])).unwrap()
    }

    #[test]
    fn symmetrises_on_construction() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0), C64::new(0.0, 1.0), c(0.0), c(2.0)]);
        let h = HermitianOperator::new(m).unwrap();
        assert_eq!(h.matrix()[(0, 1)], C64::new(0.0, 0.5));
        assert_eq!(h.matrix()[(1, 0)], C64::new(0.0, -0.5));
    }

    #[test]
    fn eig_sorted_and_reconstructs() {
        let h = HermitianOperator::diag(&[0.2, 0.7, 0.1]);
        let e = h.eig().unwrap();
        assert_eq!(e.values.len(), 3);
        assert!((e.values[0] - 0.7).abs() < 1e-15 && (e.values[2] - 0.1).abs() < 1e-15);
        assert!((&e.reconstruct() - &h).frobenius_norm() < 1e-14);
    }

    #[test]
    fn fidelity_of_pure_states_is_overlap() {
        let a = pure2(1.0, c(0.0));
        let b = pure2(1.0, c(1.0));
        assert!((fidelity(a.op(), b.op()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn geometric_mean_of_commuting() {
        let a = HermitianOperator::diag(&[4.0, 1.0]);
        let b = HermitianOperator::diag(&[1.0, 9.0]);
        let g = geometric_mean(&a, &b).unwrap();
        assert!((&g - &HermitianOperator::diag(&[2.0, 3.0])).frobenius_norm() < 1e-12);
    }

    #[test]
    fn geometric_mean_singular_commuting() {
        let a = HermitianOperator::diag(&[1.0, 0.0, 0.0]);
        let b = HermitianOperator::diag(&[4.0, 5.0, 0.0]);
        let g = geometric_mean(&a, &b).unwrap();
        assert!((&g - &HermitianOperator::diag(&[2.0, 0.0, 0.0])).frobenius_norm() < 1e-6);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = HermitianOperator::diag(&[0.3, 0.7]);
        let b = HermitianOperator::diag(&[0.1, 0.2, 0.7]);
        let ab = a.kron(&b);
        let ra = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        let rb = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        assert!((&ra - &a).frobenius_norm() < 1e-15);
        assert!((&rb - &b).frobenius_norm() < 1e-15);
    }

    #[test]
    fn tensor_power_cap() {
        let a = HermitianOperator::identity(2);
        assert!(tensor_power(&a, 12).is_ok());
        assert!(matches!(tensor_power(&a, 13), Err(Error::DimensionCap(_))));
    }

    #[test]
    fn sample_states_valid_and_reproducible() {
        for kind in [Ensemble::HaarPure, Ensemble::HsMixed, Ensemble::ClassicalDirichlet] {
            let (r1, _) = sample_pair(kind, 4, 11).unwrap();
            let (r2, _) = sample_pair(kind, 4, 11).unwrap();
            assert_eq!(r1, r2);
            assert!((r1.op().trace() - 1.0).abs() < 1e-12);
        }
        let mut rng = rng_from_seed(0);
        assert!(sample_state(Ensemble::HsMixed, 17, &mut rng).is_err());
    }

    #[test]
    fn rejects_invalid_states() {
        assert!(State::classical(&[0.5, 0.6]).is_err());
        assert!(State::classical(&[1.5, -0.5]).is_err());
        let m = CMat::from_row_slice(2, 2, &[c(0.5), c(1.0), c(0.0), c(0.5)]);
        assert!(State::from_matrix(m).is_err());
    }
}
