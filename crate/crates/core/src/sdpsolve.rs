//! Dense primal-dual interior-point solver over products of complex Hermitian
//! PSD cones and non-negative scalars, and the smoothing programs built on it.
//!
//! Standard form: minimise `<C, X>` subject to `A_i(X) = b_i`, `X` in the cone,
//! with `<A, X> = Re Tr(A X)`. Search directions are HKM with a Mehrotra
//! predictor-corrector; the start is infeasible and identity-scaled.

use crate::divergences::{
    dmax, dtilde_max, ExtendedReal, Metric, Normalisation, PencilDecomposition, SmoothingSpec,
    BOUNDARY_TOL, LEAK_TOL,
};
use crate::error::{Error, Result};
use crate::matcore::{c, CMat, HermitianOperator, State, SUPPORT_RTOL};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

/// Error level at which the best iterate is still reported as optimal when
/// the target tolerance is not reached.
pub const ACCEPT_TOL: f64 = 1e-7;

/// Largest total block dimension accepted by [`solve`].
pub const MAX_TOTAL_DIM: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    Psd(usize),
    Nonneg,
}

/// Handle to a Hermitian PSD block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PsdVar(usize);

/// Handle to a non-negative scalar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalarVar(usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

type Entries = Vec<(usize, usize, C64)>;

/// A real linear functional `sum_b Re Tr(A_b X_b)`; each `A_b` is Hermitian and stored sparsely.
#[derive(Clone, Debug, Default)]
pub struct Affine {
    terms: Vec<(usize, Entries)>,
}

impl Affine {
    pub fn new() -> Self {
        Affine::default()
    }

    /// Adds `Re Tr(h X)` for Hermitian `h`.
    pub fn trace(mut self, v: PsdVar, h: &CMat) -> Self {
        let mut e = Vec::new();
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                if h[(i, j)] != C64::new(0.0, 0.0) {
                    e.push((i, j, h[(i, j)]));
                }
            }
        }
        self.terms.push((v.0, e));
        self
    }

    /// Adds `s Re Tr X`.
    pub fn trace_identity(mut self, v: PsdVar, n: usize, s: f64) -> Self {
        self.terms.push((v.0, (0..n).map(|i| (i, i, c(s))).collect()));
        self
    }

    pub fn scalar(mut self, v: ScalarVar, a: f64) -> Self {
        self.terms.push((v.0, vec![(0, 0, c(a))]));
        self
    }

    fn raw(mut self, block: usize, e: Entries) -> Self {
        if !e.is_empty() {
            self.terms.push((block, e));
        }
        self
    }
}

/// A term of a matrix-valued affine expression.
pub enum MatTerm<'a> {
    /// `s X`.
    Var(PsdVar, f64),
    /// `s V X V^dagger`.
    Congruence(PsdVar, &'a CMat, f64),
    /// `x H` for a scalar variable and fixed Hermitian `H`.
    Scaled(ScalarVar, &'a CMat),
}

/// Linear program over PSD blocks and scalars.
#[derive(Clone, Debug, Default)]
pub struct ConeProgram {
    cones: Vec<Cone>,
    objective: Affine,
    constraints: Vec<(Affine, Relation, f64)>,
}

impl ConeProgram {
    pub fn new() -> Self {
        ConeProgram::default()
    }

    pub fn psd(&mut self, n: usize) -> PsdVar {
        self.cones.push(Cone::Psd(n));
        PsdVar(self.cones.len() - 1)
    }

    pub fn scalar(&mut self) -> ScalarVar {
        self.cones.push(Cone::Nonneg);
        ScalarVar(self.cones.len() - 1)
    }

    pub fn minimize(&mut self, f: Affine) {
        self.objective = f;
    }

    pub fn constrain(&mut self, f: Affine, rel: Relation, rhs: f64) {
        self.constraints.push((f, rel, rhs));
    }

    /// `sum terms (rel) rhs` in the Loewner order; inequalities get a PSD slack block.
    pub fn matrix_constraint(&mut self, terms: &[MatTerm<'_>], rel: Relation, rhs: &CMat) {
        let n = rhs.nrows();
        let slack = match rel {
            Relation::Eq => None,
            Relation::Le => Some((self.psd(n), 1.0)),
            Relation::Ge => Some((self.psd(n), -1.0)),
        };
        for j in 0..n {
            for k in j..n {
                for imag in [false, true] {
                    if imag && j == k {
                        continue;
                    }
                    let mut f = Affine::new();
                    for t in terms {
                        f = match *t {
                            MatTerm::Var(v, s) => f.raw(v.0, entry_coef(j, k, imag, s)),
                            MatTerm::Congruence(v, m, s) => f.raw(v.0, congruence_coef(m, j, k, imag, s)),
                            MatTerm::Scaled(x, h) => {
                                let a = if imag { h[(j, k)].im } else { h[(j, k)].re };
                                if a != 0.0 {
                                    f.scalar(x, a)
                                } else {
                                    f
                                }
                            }
                        };
                    }
                    if let Some((w, s)) = slack {
                        f = f.raw(w.0, entry_coef(j, k, imag, s));
                    }
                    let r = if imag { rhs[(j, k)].im } else { rhs[(j, k)].re };
                    self.constrain(f, Relation::Eq, r);
                }
            }
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }
}

/// Coefficient `A` with `Re Tr(A X) = s Re X_jk` (or `s Im X_jk`).
fn entry_coef(j: usize, k: usize, imag: bool, s: f64) -> Entries {
    if j == k {
        return vec![(j, j, c(s))];
    }
    if imag {
        vec![(j, k, C64::new(0.0, 0.5 * s)), (k, j, C64::new(0.0, -0.5 * s))]
    } else {
        vec![(j, k, c(0.5 * s)), (k, j, c(0.5 * s))]
    }
}

/// Coefficient for entry `(j, k)` of `s V X V^dagger`.
fn congruence_coef(v: &CMat, j: usize, k: usize, imag: bool, s: f64) -> Entries {
    let r = v.ncols();
    let mut e = Vec::new();
    for q in 0..r {
        for p in 0..r {
            // B_qp = conj(V_kq) V_jp
            let b = v[(k, q)].conj() * v[(j, p)];
            let bt = v[(k, p)] * v[(j, q)].conj();
            let a = if imag { (b - bt) * C64::new(0.0, -0.5) } else { (b + bt) * 0.5 };
            let a = a * s;
            if a.norm() > 1e-300 {
                e.push((q, p, a));
            }
        }
    }
    e
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
    /// Multiplier on the default starting point.
    pub start_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 120, step_fraction: 0.98, start_scale: 1.0 }
    }
}

#[derive(Clone, Debug)]
pub enum BlockValue {
    Psd(CMat),
    Scalar(f64),
}

#[derive(Clone, Debug)]
pub struct ConeSolution {
    pub status: Status,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|p - d| / (1 + |p| + |d|)`.
    pub gap: f64,
    /// Largest of the relative primal and dual infeasibilities.
    pub residual: f64,
    pub iterations: usize,
    pub blocks: Vec<BlockValue>,
    pub multipliers: Vec<f64>,
}

impl ConeSolution {
    pub fn psd(&self, v: PsdVar) -> &CMat {
        match &self.blocks[v.0] {
            BlockValue::Psd(m) => m,
            BlockValue::Scalar(_) => unreachable!("handle refers to a PSD block"),
        }
    }

    pub fn scalar(&self, v: ScalarVar) -> f64 {
        match &self.blocks[v.0] {
            BlockValue::Scalar(x) => *x,
            BlockValue::Psd(_) => unreachable!("handle refers to a scalar block"),
        }
    }

    pub fn value(&self) -> f64 {
        0.5 * (self.primal_objective + self.dual_objective)
    }
}

// ---------------------------------------------------------------------------
// solver internals

#[derive(Clone, Debug)]
enum Blk {
    P(CMat),
    N(f64),
}

struct Std {
    cones: Vec<Cone>,
    rows: Vec<Vec<(usize, Entries)>>,
    b: DVector<f64>,
    c: Vec<Blk>,
    /// block -> (row, index into rows[row])
    by_block: Vec<Vec<(usize, usize)>>,
    nu: f64,
}

fn merge(terms: &[(usize, Entries)]) -> Vec<(usize, Entries)> {
    let mut out: Vec<(usize, Entries)> = Vec::new();
    for (b, e) in terms {
        if let Some(slot) = out.iter_mut().find(|(bb, _)| bb == b) {
            slot.1.extend(e.iter().cloned());
        } else {
            out.push((*b, e.clone()));
        }
    }
    for (_, e) in out.iter_mut() {
        e.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Entries = Vec::with_capacity(e.len());
        for &(i, j, a) in e.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += a,
                _ => merged.push((i, j, a)),
            }
        }
        merged.retain(|&(_, _, a)| a.norm() > 0.0);
        *e = merged;
    }
    out.retain(|(_, e)| !e.is_empty());
    out
}

impl Std {
    fn build(p: &ConeProgram) -> Result<Std> {
        let mut cones = p.cones.clone();
        let mut rows = Vec::new();
        let mut b = Vec::new();
        for (f, rel, rhs) in &p.constraints {
            let mut terms = f.terms.clone();
            match rel {
                Relation::Eq => {}
                Relation::Le | Relation::Ge => {
                    cones.push(Cone::Nonneg);
                    let s = if *rel == Relation::Le { 1.0 } else { -1.0 };
                    terms.push((cones.len() - 1, vec![(0, 0, c(s))]));
                }
            }
            rows.push(merge(&terms));
            b.push(*rhs);
        }
        let total: usize = cones.iter().map(|k| if let Cone::Psd(n) = k { *n } else { 1 }).sum();
        if total > MAX_TOTAL_DIM * 4 {
            return Err(Error::domain(format!("total block dimension {total} too large")));
        }
        let mut cvals: Vec<Blk> = cones
            .iter()
            .map(|k| match k {
                Cone::Psd(n) => Blk::P(CMat::zeros(*n, *n)),
                Cone::Nonneg => Blk::N(0.0),
            })
            .collect();
        for (blk, e) in merge(&p.objective.terms) {
            match &mut cvals[blk] {
                Blk::P(m) => {
                    for (i, j, a) in e {
                        m[(i, j)] += a;
                    }
                }
                Blk::N(x) => {
                    for (_, _, a) in e {
                        *x += a.re;
                    }
                }
            }
        }
        for cv in cvals.iter_mut() {
            if let Blk::P(m) = cv {
                *m = (&*m + m.adjoint()) * c(0.5);
            }
        }
        let mut by_block = vec![Vec::new(); cones.len()];
        for (r, row) in rows.iter().enumerate() {
            for (k, (blk, _)) in row.iter().enumerate() {
                by_block[*blk].push((r, k));
            }
        }
        let nu = cones.iter().map(|k| if let Cone::Psd(n) = k { *n as f64 } else { 1.0 }).sum();
        Ok(Std { cones, rows, b: DVector::from_vec(b), c: cvals, by_block, nu })
    }

    fn apply_a(&self, x: &[Blk]) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|row| {
                row.iter()
                    .map(|(blk, e)| match &x[*blk] {
                        Blk::P(m) => e.iter().map(|&(p, q, a)| (a * m[(q, p)]).re).sum::<f64>(),
                        Blk::N(v) => e.iter().map(|&(_, _, a)| a.re * v).sum::<f64>(),
                    })
                    .sum()
            }),
        )
    }

    fn apply_at(&self, y: &DVector<f64>) -> Vec<Blk> {
        let mut out = self.zeros();
        for (r, row) in self.rows.iter().enumerate() {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for (blk, e) in row {
                match &mut out[*blk] {
                    Blk::P(m) => {
                        for &(p, q, a) in e {
                            m[(p, q)] += a * yr;
                        }
                    }
                    Blk::N(v) => {
                        for &(_, _, a) in e {
                            *v += a.re * yr;
                        }
                    }
                }
            }
        }
        out
    }

    fn zeros(&self) -> Vec<Blk> {
        self.cones
            .iter()
            .map(|k| match k {
                Cone::Psd(n) => Blk::P(CMat::zeros(*n, *n)),
                Cone::Nonneg => Blk::N(0.0),
            })
            .collect()
    }
}

fn inner(a: &[Blk], b: &[Blk]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (Blk::P(m), Blk::P(n)) => m.iter().zip(n.iter()).map(|(u, v)| (u * v.conj()).re).sum(),
            (Blk::N(u), Blk::N(v)) => u * v,
            _ => unreachable!(),
        })
        .sum()
}

fn norm(a: &[Blk]) -> f64 {
    inner(a, a).max(0.0).sqrt()
}

fn combine(a: &[Blk], s: f64, b: &[Blk]) -> Vec<Blk> {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (Blk::P(m), Blk::P(n)) => Blk::P(m + n * c(s)),
            (Blk::N(u), Blk::N(v)) => Blk::N(u + s * v),
            _ => unreachable!(),
        })
        .collect()
}

fn herm(m: CMat) -> CMat {
    (&m + m.adjoint()) * c(0.5)
}

/// Largest `alpha` with `x + alpha dx` in the cone (capped at 1e30).
fn max_step(x: &[Blk], dx: &[Blk]) -> f64 {
    let mut alpha = 1e30f64;
    for (xb, db) in x.iter().zip(dx) {
        match (xb, db) {
            (Blk::P(m), Blk::P(d)) => {
                let lmin = match m.clone().cholesky() {
                    Some(ch) => {
                        let l = ch.l();
                        let t = l.solve_lower_triangular(d).unwrap_or_else(|| d.clone());
                        let w = l.solve_lower_triangular(&t.adjoint()).unwrap_or(t);
                        HermitianOperator::from_matrix_unchecked(w)
                            .eigenvalues()
                            .map(|v| *v.last().unwrap())
                            .unwrap_or(f64::NEG_INFINITY)
                    }
                    None => f64::NEG_INFINITY,
                };
                if lmin == f64::NEG_INFINITY {
                    alpha = 0.0;
                } else if lmin < 0.0 {
                    alpha = alpha.min(-1.0 / lmin);
                }
            }
            (Blk::N(v), Blk::N(d)) => {
                if *d < 0.0 {
                    alpha = alpha.min(-v / d);
                }
            }
            _ => unreachable!(),
        }
    }
    alpha
}

fn inverse(s: &[Blk]) -> Option<Vec<Blk>> {
    s.iter()
        .map(|b| match b {
            Blk::P(m) => m.clone().cholesky().map(|ch| Blk::P(herm(ch.inverse()))),
            Blk::N(v) => (*v > 0.0).then(|| Blk::N(1.0 / v)),
        })
        .collect()
}

struct Newton<'a> {
    std: &'a Std,
    x: &'a [Blk],
    z: &'a [Blk],
    schur: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> Newton<'a> {
    fn new(std: &'a Std, x: &'a [Blk], z: &'a [Blk]) -> Option<Self> {
        let m = std.rows.len();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (j, row) in std.rows.iter().enumerate() {
            for (blk, ej) in row {
                match (&x[*blk], &z[*blk]) {
                    (Blk::P(xm), Blk::P(zm)) => {
                        let n = xm.nrows();
                        // G = X A_j Z
                        let g = if ej.len() > 2 * n {
                            let mut a = CMat::zeros(n, n);
                            for &(p, q, v) in ej {
                                a[(p, q)] += v;
                            }
                            xm * a * zm
                        } else {
                            let mut g = CMat::zeros(n, n);
                            for &(r, s, a) in ej {
                                for q in 0..n {
                                    let xa = xm[(q, r)] * a;
                                    for p in 0..n {
                                        g[(q, p)] += xa * zm[(s, p)];
                                    }
                                }
                            }
                            g
                        };
                        for &(i, k) in &std.by_block[*blk] {
                            let ei = &std.rows[i][k].1;
                            let v: f64 = ei.iter().map(|&(p, q, a)| (a * g[(q, p)]).re).sum();
                            schur[(i, j)] += v;
                        }
                    }
                    (Blk::N(xv), Blk::N(zv)) => {
                        let aj: f64 = ej.iter().map(|e| e.2.re).sum();
                        for &(i, k) in &std.by_block[*blk] {
                            let ai: f64 = std.rows[i][k].1.iter().map(|e| e.2.re).sum();
                            schur[(i, j)] += ai * aj * xv * zv;
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
        let schur = (&schur + schur.transpose()) * 0.5;
        let scale = schur.diagonal().iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300);
        let chol = schur.clone().cholesky().or_else(|| {
            let mut reg = schur.clone();
            for i in 0..m {
                reg[(i, i)] += 1e-14 * scale;
            }
            reg.cholesky()
        })?;
        Some(Newton { std, x, z, schur, chol })
    }

    /// Solves for `(dx, dy, ds)` given `rc_z = sigma mu Z - X - corrector`.
    fn direction(&self, rp: &DVector<f64>, rd: &[Blk], rc_z: &[Blk]) -> (Vec<Blk>, DVector<f64>, Vec<Blk>) {
        let xrdz: Vec<Blk> = self
            .x
            .iter()
            .zip(rd)
            .zip(self.z)
            .map(|((x, r), z)| match (x, r, z) {
                (Blk::P(xm), Blk::P(rm), Blk::P(zm)) => Blk::P(xm * rm * zm),
                (Blk::N(xv), Blk::N(rv), Blk::N(zv)) => Blk::N(xv * rv * zv),
                _ => unreachable!(),
            })
            .collect();
        let rhs = rp - self.std.apply_a(rc_z) + self.std.apply_a(&xrdz);
        let mut dy = self.chol.solve(&rhs);
        // iterative refinement against the unregularised system
        for _ in 0..2 {
            let r = &rhs - &self.schur * &dy;
            dy += self.chol.solve(&r);
        }
        let ds = combine(rd, -1.0, &self.std.apply_at(&dy));
        let dx = rc_z
            .iter()
            .zip(self.x)
            .zip(&ds)
            .zip(self.z)
            .map(|(((r, x), d), z)| match (r, x, d, z) {
                (Blk::P(rm), Blk::P(xm), Blk::P(dm), Blk::P(zm)) => Blk::P(rm - herm(xm * dm * zm)),
                (Blk::N(rv), Blk::N(xv), Blk::N(dv), Blk::N(zv)) => Blk::N(rv - xv * dv * zv),
                _ => unreachable!(),
            })
            .collect();
        (dx, dy, ds)
    }
}

fn centering(x: &[Blk], z: &[Blk], sigma_mu: f64, corr: Option<(&[Blk], &[Blk])>) -> Vec<Blk> {
    x.iter()
        .zip(z)
        .enumerate()
        .map(|(i, (xb, zb))| match (xb, zb) {
            (Blk::P(xm), Blk::P(zm)) => {
                let mut r = zm * c(sigma_mu) - xm;
                if let Some((dx, ds)) = corr {
                    if let (Blk::P(a), Blk::P(b)) = (&dx[i], &ds[i]) {
                        r -= herm(a * b * zm);
                    }
                }
                Blk::P(r)
            }
            (Blk::N(xv), Blk::N(zv)) => {
                let mut r = sigma_mu * zv - xv;
                if let Some((dx, ds)) = corr {
                    if let (Blk::N(a), Blk::N(b)) = (&dx[i], &ds[i]) {
                        r -= a * b * zv;
                    }
                }
                Blk::N(r)
            }
            _ => unreachable!(),
        })
        .collect()
}

fn initial_point(std: &Std, scale: f64) -> (Vec<Blk>, Vec<Blk>) {
    let mut x = Vec::with_capacity(std.cones.len());
    let mut s = Vec::with_capacity(std.cones.len());
    for (blk, k) in std.cones.iter().enumerate() {
        let n = if let Cone::Psd(n) = k { *n } else { 1 };
        let nf = n as f64;
        let mut xi = 10.0f64.max(nf.sqrt());
        let mut eta = 10.0f64.max(nf.sqrt());
        for &(r, idx) in &std.by_block[blk] {
            let e = &std.rows[r][idx].1;
            let an = e.iter().map(|t| t.2.norm_sqr()).sum::<f64>().sqrt();
            xi = xi.max(nf * (1.0 + std.b[r].abs()) / (1.0 + an));
            eta = eta.max((1.0 + an) / nf.sqrt());
        }
        let cn = match &std.c[blk] {
            Blk::P(m) => m.norm(),
            Blk::N(v) => v.abs(),
        };
        eta = eta.max((1.0 + cn) / nf.sqrt());
        let (xi, eta) = (xi * scale, eta * scale);
        match k {
            Cone::Psd(n) => {
                x.push(Blk::P(CMat::identity(*n, *n) * c(xi)));
                s.push(Blk::P(CMat::identity(*n, *n) * c(eta)));
            }
            Cone::Nonneg => {
                x.push(Blk::N(xi));
                s.push(Blk::N(eta));
            }
        }
    }
    (x, s)
}

/// Solves a [`ConeProgram`]. Deterministic for identical inputs.
pub fn solve(p: &ConeProgram, opts: &SolverOptions) -> Result<ConeSolution> {
    let std = Std::build(p)?;
    let m = std.rows.len();
    let (mut x, mut s) = initial_point(&std, opts.start_scale);
    let mut y = DVector::<f64>::zeros(m);
    let bnorm = std.b.norm();
    let cnorm = norm(&std.c);

    let mut best: Option<(f64, Vec<Blk>, DVector<f64>, f64, f64, f64, f64)> = None;
    let mut trace_log: Vec<String> = Vec::new();
    let mut stalled = 0;
    let mut short_step = false;
    let mut pinf_hist: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut status = Status::MaxIter;

    for it in 0..opts.max_iter {
        iterations = it + 1;
        let ax = std.apply_a(&x);
        let rp = &std.b - &ax;
        let aty = std.apply_at(&y);
        let rd = combine(&combine(&std.c, -1.0, &aty), -1.0, &s);
        let pobj = inner(&std.c, &x);
        let dobj = std.b.dot(&y);
        let xs = inner(&x, &s);
        let mu = xs / std.nu;
        let pinf = rp.norm() / (1.0 + bnorm);
        let dinf = norm(&rd) / (1.0 + cnorm);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        let gap = (pobj - dobj).abs() / denom;
        let cgap = xs.abs() / denom;
        let err = pinf.max(dinf).max(gap.max(cgap));
        if [pobj, dobj, pinf, dinf, gap, cgap].iter().any(|v| v.is_nan()) {
            break;
        }
        trace_log.push(format!("it {it}: p {pobj:.6e} d {dobj:.6e} pinf {pinf:.1e} dinf {dinf:.1e} gap {gap:.1e}"));
        if best.as_ref().map_or(true, |b| err < b.0) {
            best = Some((err, x.clone(), y.clone(), pobj, dobj, gap, pinf.max(dinf)));
        }
        if err <= opts.tol {
            status = Status::Optimal;
            break;
        }
        // Farkas-type certificates
        pinf_hist.push(pinf);
        if dobj > 2f64.powi(60) * (1.0 + pobj.abs().min(1e300)) || (dobj > 1e10 && infeasibility_ray(&std, &y, dobj)) {
            let n = pinf_hist.len();
            if n > 20 && pinf_hist[n - 1] >= 0.5 * pinf_hist[n - 21] || infeasibility_ray(&std, &y, dobj) {
                status = Status::Infeasible;
                break;
            }
        }
        if pobj < -1e10 && std.apply_a(&x).norm() / pobj.abs() < 1e-8 && dinf > 1e-6 {
            status = Status::Unbounded;
            break;
        }

        let z = match inverse(&s) {
            Some(z) => z,
            None => break,
        };
        let newton = match Newton::new(&std, &x, &z) {
            Some(n) => n,
            None => break,
        };
        let rc = centering(&x, &z, 0.0, None);
        let (dxa, _, dsa) = newton.direction(&rp, &rd, &rc);
        let ap = max_step(&x, &dxa).min(1.0);
        let ad = max_step(&s, &dsa).min(1.0);
        let mu_aff = inner(&combine(&x, ap, &dxa), &combine(&s, ad, &dsa)) / std.nu;
        let mut sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let rc = if short_step {
            // recentre after a blocked step
            sigma = 1.0;
            centering(&x, &z, mu, None)
        } else {
            centering(&x, &z, sigma * mu, Some((&dxa, &dsa)))
        };
        let (dx, dy, ds) = newton.direction(&rp, &rd, &rc);
        let ap = (opts.step_fraction * max_step(&x, &dx)).min(1.0);
        let ad = (opts.step_fraction * max_step(&s, &ds)).min(1.0);
        short_step = !short_step && ap.min(ad) < 0.2;
        if ap < 1e-10 && ad < 1e-10 {
            stalled += 1;
            if stalled > 3 {
                break;
            }
        } else {
            stalled = 0;
        }
        x = combine(&x, ap, &dx);
        y += dy * ad;
        s = combine(&s, ad, &ds);
    }

    let (err, bx, by, pobj, dobj, gap, res) = best.ok_or_else(|| Error::Numerical("solver made no progress".into()))?;
    if status == Status::MaxIter && err <= ACCEPT_TOL {
        status = Status::Optimal;
    }
    if status == Status::MaxIter {
        let tail = trace_log.iter().rev().take(6).rev().cloned().collect::<Vec<_>>().join("; ");
        return Err(Error::Numerical(format!("interior-point method stalled (best error {err:.2e}): {tail}")));
    }
    let blocks = bx
        .into_iter()
        .take(p.cones.len())
        .map(|b| match b {
            Blk::P(m) => BlockValue::Psd(m),
            Blk::N(v) => BlockValue::Scalar(v),
        })
        .collect();
    Ok(ConeSolution {
        status,
        primal_objective: pobj,
        dual_objective: dobj,
        gap,
        residual: res,
        iterations,
        blocks,
        multipliers: by.iter().copied().collect(),
    })
}

/// `y / b.y` nearly satisfies `-A^T y >= 0`: a primal infeasibility certificate.
fn infeasibility_ray(std: &Std, y: &DVector<f64>, dobj: f64) -> bool {
    if dobj <= 0.0 {
        return false;
    }
    let aty = std.apply_at(&(y / dobj));
    aty.iter().all(|b| match b {
        Blk::P(m) => HermitianOperator::from_matrix_unchecked(m.clone())
            .max_eigenvalue()
            .map_or(false, |l| l <= 1e-8),
        Blk::N(v) => *v <= 1e-8,
    })
}

// ---------------------------------------------------------------------------
// smoothing programs

/// Step fractions and starting-point scales tried in turn when a solve stalls.
const RETRIES: [(f64, f64); 5] = [(0.98, 1.0), (0.9, 1.0), (0.75, 1.0), (0.9, 100.0), (0.9, 0.01)];

/// [`solve`] with other settings after a stall; the first success wins.
fn solve_retrying(p: &ConeProgram) -> Result<ConeSolution> {
    let mut last = None;
    for &(step_fraction, start_scale) in &RETRIES {
        let opts = SolverOptions { step_fraction, start_scale, max_iter: 200, ..SolverOptions::default() };
        match solve(p, &opts) {
            Err(Error::Numerical(m)) => last = Some(m),
            r => return r,
        }
    }
    Err(Error::Numerical(last.unwrap_or_default()))
}

/// Value of an optimisation together with how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SdpValue {
    pub value: ExtendedReal,
    /// Solver residual (0 for values decided by a support test).
    pub residual: f64,
    pub method: &'static str,
}

impl SdpValue {
    fn support(value: ExtendedReal) -> Self {
        SdpValue { value, residual: 0.0, method: "support" }
    }
}

fn require_optimal(sol: &ConeSolution) -> Result<()> {
    match sol.status {
        Status::Optimal => Ok(()),
        s => Err(Error::Numerical(format!("solver status {s:?}"))),
    }
}

/// Compressed pair data shared by the smoothing programs.
struct Frame {
    n: usize,
    rho: CMat,
    /// Basis of `supp sigma` (columns) and `sigma` compressed to it.
    u: CMat,
    sigma_c: CMat,
    full_support: bool,
    /// Basis of `supp rho` and the eigenvalues of `rho` on it.
    w: CMat,
    rho_eigs: Vec<f64>,
    pencil: PencilDecomposition,
}

impl Frame {
    fn new(rho: &State, sigma: &State) -> Result<Frame> {
        if rho.dim() != sigma.dim() {
            return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
        }
        let n = rho.dim();
        let pencil = PencilDecomposition::new(rho.op(), sigma.op())?;
        let mut u = pencil.support_basis.clone();
        if u.ncols() == n {
            u = CMat::identity(n, n);
        }
        let sigma_c = sigma.op().congruence(&u.adjoint()).into_matrix();
        let er = rho.op().eig()?;
        let cut = er.cutoff(SUPPORT_RTOL);
        let w = er.columns_where(|l| l > cut);
        let rho_eigs = er.values.iter().copied().filter(|&l| l > cut).collect();
        Ok(Frame {
            n,
            rho: rho.op().matrix().clone(),
            full_support: u.ncols() == n,
            u,
            sigma_c,
            w,
            rho_eigs,
            pencil,
        })
    }

    fn s(&self) -> usize {
        self.u.ncols()
    }

    /// Term for the embedded operator `U Y U^dagger`.
    fn embed(&self, y: PsdVar, s: f64) -> MatTerm<'_> {
        if self.full_support {
            MatTerm::Var(y, s)
        } else {
            MatTerm::Congruence(y, &self.u, s)
        }
    }
}

/// Adds the smoothing-ball constraints for `rho' = U Y U^dagger`.
fn add_ball(prog: &mut ConeProgram, f: &Frame, y: PsdVar, metric: Metric, eps: f64, wu: &CMat) {
    match metric {
        Metric::Trace => {
            let x = prog.psd(f.n);
            prog.matrix_constraint(&[MatTerm::Var(x, 1.0), f.embed(y, 1.0)], Relation::Ge, &f.rho);
            prog.constrain(Affine::new().trace_identity(x, f.n, 1.0), Relation::Le, eps);
        }
        Metric::Purified => {
            let r = f.rho_eigs.len();
            let b = prog.psd(2 * r);
            let (e1, e2) = selectors(r);
            let d = CMat::from_diagonal(&DVector::from_iterator(r, f.rho_eigs.iter().map(|&l| c(l))));
            prog.matrix_constraint(&[MatTerm::Congruence(b, &e1, 1.0)], Relation::Eq, &d);
            prog.matrix_constraint(
                &[MatTerm::Congruence(b, &e2, 1.0), MatTerm::Congruence(y, wu, -1.0)],
                Relation::Eq,
                &CMat::zeros(r, r),
            );
            let mut h = CMat::zeros(2 * r, 2 * r);
            for i in 0..r {
                h[(i, r + i)] = c(0.5);
                h[(r + i, i)] = c(0.5);
            }
            prog.constrain(Affine::new().trace(b, &h), Relation::Ge, (1.0 - eps * eps).max(0.0).sqrt());
        }
    }
}

/// `E1^dagger`, `E2^dagger` selecting the diagonal blocks of a `2r x 2r` matrix.
fn selectors(r: usize) -> (CMat, CMat) {
    let mut e1 = CMat::zeros(r, 2 * r);
    let mut e2 = CMat::zeros(r, 2 * r);
    for i in 0..r {
        e1[(i, i)] = c(1.0);
        e2[(i, r + i)] = c(1.0);
    }
    (e1, e2)
}

fn norm_constraint(prog: &mut ConeProgram, y: PsdVar, s: usize, norm: Normalisation) {
    let rel = match norm {
        Normalisation::Normalised => Relation::Eq,
        Normalisation::Subnormalised => Relation::Le,
    };
    prog.constrain(Affine::new().trace_identity(y, s, 1.0), rel, 1.0);
}

/// `inf { D_max(rho'||sigma) : rho' in the ball }`.
pub fn smooth_dmax(rho: &State, sigma: &State, spec: SmoothingSpec) -> Result<ExtendedReal> {
    Ok(smooth_dmax_detailed(rho, sigma, spec)?.value)
}

pub fn smooth_dmax_detailed(rho: &State, sigma: &State, spec: SmoothingSpec) -> Result<SdpValue> {
    let spec = SmoothingSpec::new(spec.metric, spec.normalisation, spec.epsilon)?;
    // a purified ball with 1 - eps^2 == 1 is {rho} in floating point
    let degenerate = match spec.metric {
        Metric::Trace => spec.epsilon == 0.0,
        Metric::Purified => 1.0 - spec.epsilon * spec.epsilon == 1.0,
    };
    if degenerate {
        return Ok(SdpValue::support(dmax(rho, sigma)?));
    }
    let f = Frame::new(rho, sigma)?;
    if let Some(atoms) = f.pencil.atoms.clone() {
        match smooth_dmax_classical(&atoms, spec) {
            // fall back to the dense program
            Err(Error::Numerical(_)) => {}
            r => return r,
        }
    }
    if f.s() == 1 {
        return rank_one(rho, sigma, &f, spec);
    }
    if !f.pencil.support_contained() && !ball_meets_support(&f, spec)? {
        return Ok(SdpValue::support(ExtendedReal::INFINITY));
    }
    let s = f.s();
    let mut prog = ConeProgram::new();
    let y = prog.psd(s);
    let lam = prog.scalar();
    prog.matrix_constraint(&[MatTerm::Scaled(lam, &f.sigma_c), MatTerm::Var(y, -1.0)], Relation::Ge, &CMat::zeros(s, s));
    norm_constraint(&mut prog, y, s, spec.normalisation);
    let wu = f.w.adjoint() * &f.u;
    add_ball(&mut prog, &f, y, spec.metric, spec.epsilon, &wu);
    prog.minimize(Affine::new().scalar(lam, 1.0));
    let sol = solve_retrying(&prog)?;
    require_optimal(&sol)?;
    Ok(SdpValue { value: ExtendedReal::log2(sol.value()), residual: sol.residual.max(sol.gap), method: "sdp" })
}

/// `sigma` of rank one: `rho' <= lambda sigma` forces `rho' = y sigma`, so the
/// optimum is the smallest `y <= 1` (exactly 1 when normalised) inside the ball.
fn rank_one(rho: &State, sigma: &State, f: &Frame, spec: SmoothingSpec) -> Result<SdpValue> {
    let eps = spec.epsilon;
    // <phi|rho|phi>, the fidelity of rho and y sigma over y
    let overlap = rho.op().trace_with(&HermitianOperator::outer_sum(&f.u));
    let y = match (spec.metric, spec.normalisation) {
        (_, Normalisation::Normalised) => 1.0,
        (Metric::Trace, Normalisation::Subnormalised) => dtilde_max(rho, sigma, eps)?.value().exp2(),
        (Metric::Purified, Normalisation::Subnormalised) if overlap > 0.0 => (1.0 - eps * eps) / overlap,
        (Metric::Purified, Normalisation::Subnormalised) => f64::INFINITY,
    };
    if y > 1.0 + 1e-12 {
        return Ok(SdpValue::support(ExtendedReal::INFINITY));
    }
    let y = y.min(1.0);
    let inside = match spec.metric {
        Metric::Trace => crate::divergences::hockey_stick(rho, sigma, y)? <= eps + BOUNDARY_TOL,
        Metric::Purified => y * overlap >= 1.0 - eps * eps - BOUNDARY_TOL,
    };
    if !inside {
        return Ok(SdpValue::support(ExtendedReal::INFINITY));
    }
    Ok(SdpValue { value: ExtendedReal::log2(y), residual: 0.0, method: "rank_one" })
}

/// Auxiliary program: does the ball contain a state supported on `supp sigma`?
fn ball_meets_support(f: &Frame, spec: SmoothingSpec) -> Result<bool> {
    let s = f.s();
    if s == 0 {
        return Ok(false);
    }
    let mut prog = ConeProgram::new();
    let y = prog.psd(s);
    norm_constraint(&mut prog, y, s, spec.normalisation);
    match spec.metric {
        Metric::Trace => {
            let x = prog.psd(f.n);
            prog.matrix_constraint(&[MatTerm::Var(x, 1.0), f.embed(y, 1.0)], Relation::Ge, &f.rho);
            prog.minimize(Affine::new().trace_identity(x, f.n, 1.0));
            let sol = solve_retrying(&prog)?;
            require_optimal(&sol)?;
            Ok(sol.value() <= spec.epsilon + 1e-9)
        }
        Metric::Purified => {
            let r = f.rho_eigs.len();
            let b = prog.psd(2 * r);
            let (e1, e2) = selectors(r);
            let d = CMat::from_diagonal(&DVector::from_iterator(r, f.rho_eigs.iter().map(|&l| c(l))));
            let wu = f.w.adjoint() * &f.u;
            prog.matrix_constraint(&[MatTerm::Congruence(b, &e1, 1.0)], Relation::Eq, &d);
            prog.matrix_constraint(
                &[MatTerm::Congruence(b, &e2, 1.0), MatTerm::Congruence(y, &wu, -1.0)],
                Relation::Eq,
                &CMat::zeros(r, r),
            );
            let mut h = CMat::zeros(2 * r, 2 * r);
            for i in 0..r {
                h[(i, r + i)] = c(-0.5);
                h[(r + i, i)] = c(-0.5);
            }
            prog.minimize(Affine::new().trace(b, &h));
            let sol = solve_retrying(&prog)?;
            require_optimal(&sol)?;
            let root_f = -sol.value();
            Ok(root_f * root_f >= 1.0 - spec.epsilon * spec.epsilon - 1e-9)
        }
    }
}

/// Diagonal programs for commuting pairs, in the joint eigenbasis.
fn smooth_dmax_classical(atoms: &[(f64, f64)], spec: SmoothingSpec) -> Result<SdpValue> {
    let qmax = atoms.iter().fold(0.0f64, |a, t| a.max(t.1));
    let inside: Vec<usize> = (0..atoms.len()).filter(|&i| atoms[i].1 > SUPPORT_RTOL * qmax).collect();
    let leak: f64 = (0..atoms.len()).filter(|i| !inside.contains(i)).map(|i| atoms[i].0).sum();
    let eps = spec.epsilon;
    let infinite = match spec.metric {
        Metric::Trace => eps < leak - BOUNDARY_TOL,
        Metric::Purified => eps * eps < leak - BOUNDARY_TOL,
    };
    if infinite {
        return Ok(SdpValue::support(ExtendedReal::INFINITY));
    }
    if spec.metric == Metric::Trace {
        return trace_lp(atoms, &inside, eps, spec.normalisation);
    }
    let mut prog = ConeProgram::new();
    let lam = prog.scalar();
    let mut mass = Affine::new();
    match spec.metric {
        Metric::Trace => unreachable!(),
        Metric::Purified => {
            let mut overlap = Affine::new();
            let h = CMat::from_row_slice(2, 2, &[c(0.0), c(0.5), c(0.5), c(0.0)]);
            let e11 = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
            let e22 = CMat::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
            for &i in &inside {
                let (p, q) = atoms[i];
                if p > 0.0 {
                    let b = prog.psd(2);
                    prog.constrain(Affine::new().trace(b, &e11), Relation::Eq, p);
                    prog.constrain(Affine::new().trace(b, &e22).scalar(lam, -q), Relation::Le, 0.0);
                    mass = mass.trace(b, &e22);
                    overlap = overlap.trace(b, &h);
                } else {
                    let pp = prog.scalar();
                    prog.constrain(Affine::new().scalar(pp, 1.0).scalar(lam, -q), Relation::Le, 0.0);
                    mass = mass.scalar(pp, 1.0);
                }
            }
            prog.constrain(overlap, Relation::Ge, (1.0 - eps * eps).sqrt());
        }
    }
    let rel = match spec.normalisation {
        Normalisation::Normalised => Relation::Eq,
        Normalisation::Subnormalised => Relation::Le,
    };
    prog.constrain(mass, rel, 1.0);
    prog.minimize(Affine::new().scalar(lam, 1.0));
    let sol = solve_retrying(&prog)?;
    require_optimal(&sol)?;
    Ok(SdpValue { value: ExtendedReal::log2(sol.value()), residual: sol.residual.max(sol.gap), method: "lp" })
}

/// Trace-ball program on a joint spectrum, solved by the simplex method:
/// minimise `lambda` over `p'_i <= lambda q_i`, `x_i >= p_i - p'_i`, `sum x_i <= eps`.
fn trace_lp(atoms: &[(f64, f64)], inside: &[usize], eps: f64, norm: Normalisation) -> Result<SdpValue> {
    use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let lam = lp.add_var(1.0, (0.0, f64::INFINITY));
    let mut tv = LinearExpr::empty();
    let mut mass = LinearExpr::empty();
    let mut rows: Vec<(Vec<(microlp::Variable, f64)>, ComparisonOp, f64)> = Vec::new();
    for (i, &(p, q)) in atoms.iter().enumerate() {
        let x = lp.add_var(0.0, (0.0, f64::INFINITY));
        tv.add(x, 1.0);
        if inside.contains(&i) {
            let pp = lp.add_var(0.0, (0.0, f64::INFINITY));
            mass.add(pp, 1.0);
            rows.push((vec![(pp, 1.0), (lam, -q)], ComparisonOp::Le, 0.0));
            rows.push((vec![(x, 1.0), (pp, 1.0)], ComparisonOp::Ge, p));
        } else {
            rows.push((vec![(x, 1.0)], ComparisonOp::Ge, p));
        }
    }
    for (r, op, rhs) in rows {
        lp.add_constraint(r.as_slice(), op, rhs);
    }
    lp.add_constraint(tv, ComparisonOp::Le, eps);
    let op = match norm {
        Normalisation::Normalised => ComparisonOp::Eq,
        Normalisation::Subnormalised => ComparisonOp::Le,
    };
    lp.add_constraint(mass, op, 1.0);
    match lp.solve() {
        Ok(out) => {
            let sol = out.into_solution().map_err(|_| Error::Numerical("simplex interrupted".into()))?;
            Ok(SdpValue { value: ExtendedReal::log2(sol[lam]), residual: 0.0, method: "lp" })
        }
        Err(microlp::Error::Infeasible) => Ok(SdpValue::support(ExtendedReal::INFINITY)),
        Err(e) => Err(Error::Numerical(format!("simplex: {e}"))),
    }
}

/// Smoothing over operators beyond states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `Z >= 0` with `Tr (rho - Z)_+ <= eps`.
    Pos,
    /// Hermitian `X` with `Tr X <= 1` and `||rho - X||_+ <= eps`.
    HermSub,
    /// Hermitian `X` with `Tr X = 1` and `||rho - X||_+ <= eps`.
    HermEq,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pos" => Ok(Variant::Pos),
            "herm_sub" => Ok(Variant::HermSub),
            "herm_eq" => Ok(Variant::HermEq),
            _ => Err(Error::Parse(format!("unknown variant '{s}'"))),
        }
    }
}

pub fn smooth_dmax_variants(rho: &State, sigma: &State, eps: f64, variant: Variant) -> Result<ExtendedReal> {
    Ok(smooth_dmax_variants_detailed(rho, sigma, eps, variant)?.value)
}

pub fn smooth_dmax_variants_detailed(rho: &State, sigma: &State, eps: f64, variant: Variant) -> Result<SdpValue> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::domain(format!("epsilon = {eps} outside [0, 1)")));
    }
    let f = Frame::new(rho, sigma)?;
    let leak = f.pencil.leak;
    if eps < leak - BOUNDARY_TOL || (eps <= leak + BOUNDARY_TOL && leak > LEAK_TOL && !f.pencil.commutes_with_support) {
        return Ok(SdpValue::support(ExtendedReal::INFINITY));
    }
    let n = f.n;
    let mut prog = ConeProgram::new();
    let lam = prog.scalar();
    match variant {
        Variant::Pos => {
            let s = f.s();
            let y = prog.psd(s);
            prog.matrix_constraint(&[MatTerm::Scaled(lam, &f.sigma_c), MatTerm::Var(y, -1.0)], Relation::Ge, &CMat::zeros(s, s));
            let wu = CMat::zeros(0, 0);
            add_ball(&mut prog, &f, y, Metric::Trace, eps, &wu);
        }
        Variant::HermSub | Variant::HermEq => {
            // X = lambda sigma - W
            let sigma_full = sigma.op().matrix().clone();
            let w = prog.psd(n);
            let p = prog.psd(n);
            prog.matrix_constraint(
                &[MatTerm::Var(p, 1.0), MatTerm::Scaled(lam, &sigma_full), MatTerm::Var(w, -1.0)],
                Relation::Ge,
                &f.rho,
            );
            prog.constrain(Affine::new().trace_identity(p, n, 1.0), Relation::Le, eps);
            let tr = Affine::new().scalar(lam, sigma.op().trace()).trace_identity(w, n, -1.0);
            let rel = if variant == Variant::HermEq { Relation::Eq } else { Relation::Le };
            prog.constrain(tr, rel, 1.0);
        }
    }
    prog.minimize(Affine::new().scalar(lam, 1.0));
    let sol = solve_retrying(&prog)?;
    require_optimal(&sol)?;
    Ok(SdpValue { value: ExtendedReal::log2(sol.value()), residual: sol.residual.max(sol.gap), method: "sdp" })
}

/// Upper end of the split search, in bits.
pub const HILBERT_MAX_BITS: f64 = 64.0;

/// `inf { D_max(rho'||sigma) + D_max(sigma||rho') : rho' in the ball }`, normalised balls only.
pub fn smooth_hilbert(rho: &State, sigma: &State, spec: SmoothingSpec) -> Result<ExtendedReal> {
    Ok(smooth_hilbert_detailed(rho, sigma, spec)?.value)
}

pub fn smooth_hilbert_detailed(rho: &State, sigma: &State, spec: SmoothingSpec) -> Result<SdpValue> {
    let spec = SmoothingSpec::new(spec.metric, spec.normalisation, spec.epsilon)?;
    if spec.normalisation != Normalisation::Normalised {
        return Err(Error::domain("smooth Hilbert metric is defined for normalised balls only"));
    }
    if spec.epsilon <= 0.0 {
        return Err(Error::domain("smooth Hilbert metric needs epsilon in (0, 1)"));
    }
    let base = smooth_dmax_detailed(rho, sigma, spec)?;
    let s0 = base.value.value();
    if !base.value.is_finite() || s0 >= HILBERT_MAX_BITS {
        return Ok(SdpValue::support(ExtendedReal::INFINITY));
    }
    let f = Frame::new(rho, sigma)?;
    let wu = f.w.adjoint() * &f.u;
    let mut worst_res = base.residual;
    let (mut calls, mut failed) = (0usize, 0usize);
    let mut last_err = None;
    // h(s) = s - log2 mu*(2^s), quasi-convex in s; a stalled inner program
    // (near the edge of feasibility) only removes that point from the search
    let mut h = |s: f64| -> Result<f64> {
        calls += 1;
        match hilbert_inner(&f, &wu, spec, 2f64.powf(s)) {
            Ok((mu, res)) if mu > 0.0 => {
                worst_res = worst_res.max(res);
                Ok(s - mu.log2())
            }
            Ok(_) => Ok(f64::INFINITY),
            Err(Error::Numerical(m)) => {
                failed += 1;
                last_err = Some(m);
                if 2 * failed > calls + 8 {
                    return Err(Error::Numerical(format!("smooth Hilbert search: {}", last_err.take().unwrap_or_default())));
                }
                Ok(f64::INFINITY)
            }
            Err(e) => Err(e),
        }
    };
    let mut lo = s0;
    let first = h(s0 + 1.0)?;
    if !first.is_finite() {
        return Ok(SdpValue::support(ExtendedReal::INFINITY));
    }
    // h(s) >= s since mu <= 1
    let mut hi = first.min(HILBERT_MAX_BITS).max(s0 + 1.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = h(x1)?;
    let mut f2 = h(x2)?;
    let mut best = first.min(f1).min(f2);
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = h(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = h(x2)?;
        }
        best = best.min(f1).min(f2);
        if hi - lo <= 1e-10 {
            break;
        }
    }
    if best >= HILBERT_MAX_BITS {
        return Ok(SdpValue::support(ExtendedReal::INFINITY));
    }
    Ok(SdpValue { value: ExtendedReal::new(best), residual: worst_res, method: "sdp_split_search" })
}

/// `max { mu : mu sigma <= rho' <= lambda sigma, rho' in the ball }`.
fn hilbert_inner(f: &Frame, wu: &CMat, spec: SmoothingSpec, lambda: f64) -> Result<(f64, f64)> {
    let s = f.s();
    let upper = &f.sigma_c * c(lambda);
    let mut prog = ConeProgram::new();
    let y = prog.psd(s);
    let mu = prog.scalar();
    prog.matrix_constraint(&[MatTerm::Var(y, 1.0)], Relation::Le, &upper);
    let neg_sigma = &f.sigma_c * c(-1.0);
    prog.matrix_constraint(&[MatTerm::Var(y, 1.0), MatTerm::Scaled(mu, &neg_sigma)], Relation::Ge, &CMat::zeros(s, s));
    norm_constraint(&mut prog, y, s, Normalisation::Normalised);
    add_ball(&mut prog, f, y, spec.metric, spec.epsilon, wu);
    prog.minimize(Affine::new().scalar(mu, -1.0));
    let sol = solve_retrying(&prog)?;
    match sol.status {
        Status::Optimal => Ok((-sol.value(), sol.residual.max(sol.gap))),
        Status::Infeasible => Ok((0.0, 0.0)),
        st => Err(Error::Numerical(format!("solver status {st:?}"))),
    }
}

/// `D_H^epsilon` from the primal program `sup { z : 0 <= M <= z I, Tr M rho >= z (1 - epsilon), Tr M sigma <= 1 }`.
pub fn dh_sdp(rho: &State, sigma: &State, epsilon: f64) -> Result<ExtendedReal> {
    Ok(dh_sdp_detailed(rho, sigma, epsilon)?.value)
}

pub fn dh_sdp_detailed(rho: &State, sigma: &State, epsilon: f64) -> Result<SdpValue> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let pencil = PencilDecomposition::new(rho.op(), sigma.op())?;
    let a = 1.0 - epsilon;
    if pencil.leak >= a - BOUNDARY_TOL {
        return Ok(SdpValue::support(ExtendedReal::INFINITY));
    }
    let n = rho.dim();
    let mut prog = ConeProgram::new();
    let z = prog.scalar();
    let m = prog.psd(n);
    let id = CMat::identity(n, n);
    prog.matrix_constraint(&[MatTerm::Scaled(z, &id), MatTerm::Var(m, -1.0)], Relation::Ge, &CMat::zeros(n, n));
    prog.constrain(Affine::new().trace(m, rho.op().matrix()).scalar(z, -a), Relation::Ge, 0.0);
    prog.constrain(Affine::new().trace(m, sigma.op().matrix()), Relation::Le, 1.0);
    prog.minimize(Affine::new().scalar(z, -1.0));
    let sol = solve_retrying(&prog)?;
    require_optimal(&sol)?;
    Ok(SdpValue { value: ExtendedReal::log2(-sol.value()), residual: sol.residual.max(sol.gap), method: "sdp" })
}

/// Convenience: smooth value under all four balls.
pub fn smooth_dmax_all(rho: &State, sigma: &State, eps: f64) -> Result<Vec<(SmoothingSpec, ExtendedReal)>> {
    let mut out = Vec::new();
    for metric in [Metric::Trace, Metric::Purified] {
        for norm in [Normalisation::Normalised, Normalisation::Subnormalised] {
            let spec = SmoothingSpec::new(metric, norm, eps)?;
            out.push((spec, smooth_dmax(rho, sigma, spec)?));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{sample_pair, Ensemble};

    #[test]
    fn spectral_norm_as_sdp() {
        let h = CMat::from_row_slice(2, 2, &[c(1.0), C64::new(0.5, 0.5), C64::new(0.5, -0.5), c(-0.3)]);
        let mut prog = ConeProgram::new();
        let t = prog.scalar();
        // t >= lambda_max(H) when H >= 0 is not assumed: shift by 2
        let id = CMat::identity(2, 2);
        prog.matrix_constraint(&[MatTerm::Scaled(t, &id)], Relation::Ge, &(&h + &id * c(2.0)));
        prog.minimize(Affine::new().scalar(t, 1.0));
        let sol = solve(&prog, &SolverOptions::default()).unwrap();
        let lmax = HermitianOperator::new(h).unwrap().max_eigenvalue().unwrap();
        assert!((sol.value() - 2.0 - lmax).abs() < 1e-8, "{} vs {}", sol.value() - 2.0, lmax);
    }

    #[test]
    fn infeasible_toy() {
        let mut prog = ConeProgram::new();
        let x = prog.scalar();
        prog.constrain(Affine::new().scalar(x, 1.0), Relation::Ge, 1.0);
        prog.constrain(Affine::new().scalar(x, 1.0), Relation::Le, 0.0);
        prog.minimize(Affine::new().scalar(x, 1.0));
        let sol = solve(&prog, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
    }

    #[test]
    fn dmax_program_matches_pencil() {
        let (rho, sigma) = sample_pair(Ensemble::HsMixed, 3, 5).unwrap();
        let mut prog = ConeProgram::new();
        let lam = prog.scalar();
        prog.matrix_constraint(&[MatTerm::Scaled(lam, sigma.op().matrix())], Relation::Ge, rho.op().matrix());
        prog.minimize(Affine::new().scalar(lam, 1.0));
        let sol = solve(&prog, &SolverOptions::default()).unwrap();
        let d = dmax(&rho, &sigma).unwrap().value();
        assert!((sol.value().log2() - d).abs() < 1e-7);
    }
}
