use std::cell::RefCell;
use std::collections::HashMap;

use crate::divergences::{
    dh, dmax, dspec, dtilde_max, dtilde_max_dual, hilbert_metric, hockey_stick, renyi, umegaki,
    Metric, Normalisation, PencilDecomposition, RenyiKind, SmoothingSpec, COMMUTE_TOL,
};
use crate::matcore::{tensor_power, trace_distance, State};
use crate::sdpsolve::{smooth_dmax, smooth_dmax_variants, smooth_hilbert, Variant};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Key {
    Dtilde(u64),
    DtildeRev(u64),
    DtildeDual(u64),
    Dh(u64),
    Dspec(u64),
    Smooth(Metric, Normalisation, u64),
    Hilbert(Metric, u64),
    Variant(u8, u64),
    Renyi(RenyiKind, u64),
    Umegaki,
    Hockey(u32, u64),
}

/// Memoised divergence values for one pair `(rho, sigma)`.
///
/// Every relation reads its sides through this, so values shared between
/// relations are computed once. Values are plain `f64` and may be infinite.
pub struct PairEval<'a> {
    pub rho: &'a State,
    pub sigma: &'a State,
    pencil: PencilDecomposition,
    rev_leak: f64,
    commuting: bool,
    td: f64,
    cache: RefCell<HashMap<Key, f64>>,
    tensors: RefCell<HashMap<u32, (State, State)>>,
}

impl<'a> PairEval<'a> {
    pub fn new(rho: &'a State, sigma: &'a State) -> Result<Self> {
        if rho.dim() != sigma.dim() {
            return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
        }
        let pencil = PencilDecomposition::new(rho.op(), sigma.op())?;
        let rev_leak = PencilDecomposition::new(sigma.op(), rho.op())?.leak;
        let commuting = rho.op().commutator_norm(sigma.op()) <= COMMUTE_TOL;
        let td = trace_distance(rho.op(), sigma.op())?;
        Ok(PairEval {
            rho,
            sigma,
            pencil,
            rev_leak,
            commuting,
            td,
            cache: RefCell::new(HashMap::new()),
            tensors: RefCell::new(HashMap::new()),
        })
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn commuting(&self) -> bool {
        self.commuting
    }

    /// `1/2 ||rho - sigma||_1`.
    pub fn trace_distance(&self) -> f64 {
        self.td
    }

    /// `1 - Tr rho Pi_sigma`.
    pub fn leak(&self) -> f64 {
        self.pencil.leak
    }

    /// `1 - Tr sigma Pi_rho`.
    pub fn reverse_leak(&self) -> f64 {
        self.rev_leak
    }

    pub fn sigma_full_rank(&self) -> bool {
        self.pencil.ratios.len() == self.dim()
    }

    fn memo(&self, key: Key, f: impl FnOnce() -> Result<f64>) -> Result<f64> {
        if let Some(&v) = self.cache.borrow().get(&key) {
            return Ok(v);
        }
        let v = f().map_err(|e| match e {
            Error::Numerical(m) => Error::Numerical(format!("{key:?}: {m}")),
            e => e,
        })?;
        if v.is_nan() {
            return Err(Error::Numerical(format!("NaN while evaluating {key:?}")));
        }
        self.cache.borrow_mut().insert(key, v);
        Ok(v)
    }

    pub fn dtilde(&self, eps: f64) -> Result<f64> {
        if eps >= 1.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let eps = eps.max(0.0);
        self.memo(Key::Dtilde(eps.to_bits()), || Ok(dtilde_max(self.rho, self.sigma, eps)?.value()))
    }

    /// `Dtilde^eps(sigma || rho)`.
    pub fn dtilde_rev(&self, eps: f64) -> Result<f64> {
        if eps >= 1.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let eps = eps.max(0.0);
        self.memo(Key::DtildeRev(eps.to_bits()), || Ok(dtilde_max(self.sigma, self.rho, eps)?.value()))
    }

    pub fn dtilde_dual(&self, eps: f64) -> Result<f64> {
        let eps = eps.max(0.0);
        self.memo(Key::DtildeDual(eps.to_bits()), || {
            Ok(dtilde_max_dual(self.rho, self.sigma, eps)?.value())
        })
    }

    /// `D_H^eps`, type-I error `eps`.
    pub fn dh(&self, eps: f64) -> Result<f64> {
        let eps = eps.clamp(0.0, 1.0);
        self.memo(Key::Dh(eps.to_bits()), || Ok(dh(self.rho, self.sigma, eps)?.value()))
    }

    pub fn dspec(&self, eps: f64) -> Result<f64> {
        let eps = eps.clamp(0.0, 1.0);
        self.memo(Key::Dspec(eps.to_bits()), || Ok(dspec(self.rho, self.sigma, eps)?.value()))
    }

    /// Smoothed max-divergence at radius `r`; radii outside `(0, 1)` are
    /// resolved directly (`r <= 0` is `D_max`, `r >= 1` admits `sigma` or `0`).
    pub fn smooth(&self, metric: Metric, norm: Normalisation, r: f64) -> Result<f64> {
        if r >= 1.0 {
            return Ok(match norm {
                Normalisation::Normalised => 0.0,
                Normalisation::Subnormalised => f64::NEG_INFINITY,
            });
        }
        if r <= 0.0 {
            return self.memo(Key::Smooth(metric, norm, 0), || Ok(dmax(self.rho, self.sigma)?.value()));
        }
        self.memo(Key::Smooth(metric, norm, r.to_bits()), || {
            let spec = SmoothingSpec::new(metric, norm, r)?;
            Ok(smooth_dmax(self.rho, self.sigma, spec)?.value())
        })
    }

    /// Smoothed Hilbert projective metric over the normalised ball of radius `r`.
    pub fn hilbert(&self, metric: Metric, r: f64) -> Result<f64> {
        if r >= 1.0 {
            return Ok(0.0);
        }
        if r <= 0.0 {
            return self.memo(Key::Hilbert(metric, 0), || Ok(hilbert_metric(self.rho, self.sigma)?.value()));
        }
        self.memo(Key::Hilbert(metric, r.to_bits()), || {
            let spec = SmoothingSpec::new(metric, Normalisation::Normalised, r)?;
            Ok(smooth_hilbert(self.rho, self.sigma, spec)?.value())
        })
    }

    pub fn variant(&self, v: Variant, eps: f64) -> Result<f64> {
        let tag = match v {
            Variant::Pos => 0,
            Variant::HermSub => 1,
            Variant::HermEq => 2,
        };
        let eps = eps.max(0.0);
        self.memo(Key::Variant(tag, eps.to_bits()), || {
            Ok(smooth_dmax_variants(self.rho, self.sigma, eps, v)?.value())
        })
    }

    pub fn renyi(&self, alpha: f64, kind: RenyiKind) -> Result<f64> {
        self.memo(Key::Renyi(kind, alpha.to_bits()), || Ok(renyi(self.rho, self.sigma, alpha, kind)?.value()))
    }

    pub fn umegaki(&self) -> Result<f64> {
        self.memo(Key::Umegaki, || Ok(umegaki(self.rho, self.sigma)?.value()))
    }

    /// `eps_n(R) = E_{2^{nR}}(rho^n || sigma^n)`.
    pub fn eps_n(&self, n: u32, rate: f64) -> Result<f64> {
        self.memo(Key::Hockey(n, rate.to_bits()), || {
            if !self.tensors.borrow().contains_key(&n) {
                let r = State::new(tensor_power(self.rho.op(), n)?)?;
                let s = State::new(tensor_power(self.sigma.op(), n)?)?;
                self.tensors.borrow_mut().insert(n, (r, s));
            }
            let t = self.tensors.borrow();
            let (r, s) = &t[&n];
            hockey_stick(r, s, 2f64.powf(n as f64 * rate))
        })
    }
}
