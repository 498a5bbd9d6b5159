//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Exits non-zero when a criterion fails, except those listed in
//! `KNOWN_FAILURES`. Set `ACCEPTANCE_STRICT=1` to fail on those too, and
//! `ACCEPTANCE_ONLY=3,7` to run a subset.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use smoothdiv::divergences::{self as dv, Metric, Normalisation, SmoothingSpec};
use smoothdiv::matcore::{
    sample_pair, sub_seed, support_projector, Ensemble, HermitianOperator, State, SUPPORT_RTOL,
};
use smoothdiv::sdpsolve::{self, Variant};
use smoothdiv::smoothing::{datta_renner, extremal_qubit_measurement, gentle_measurement, simultaneous_smooth};
use smoothdiv::verify::{
    bisect_threshold, check_pair, frenkel_integral, log_spaced, thread_pool, tightness_witnesses,
    CheckReport, GridSpec, PairEval, PairTag, RunConfig, Suite,
};
use smoothdiv::Result;

use Ensemble::{ClassicalDirichlet as Dirichlet, HaarPure as Pure, HsMixed as Mixed};

/// Criteria expected to fail; see the README.
const KNOWN_FAILURES: &[usize] = &[10];

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { ok, detail: detail.into() })
}

/// Pair `i` cycles through `dims` first, then through `kinds`.
fn tags(seed: u64, n: usize, dims: &[usize], kinds: &[Ensemble]) -> Vec<PairTag> {
    (0..n)
        .map(|i| PairTag {
            pair: i,
            seed: Some(sub_seed(seed, i as u64)),
            ensemble: Some(kinds[(i / dims.len()) % kinds.len()]),
            dim: dims[i % dims.len()],
        })
        .collect()
}

fn pair(t: &PairTag) -> Result<(State, State)> {
    sample_pair(t.ensemble.unwrap(), t.dim, t.seed.unwrap())
}

fn par_map<T: Send>(tags: &[PairTag], f: impl Fn(&PairTag) -> Result<T> + Sync) -> Result<Vec<T>> {
    let pool = thread_pool()?;
    pool.install(|| tags.par_iter().map(&f).collect())
}

fn run_suite_over(suite: Suite, tags: &[PairTag], cfg: &RunConfig) -> Result<CheckReport> {
    let parts = par_map(tags, |t| {
        let (r, s) = pair(t)?;
        check_pair(suite, &r, &s, t.clone(), cfg)
    })?;
    let mut rep = CheckReport::empty(suite.name());
    for p in parts {
        rep.merge(p);
    }
    Ok(rep)
}

fn summarise(rep: &CheckReport) -> String {
    let worst = rep
        .relations
        .iter()
        .min_by(|a, b| (a.min_slack.value() + a.tolerance).total_cmp(&(b.min_slack.value() + b.tolerance)));
    let fails: Vec<&str> = rep.failures().iter().map(|r| r.tag.as_str()).collect();
    let mut s = format!("{} relations on {} pairs", rep.relations.len(), rep.pairs);
    if let Some(w) = worst {
        s += &format!(", tightest {} slack {:.2e} (tol {:.0e})", w.tag, w.min_slack.value(), w.tolerance);
    }
    if !fails.is_empty() {
        s += &format!(", failing: {}", fails.join(" "));
    }
    s
}

/// Tracks the largest deviation; infinities must agree exactly.
#[derive(Default)]
struct MaxErr {
    err: f64,
    mismatched: usize,
    count: usize,
}

impl MaxErr {
    fn add(&mut self, got: f64, want: f64) {
        self.count += 1;
        if got.is_finite() && want.is_finite() {
            self.err = self.err.max((got - want).abs());
        } else if got != want {
            self.mismatched += 1;
        }
    }

    fn merge(&mut self, o: MaxErr) {
        self.err = self.err.max(o.err);
        self.mismatched += o.mismatched;
        self.count += o.count;
    }

    fn within(&self, tol: f64) -> bool {
        self.err <= tol && self.mismatched == 0
    }

    fn show(&self, tol: f64) -> String {
        format!("max err {:.2e} (tol {:.0e}) over {} values, {} infinite mismatches", self.err, tol, self.count, self.mismatched)
    }
}

fn merged(parts: Vec<MaxErr>) -> MaxErr {
    let mut m = MaxErr::default();
    for p in parts {
        m.merge(p);
    }
    m
}

fn eps15() -> Vec<f64> {
    GridSpec::default().eps
}

// D~^eps for pure states with overlap f
fn pure_dtilde(f: f64, e: f64) -> f64 {
    if e > 1.0 - f {
        (e * (1.0 - e) / (f - 1.0 + e)).log2()
    } else {
        f64::INFINITY
    }
}

// D_H with type-I error e for pure states with overlap f
fn pure_dh(f: f64, e: f64) -> f64 {
    if e < f {
        let fid = ((e * f).sqrt() + ((1.0 - e) * (1.0 - f)).sqrt()).powi(2);
        -(1.0 - fid).log2()
    } else {
        f64::INFINITY
    }
}

fn c1() -> Result<Outcome> {
    let ts = tags(101, 500, &[2], &[Pure]);
    let eps = eps15();
    let m = merged(par_map(&ts, |t| {
        let (r, s) = pair(t)?;
        let f = r.op().trace_with(s.op());
        let mut m = MaxErr::default();
        for &e in &eps {
            m.add(dv::dtilde_max(&r, &s, e)?.value(), pure_dtilde(f, e));
            m.add(dv::dh(&r, &s, e)?.value(), pure_dh(f, e));
        }
        Ok(m)
    })?);
    outcome(m.within(1e-8), m.show(1e-8))
}

fn c2() -> Result<Outcome> {
    let ts = tags(102, 20, &[2, 3, 4], &[Mixed, Dirichlet]);
    let eps = eps15();
    let m = merged(par_map(&ts, |t| {
        let (r, _) = pair(t)?;
        let mut m = MaxErr::default();
        for &e in &eps {
            m.add(dv::dtilde_max(&r, &r, e)?.value(), (1.0 - e).log2());
            m.add(dv::dh(&r, &r, 1.0 - e)?.value(), (1.0 / e).log2());
        }
        Ok(m)
    })?);
    outcome(m.within(1e-9), m.show(1e-9))
}

fn c3() -> Result<Outcome> {
    let ts = tags(103, 200, &[2, 3, 4, 5, 6], &[Dirichlet]);
    let eps = eps15();
    let parts = par_map(&ts, |t| {
        let (r, s) = pair(t)?;
        let (mut eq, mut norm) = (MaxErr::default(), MaxErr::default());
        for &e in &eps {
            let sub = sdpsolve::smooth_dmax(&r, &s, SmoothingSpec::new(Metric::Trace, Normalisation::Subnormalised, e)?)?;
            let n = sdpsolve::smooth_dmax(&r, &s, SmoothingSpec::new(Metric::Trace, Normalisation::Normalised, e)?)?;
            eq.add(dv::dtilde_max(&r, &s, e)?.value(), sub.value());
            norm.add(n.value(), sub.value().max(0.0));
        }
        Ok((eq, norm))
    })?;
    let (a, b): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    let (a, b) = (merged(a), merged(b));
    outcome(a.within(1e-7) && b.within(1e-7), format!("equivalence {}; normalisation {}", a.show(1e-7), b.show(1e-7)))
}

fn config(eps: Vec<f64>) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.grid.eps = eps;
    cfg
}

fn c4() -> Result<Outcome> {
    let ts = tags(104, 100, &[2, 3, 4], &[Mixed, Pure, Dirichlet]);
    let rep = run_suite_over(Suite::Equivalence, &ts, &config(log_spaced(0.01, 0.99, 10)))?;
    outcome(rep.passed, summarise(&rep))
}

fn c5() -> Result<Outcome> {
    let ts = tags(105, 300, &[2, 3, 4], &[Mixed, Pure, Dirichlet]);
    let rep = run_suite_over(Suite::Oneshot, &ts, &config(eps15()))?;
    let fr: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let tight = tightness_witnesses(&eps15(), &fr)?;
    outcome(
        rep.passed && tight.passed,
        format!("bounds: {}; tightness: {}", summarise(&rep), summarise(&tight)),
    )
}

fn c6() -> Result<Outcome> {
    let ts = tags(106, 200, &[2, 3, 4], &[Mixed, Pure, Dirichlet]);
    let cfg = config(eps15());
    assert_eq!((cfg.grid.alphas_upper.len(), cfg.grid.alphas_lower.len()), (12, 12));
    let rep = run_suite_over(Suite::Renyi, &ts, &cfg)?;
    outcome(rep.passed, summarise(&rep))
}

fn c7() -> Result<Outcome> {
    let mut ts = tags(107, 50, &[2, 3, 4], &[Mixed]);
    ts.extend(tags(1007, 20, &[2, 3, 4], &[Dirichlet]));
    let errs = par_map(&ts, |t| {
        let (r, s) = pair(t)?;
        let d = dv::umegaki(&r, &s)?.value();
        let ev = PairEval::new(&r, &s)?;
        let v = frenkel_integral(&ev, 1e-4)?.value;
        Ok((v - d).abs() / d.abs())
    })?;
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    outcome(worst <= 1e-4, format!("max relative err {worst:.2e} (tol 1e-4) over {} pairs", errs.len()))
}

fn positive_part(a: &HermitianOperator) -> Result<HermitianOperator> {
    Ok(a.eig()?.map(|l| l.max(0.0)))
}

fn c8() -> Result<Outcome> {
    // gentle measurement on |0><0| with the extremal qubit measurement
    let zero = State::classical(&[1.0, 0.0])?;
    let mut g = 0.0f64;
    for k in 1..=12 {
        let e = 0.05 * k as f64;
        let w = gentle_measurement(&zero, &extremal_qubit_measurement(e)?)?;
        g = g.max((w.certified.fidelity_norm - (1.0 - e)).abs());
        g = g.max((w.certified.trace_dist_sub - (e * (1.0 - 0.75 * e)).sqrt()).abs());
    }

    // geometric-mean smoothing of rho <= lambda sigma + (rho - lambda sigma)_+
    let ts = tags(108, 200, &[2, 3, 4], &[Mixed, Pure, Dirichlet]);
    let slacks = par_map(&ts, |t| {
        let (r, s) = pair(t)?;
        let u = (t.seed.unwrap() % 1000) as f64 / 1000.0;
        let lambda = 0.25 + 3.75 * u;
        let a = s.op().scale(lambda);
        let q = positive_part(&(r.op() - &a))?;
        if q.trace() >= 1.0 - 1e-9 {
            return Ok(f64::INFINITY);
        }
        Ok(datta_renner(&r, &a, &q)?.min_slack())
    })?;
    let dr = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
    let used = slacks.iter().filter(|x| x.is_finite()).count();

    // two-qubit states smoothed on both marginals at once
    let ts = tags(109, 50, &[4], &[Mixed]);
    let sim = par_map(&ts, |t| {
        let (r, _) = pair(t)?;
        let mut a = Vec::new();
        let mut q = Vec::new();
        for (i, k) in [0usize, 1].into_iter().enumerate() {
            let ri = smoothdiv::matcore::partial_trace(r.op(), &[2, 2], &[k])?;
            let (s, _) = sample_pair(Mixed, 2, sub_seed(t.seed.unwrap(), i as u64))?;
            let ri = State::new(ri)?;
            let lambda = 2f64.powf(dv::dtilde_max(&ri, &s, 0.2)?.value());
            let ai = s.op().scale(lambda);
            q.push(positive_part(&(ri.op() - &ai))?);
            a.push(ai);
        }
        let w = simultaneous_smooth(&r, &[2, 2], &a, &q)?;
        Ok(w.bound_checks().iter().map(|b| b.slack).fold(f64::INFINITY, f64::min))
    })?;
    let sm = sim.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        g <= 1e-9 && dr >= -1e-9 && used == 200 && sm >= -1e-9,
        format!(
            "gentle max err {g:.2e}; geometric-mean min slack {dr:.2e} on {used} triples; simultaneous min slack {sm:.2e} on {} states",
            sim.len()
        ),
    )
}

fn c9() -> Result<Outcome> {
    let ts = tags(110, 100, &[2, 3, 4], &[Mixed, Pure, Dirichlet]);
    let grid: Vec<f64> = (1..=30).map(|k| k as f64 / 31.0).collect();
    let parts = par_map(&ts, |t| {
        let (r, s) = pair(t)?;
        let vals = grid.iter().map(|&e| dv::dtilde_max(&r, &s, e).map(|v| v.value())).collect::<Result<Vec<_>>>()?;
        let rise = vals.windows(2).map(|w| w[1] - w[0]).filter(|d| !d.is_nan()).fold(f64::NEG_INFINITY, f64::max);
        let mut drop = f64::NEG_INFINITY;
        for (&e, &v) in grid.iter().zip(&vals) {
            if v.is_finite() {
                drop = drop.max(v - dv::dtilde_max(&r, &s, e + 1e-6)?.value());
            }
        }
        let thr = if PairEval::new(&r, &s)?.sigma_full_rank() {
            None
        } else {
            let (proj, _) = support_projector(s.op(), SUPPORT_RTOL)?;
            let want = 1.0 - r.op().trace_with(&proj);
            Some((bisect_threshold(&PairEval::new(&r, &s)?)? - want).abs())
        };
        Ok((rise, drop, thr))
    })?;
    let rise = parts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let drop = parts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let thr: Vec<f64> = parts.iter().filter_map(|p| p.2).collect();
    let te = thr.iter().cloned().fold(0.0, f64::max);
    outcome(
        rise <= 0.0 && drop <= 1e-3 && te <= 1e-6 && !thr.is_empty(),
        format!(
            "largest increase {rise:.2e}; largest drop at +1e-6 {drop:.2e} (tol 1e-3); threshold err {te:.2e} (tol 1e-6) on {} rank-deficient pairs",
            thr.len()
        ),
    )
}

fn c10() -> Result<Outcome> {
    let ts = tags(111, 5, &[2], &[Mixed]);
    let rep = run_suite_over(Suite::Exponents, &ts, &RunConfig::default())?;
    let mut s = summarise(&rep);
    for q in &rep.sequences {
        if let (Some(e), Some(c)) = (q.error_exponent.last(), q.sc_exponent.last()) {
            s += &format!(
                "; pair {} R={:.3}: error {:.3} vs {:.3}, strong converse {:.3} vs {:.3}",
                q.pair,
                q.rate,
                e.value(),
                q.error_target,
                c.value(),
                q.sc_target
            );
        }
    }
    outcome(rep.passed, s)
}

fn c11() -> Result<Outcome> {
    let ts = tags(112, 100, &[2, 3, 4], &[Mixed, Pure, Dirichlet]);
    let eps = [0.05, 0.2, 0.5, 0.8];
    let parts = par_map(&ts, |t| {
        let (r, s) = pair(t)?;
        let (mut a, mut b, mut c) = (MaxErr::default(), MaxErr::default(), MaxErr::default());
        for &e in &eps {
            let dt = dv::dtilde_max(&r, &s, e)?.value();
            a.add(sdpsolve::dh_sdp(&r, &s, e)?.value(), dv::dh(&r, &s, e)?.value());
            b.add(dv::dtilde_max_dual(&r, &s, e)?.value(), dt);
            c.add(sdpsolve::smooth_dmax_variants(&r, &s, e, Variant::Pos)?.value(), dt);
        }
        Ok([a, b, c])
    })?;
    let mut m = [MaxErr::default(), MaxErr::default(), MaxErr::default()];
    for p in parts {
        for (x, y) in m.iter_mut().zip(p) {
            x.merge(y);
        }
    }
    let tol = [1e-7, 1e-8, 1e-7];
    outcome(
        (0..3).all(|i| m[i].within(tol[i])),
        format!(
            "dh vs sdp {}; dual {}; positive variant {}",
            m[0].show(tol[0]),
            m[1].show(tol[1]),
            m[2].show(tol[2])
        ),
    )
}

type Criterion = (usize, &'static str, u64, fn() -> Result<Outcome>);

const CRITERIA: &[Criterion] = &[
    (1, "pure-state closed forms", 30, c1),
    (2, "identity saturation", 5, c2),
    (3, "classical equivalence and normalisation", 120, c3),
    (4, "equivalence reconstruction", 300, c4),
    (5, "one-shot bounds and tightness", 1800, c5),
    (6, "Renyi, information-spectrum and substate bounds", 600, c6),
    (7, "integral representation", 600, c7),
    (8, "constructive smoothing", 300, c8),
    (9, "continuity and divergence threshold", 120, c9),
    (10, "error and strong-converse exponents", 180, c10),
    (11, "cross-method consistency", 900, c11),
];

fn main() {
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut unexpected = 0;
    let total = Instant::now();
    for &(id, name, budget, run) in CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let t = Instant::now();
        let res = run();
        let dt = t.elapsed();
        let (ok, detail) = match res {
            Ok(o) => (o.ok && dt <= Duration::from_secs(budget), o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_FAILURES.contains(&id);
        let mark = match (ok, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("[{id:>2}] {mark:<12} {name}: {detail}; {:.1}s of {budget}s", dt.as_secs_f64());
        if !ok && (strict || !known) {
            unexpected += 1;
        }
    }
    println!("acceptance finished in {:.1}s", total.elapsed().as_secs_f64());
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}
