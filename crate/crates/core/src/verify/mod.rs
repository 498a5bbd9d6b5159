//! Relation checks over sampled or supplied state pairs.
//!
//! Each check evaluates both sides of a relation at many parameter points,
//! keeps the smallest signed slack and the point that produced it.

mod eval;
mod exponents;
mod frenkel;
mod relations;
mod search;
mod suites;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use eval::PairEval;
pub use exponents::{estimate_exponents, exponent_rates, ExponentSequence};
pub use frenkel::{check_frenkel, frenkel_integral, FrenkelValue, QuadSpec};
pub use relations::{rate_of, sides, sub_purified_radius, sub_trace_radius, Kind, Params, Rel};
pub use suites::{
    bisect_threshold, check_equivalence, check_oneshot_bounds, check_renyi_and_infospec,
    check_structural, reconstruct_dh, reconstruct_dtilde, tightness_witnesses, Reconstruction,
};

use crate::divergences::ExtendedReal;
use crate::matcore::{sample_pair, sub_seed, Ensemble, State};
use crate::{Error, Result};

/// Default slack tolerance for inequalities.
pub const SLACK_TOL: f64 = 1e-6;
/// Tolerance on the two equivalence reconstructions.
pub const GRID_TOL: f64 = 1e-5;
/// Refined and dense-grid optima further apart than this are flagged.
pub const REVIEW_TOL: f64 = 1e-4;
pub const GOLDEN_ITERS: usize = 50;
/// Largest accepted gap between a finite-n exponent and its limit.
pub const EXPONENT_GAP: f64 = 0.15;
/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "SMOOTHDIV_THREADS";

/// Parameter grids shared by the suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub eps: Vec<f64>,
    /// Points in each inner grid over `mu`, `delta`, `c` or `eta`.
    pub inner_points: usize,
    pub alphas_upper: Vec<f64>,
    pub alphas_lower: Vec<f64>,
    pub refine: bool,
    /// Points in the monotonicity probe of `Dtilde`.
    pub monotone_points: usize,
    /// Number of `eps` values (spread over `eps`) used for the smoothed Hilbert metric.
    pub hilbert_eps: usize,
    pub hilbert_inner: usize,
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            eps: log_spaced(0.01, 0.99, 15),
            inner_points: 40,
            alphas_upper: log_spaced(0.05, 7.0, 12).into_iter().map(|x| 1.0 + x).collect(),
            alphas_lower: (1..=12).map(|k| k as f64 / 13.0).collect(),
            refine: true,
            monotone_points: 30,
            hilbert_eps: 5,
            hilbert_inner: 8,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() || self.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::domain("eps grid must be non-empty and inside (0, 1)"));
        }
        if self.inner_points == 0 || self.hilbert_inner == 0 {
            return Err(Error::domain("inner grids need at least one point"));
        }
        if self.alphas_upper.iter().any(|&a| !(a > 1.0 && a.is_finite())) {
            return Err(Error::domain("upper alpha grid must lie in (1, inf)"));
        }
        if self.alphas_lower.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::domain("lower alpha grid must lie in (0, 1)"));
        }
        if self.monotone_points < 2 {
            return Err(Error::domain("monotonicity probe needs two points"));
        }
        Ok(())
    }

    /// Evenly spread subset of the `eps` grid used by the Hilbert checks.
    pub fn hilbert_subset(&self) -> Vec<f64> {
        let n = self.eps.len();
        let k = self.hilbert_eps.min(n);
        if k == 0 {
            return Vec::new();
        }
        if k == 1 {
            return vec![self.eps[n / 2]];
        }
        (0..k).map(|i| self.eps[i * (n - 1) / (k - 1)]).collect()
    }
}

/// Everything that determines a run; echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub samples: usize,
    /// Ensembles cycled over the sampled pairs.
    pub ensembles: Vec<Ensemble>,
    pub grid: GridSpec,
    pub tol: f64,
    pub quad_tol: f64,
    /// Exponent rate; `None` picks one rate per branch from the pair.
    pub rate: Option<f64>,
    pub n_max: u32,
    pub witnesses: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            dims: vec![2, 3],
            samples: 10,
            ensembles: vec![Ensemble::HsMixed, Ensemble::HaarPure, Ensemble::ClassicalDirichlet],
            grid: GridSpec::default(),
            tol: SLACK_TOL,
            quad_tol: 1e-4,
            rate: None,
            n_max: 8,
            witnesses: true,
            out: None,
            rho: None,
            sigma: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.ensembles.is_empty() {
            return Err(Error::domain("at least one ensemble is required"));
        }
        if !(self.tol >= 0.0) || !(self.quad_tol > 0.0) {
            return Err(Error::domain("tolerances must be non-negative"));
        }
        if self.n_max < 2 {
            return Err(Error::domain("n_max must be at least 2"));
        }
        Ok(())
    }
}

/// Identifies the pair a witness came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTag {
    pub pair: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Ensemble>,
    pub dim: usize,
}

impl PairTag {
    pub fn supplied(dim: usize) -> Self {
        PairTag { pair: 0, seed: None, ensemble: None, dim }
    }
}

/// Where the minimum slack of a relation was attained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(flatten)]
    pub pair: PairTag,
    pub params: Params,
    pub lhs: ExtendedReal,
    pub rhs: ExtendedReal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub tag: String,
    pub statement: String,
    pub kind: Kind,
    pub tolerance: f64,
    pub samples: usize,
    pub min_slack: ExtendedReal,
    pub passed: bool,
    /// Inner optimisation needs a second look (grid and refinement disagree).
    #[serde(default)]
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl RelationRecord {
    pub fn relation(&self) -> Result<Rel> {
        self.tag.parse()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub suite: String,
    pub passed: bool,
    pub flagged: bool,
    pub pairs: usize,
    pub relations: Vec<RelationRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sequences: Vec<ExponentSequence>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
}

impl CheckReport {
    pub fn empty(suite: &str) -> Self {
        CheckReport {
            suite: suite.to_string(),
            passed: true,
            flagged: false,
            pairs: 0,
            relations: Vec::new(),
            sequences: Vec::new(),
            notes: Vec::new(),
            config: None,
        }
    }

    pub fn relation(&self, tag: &str) -> Option<&RelationRecord> {
        self.relations.iter().find(|r| r.tag == tag)
    }

    /// Smallest slack of `tag`, or `None` if the relation was never evaluated.
    pub fn min_slack(&self, tag: &str) -> Option<f64> {
        self.relation(tag).map(|r| r.min_slack.value())
    }

    pub fn failures(&self) -> Vec<&RelationRecord> {
        self.relations.iter().filter(|r| !r.passed).collect()
    }

    /// Folds `other` into `self`; on equal slacks the earlier witness wins.
    pub fn merge(&mut self, other: CheckReport) {
        self.pairs += other.pairs;
        for rec in other.relations {
            match self.relations.iter_mut().find(|r| r.tag == rec.tag) {
                Some(mine) => {
                    mine.samples += rec.samples;
                    mine.flagged |= rec.flagged;
                    mine.passed &= rec.passed;
                    if rec.min_slack.value() < mine.min_slack.value() {
                        mine.min_slack = rec.min_slack;
                        mine.witness = rec.witness;
                    }
                }
                None => self.relations.push(rec),
            }
        }
        self.sequences.extend(other.sequences);
        for n in other.notes {
            if !self.notes.contains(&n) {
                self.notes.push(n);
            }
        }
        self.refresh();
    }

    fn refresh(&mut self) {
        for r in &mut self.relations {
            r.passed = r.min_slack.value() >= -r.tolerance;
        }
        self.passed = self.relations.iter().all(|r| r.passed);
        self.flagged = self.relations.iter().any(|r| r.flagged);
    }

    pub fn strip_witnesses(&mut self) {
        for r in &mut self.relations {
            r.witness = None;
        }
    }
}

/// Running minimum of the slack of every relation seen on one pair.
pub(crate) struct Tally {
    pair: PairTag,
    slack_tol: f64,
    quad_tol: f64,
    records: BTreeMap<Rel, Rec>,
    notes: Vec<String>,
    sequences: Vec<ExponentSequence>,
}

struct Rec {
    samples: usize,
    slack: f64,
    flagged: bool,
    witness: Option<(Params, f64, f64)>,
}

impl Tally {
    pub(crate) fn new(pair: PairTag, slack_tol: f64, quad_tol: f64) -> Self {
        Tally { pair, slack_tol, quad_tol, records: BTreeMap::new(), notes: Vec::new(), sequences: Vec::new() }
    }

    /// Records one evaluation and returns its slack.
    pub(crate) fn observe(&mut self, rel: Rel, p: Params, lhs: f64, rhs: f64) -> f64 {
        let slack = rel.kind().slack(lhs, rhs);
        let rec = self.records.entry(rel).or_insert(Rec {
            samples: 0,
            slack: f64::INFINITY,
            flagged: false,
            witness: None,
        });
        rec.samples += 1;
        if rec.witness.is_none() || slack < rec.slack {
            rec.slack = slack;
            rec.witness = Some((p, lhs, rhs));
        }
        slack
    }

    /// Evaluates `rel` at `p` and records it.
    pub(crate) fn check(&mut self, rel: Rel, ev: &PairEval<'_>, p: Params) -> Result<f64> {
        let (l, r) = sides(rel, ev, &p)?;
        if l.is_nan() || r.is_nan() {
            return Err(Error::Numerical(format!("NaN in relation {}", rel.tag())));
        }
        Ok(self.observe(rel, p, l, r))
    }

    pub(crate) fn flag(&mut self, rel: Rel) {
        if let Some(r) = self.records.get_mut(&rel) {
            r.flagged = true;
        }
    }

    pub(crate) fn note(&mut self, msg: String) {
        if !self.notes.contains(&msg) {
            self.notes.push(msg);
        }
    }

    /// A note about this pair only.
    pub(crate) fn pair_note(&mut self, msg: &str) {
        self.note(format!("pair {}: {msg}", self.pair.pair));
    }

    pub(crate) fn sequence(&mut self, mut s: ExponentSequence) {
        s.pair = self.pair.pair;
        self.sequences.push(s);
    }

    pub(crate) fn into_report(self, suite: &str) -> CheckReport {
        let mut rep = CheckReport::empty(suite);
        rep.pairs = 1;
        for (rel, rec) in self.records {
            let tolerance = relations::default_tol(rel, self.slack_tol, self.quad_tol);
            rep.relations.push(RelationRecord {
                tag: rel.tag().to_string(),
                statement: rel.statement().to_string(),
                kind: rel.kind(),
                tolerance,
                samples: rec.samples,
                min_slack: ExtendedReal::new(rec.slack),
                passed: rec.slack >= -tolerance,
                flagged: rec.flagged,
                witness: rec.witness.map(|(params, l, r)| Witness {
                    pair: self.pair.clone(),
                    params,
                    lhs: ExtendedReal::new(l),
                    rhs: ExtendedReal::new(r),
                }),
            });
        }
        rep.notes = self.notes;
        rep.sequences = self.sequences;
        rep.refresh();
        rep
    }
}

/// Suite selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Equivalence,
    Oneshot,
    Renyi,
    Structural,
    Frenkel,
    Exponents,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Equivalence => "equivalence",
            Suite::Oneshot => "oneshot",
            Suite::Renyi => "renyi",
            Suite::Structural => "structural",
            Suite::Frenkel => "frenkel",
            Suite::Exponents => "exponents",
            Suite::All => "all",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "equivalence" => Suite::Equivalence,
            "oneshot" => Suite::Oneshot,
            "renyi" => Suite::Renyi,
            "structural" => Suite::Structural,
            "frenkel" => Suite::Frenkel,
            "exponents" => Suite::Exponents,
            "all" => Suite::All,
            _ => return Err(Error::Parse(format!("unknown suite '{s}'"))),
        })
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs `suite` on one pair.
pub fn check_pair(suite: Suite, rho: &State, sigma: &State, tag: PairTag, cfg: &RunConfig) -> Result<CheckReport> {
    let ev = PairEval::new(rho, sigma)?;
    let mut t = Tally::new(tag, cfg.tol, cfg.quad_tol);
    let g = &cfg.grid;
    match suite {
        Suite::Equivalence => suites::equivalence(&ev, g, &mut t)?,
        Suite::Oneshot => suites::oneshot(&ev, g, &mut t)?,
        Suite::Renyi => suites::renyi_infospec(&ev, g, &mut t)?,
        Suite::Structural => suites::structural(&ev, g, &mut t)?,
        Suite::Frenkel => frenkel::frenkel(&ev, cfg.quad_tol, &mut t)?,
        Suite::Exponents => exponents::exponents(&ev, cfg.rate, cfg.n_max, g, &mut t)?,
        Suite::All => {
            suites::equivalence(&ev, g, &mut t)?;
            suites::oneshot(&ev, g, &mut t)?;
            suites::renyi_infospec(&ev, g, &mut t)?;
            suites::structural(&ev, g, &mut t)?;
            frenkel::frenkel(&ev, cfg.quad_tol, &mut t)?;
            if ev.dim() == 2 {
                exponents::exponents(&ev, cfg.rate, cfg.n_max, g, &mut t)?;
            }
        }
    }
    Ok(t.into_report(suite.name()))
}

/// The pairs a run draws: dimensions in order, `samples` each, ensembles cycled.
pub fn sampled_pairs(cfg: &RunConfig) -> Vec<PairTag> {
    let mut out = Vec::new();
    for &dim in &cfg.dims {
        for _ in 0..cfg.samples {
            let i = out.len();
            out.push(PairTag {
                pair: i,
                seed: Some(sub_seed(cfg.seed, i as u64)),
                ensemble: Some(cfg.ensembles[i % cfg.ensembles.len()]),
                dim,
            });
        }
    }
    out
}

/// Regenerates a sampled pair from its tag.
pub fn pair_from_tag(tag: &PairTag) -> Result<(State, State)> {
    match (tag.seed, tag.ensemble) {
        (Some(seed), Some(kind)) => sample_pair(kind, tag.dim, seed),
        _ => Err(Error::domain("pair was supplied by the caller and cannot be regenerated")),
    }
}

/// Thread pool honouring `SMOOTHDIV_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Error::Numerical(format!("thread pool: {e}")))
}

fn finish(mut rep: CheckReport, cfg: &RunConfig) -> CheckReport {
    if !cfg.witnesses {
        rep.strip_witnesses();
    }
    rep.config = Some(cfg.clone());
    rep
}

/// Runs `suite` on pairs sampled from `cfg`, in parallel, reducing in pair order.
pub fn run_suite(suite: Suite, cfg: &RunConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let tags = sampled_pairs(cfg);
    let pool = thread_pool()?;
    let parts: Vec<Result<CheckReport>> = pool.install(|| {
        tags.par_iter()
            .map(|tag| {
                let (rho, sigma) = pair_from_tag(tag)?;
                check_pair(suite, &rho, &sigma, tag.clone(), cfg)
            })
            .collect()
    });
    let mut rep = CheckReport::empty(suite.name());
    for p in parts {
        rep.merge(p?);
    }
    Ok(finish(rep, cfg))
}

/// Runs `suite` on one caller-supplied pair.
pub fn run_suite_on(suite: Suite, rho: &State, sigma: &State, cfg: &RunConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let mut rep = CheckReport::empty(suite.name());
    rep.merge(check_pair(suite, rho, sigma, PairTag::supplied(rho.dim()), cfg)?);
    Ok(finish(rep, cfg))
}

/// Re-evaluates a record at its witness, returning `(lhs, rhs, slack)`.
pub fn recompute(rec: &RelationRecord, rho: &State, sigma: &State) -> Result<(f64, f64, f64)> {
    let rel = rec.relation()?;
    let w = rec.witness.as_ref().ok_or_else(|| Error::domain("record carries no witness"))?;
    let ev = PairEval::new(rho, sigma)?;
    let (l, r) = sides(rel, &ev, &w.params)?;
    Ok((l, r, rel.kind().slack(l, r)))
}
