use smoothdiv::matcore::{Ensemble, State};
use smoothdiv::verify::{pair_from_tag, recompute, run_suite, run_suite_on, CheckReport, RunConfig, Suite};

fn small(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.seed = seed;
    cfg.dims = vec![2, 3];
    cfg.samples = 2;
    cfg.ensembles = vec![Ensemble::HsMixed, Ensemble::ClassicalDirichlet];
    cfg.grid.eps = vec![0.05, 0.3, 0.7];
    cfg.grid.inner_points = 8;
    cfg
}

fn assert_witnesses_reproduce(rep: &CheckReport) {
    for rec in &rep.relations {
        let Some(w) = &rec.witness else { continue };
        let (r, s) = pair_from_tag(&w.pair).unwrap();
        let (lhs, rhs, slack) = recompute(rec, &r, &s).unwrap();
        let same = |a: f64, b: f64| a == b || (a - b).abs() <= 1e-9;
        assert!(same(lhs, w.lhs.value()) && same(rhs, w.rhs.value()), "{}: {lhs} {rhs} vs {:?}", rec.tag, w);
        assert!(same(slack, rec.min_slack.value()), "{}: {slack} vs {:?}", rec.tag, rec.min_slack);
    }
}

#[test]
fn witnesses_reproduce_their_slack() {
    for suite in [Suite::Equivalence, Suite::Oneshot, Suite::Renyi, Suite::Frenkel] {
        let rep = run_suite(suite, &small(3)).unwrap();
        assert!(rep.passed, "{suite}: {:?}", rep.failures());
        assert_witnesses_reproduce(&rep);
    }
}

#[test]
fn runs_are_deterministic_and_echo_their_config() {
    let cfg = small(8);
    let a = run_suite(Suite::Oneshot, &cfg).unwrap();
    let b = run_suite(Suite::Oneshot, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let echoed: RunConfig = serde_json::from_value(serde_json::to_value(&a).unwrap()["config"].clone()).unwrap();
    assert_eq!(echoed, cfg);
    assert_eq!(a.pairs, 4);
}

#[test]
fn one_dimensional_pair_is_trivial() {
    let one = State::classical(&[1.0]).unwrap();
    let mut cfg = small(0);
    cfg.grid.hilbert_eps = 1;
    for suite in [Suite::Equivalence, Suite::Oneshot, Suite::Renyi, Suite::Structural, Suite::Frenkel] {
        let rep = run_suite_on(suite, &one, &one, &cfg).unwrap();
        assert!(rep.passed, "{suite}: {:?}", rep.failures());
    }
}

#[test]
fn invalid_grids_are_rejected() {
    let mut cfg = small(0);
    cfg.grid.eps = vec![0.0, 0.5];
    assert!(matches!(run_suite(Suite::Oneshot, &cfg), Err(smoothdiv::Error::Domain(_))));
    let mut cfg = small(0);
    cfg.grid.alphas_upper = vec![0.5];
    assert!(run_suite(Suite::Renyi, &cfg).is_err());
}
