//! Frozen reference values on small pairs with known answers.

use num_complex::Complex64 as C64;
use smoothdiv::divergences::{self as dv, Metric, Normalisation, RenyiKind, SmoothingSpec};
use smoothdiv::matcore::{fidelity, geometric_mean, sample_pair, CMat, CVec, Ensemble, HermitianOperator, State};
use smoothdiv::sdpsolve::{self, Variant};
use smoothdiv::smoothing::{datta_renner, extremal_qubit_measurement, gentle_measurement};
use smoothdiv::verify::{frenkel_integral, PairEval};

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

fn v(x: smoothdiv::Result<dv::ExtendedReal>) -> f64 {
    x.unwrap().value()
}

fn classical_pair() -> (State, State) {
    (State::classical(&[0.75, 0.25]).unwrap(), State::classical(&[0.5, 0.5]).unwrap())
}

/// `|0>` and a real qubit state with overlap `f`.
fn pure_pair(f: f64) -> (State, State) {
    let a = State::pure(&CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)])).unwrap();
    let b = State::pure(&CVec::from_vec(vec![C64::new(f.sqrt(), 0.0), C64::new((1.0 - f).sqrt(), 0.0)])).unwrap();
    (a, b)
}

#[test]
fn classical_pair_values() {
    let (r, s) = classical_pair();
    close(v(dv::umegaki(&r, &s)), 0.188_721_875_540_867_17, 1e-14);
    close(v(dv::dmax(&r, &s)), 0.584_962_500_721_156_2, 1e-14);
    close(fidelity(r.op(), s.op()).unwrap(), 0.5 + 3f64.sqrt() / 4.0, 1e-12);
    close(v(dv::hilbert_metric(&r, &s)), 3f64.log2(), 1e-12);
    close(dv::hockey_stick(&r, &s, 1.0).unwrap(), 0.25, 1e-14);
    // accept the large-ratio atom and 60% of the other
    close(v(dv::dh(&r, &s, 0.1)), -(0.8f64.log2()), 1e-10);
    // (3/4 - lambda/2) = 1/10
    close(v(dv::dtilde_max(&r, &s, 0.1)), 1.3f64.log2(), 1e-10);
    close(v(dv::dtilde_max(&r, &s, 0.25)), 0.0, 1e-10);
    // the mass-1/4 atom already exceeds eps below the next breakpoint
    close(v(dv::dspec(&r, &s, 0.2)), -1.0, 1e-9);
    close(v(dv::dobs(&r, &s)), 0.75 * 1.5f64.log2(), 1e-9);
    for kind in [RenyiKind::Petz, RenyiKind::Sandwiched] {
        close(v(dv::renyi(&r, &s, 2.0, kind)), 1.25f64.log2(), 1e-12);
    }
    let half = -2.0 * (0.375f64.sqrt() + 0.125f64.sqrt()).log2();
    close(v(dv::renyi(&r, &s, 0.5, RenyiKind::Petz)), half, 1e-12);
}

#[test]
fn classical_smoothing_programs() {
    let (r, s) = classical_pair();
    let spec = SmoothingSpec::new(Metric::Trace, Normalisation::Subnormalised, 0.25).unwrap();
    close(v(sdpsolve::smooth_dmax(&r, &s, spec)), 0.0, 1e-7);
    let spec = SmoothingSpec::new(Metric::Trace, Normalisation::Subnormalised, 0.1).unwrap();
    close(v(sdpsolve::smooth_dmax(&r, &s, spec)), 1.3f64.log2(), 1e-7);
    close(v(sdpsolve::dh_sdp(&r, &s, 0.1)), -(0.8f64.log2()), 1e-7);
    let ev = PairEval::new(&r, &s).unwrap();
    close(frenkel_integral(&ev, 1e-8).unwrap().value, 0.188_721_875_540_867_17, 1e-6);
}

#[test]
fn pure_pair_values() {
    let (r, s) = pure_pair(0.9);
    close(dv::hockey_stick(&r, &s, 1.0).unwrap(), 0.1f64.sqrt(), 1e-12);
    close(v(dv::dtilde_max(&r, &s, 0.2)), 1.6f64.log2(), 1e-9);
    close(v(dv::dtilde_max_dual(&r, &s, 0.2)), 1.6f64.log2(), 1e-8);
    assert!(v(dv::dtilde_max(&r, &s, 0.05)).is_infinite());
    close(dv::binary_fidelity(0.1, 0.9).unwrap(), 0.36, 1e-14);
    close(v(dv::dh(&r, &s, 0.1)), 0.643_856_189_774_724_7, 1e-10);
    close(v(sdpsolve::dh_sdp(&r, &s, 0.1)), 0.643_856_189_774_724_7, 1e-7);
    let c = dv::pure_closed_forms(0.9, 0.2).unwrap();
    close(c.dtilde_max.value(), 1.6f64.log2(), 1e-12);
    // purified distance of the pair is sqrt(1 - f)
    let spec = SmoothingSpec::new(Metric::Purified, Normalisation::Normalised, 0.1f64.sqrt()).unwrap();
    close(v(sdpsolve::smooth_dmax(&r, &s, spec)), 0.0, 1e-6);
}

#[test]
fn identical_states() {
    let (r, _) = sample_pair(Ensemble::HsMixed, 3, 4).unwrap();
    close(v(dv::dtilde_max(&r, &r, 0.5)), -1.0, 1e-10);
    close(v(dv::dtilde_max_dual(&r, &r, 0.5)), -1.0, 1e-10);
    close(v(dv::dh(&r, &r, 0.3)), -(0.7f64.log2()), 1e-10);
    close(v(sdpsolve::dh_sdp(&r, &r, 0.3)), -(0.7f64.log2()), 1e-7);
    close(v(sdpsolve::smooth_dmax_variants(&r, &r, 0.5, Variant::Pos)), -1.0, 1e-7);
}

#[test]
fn sandwiched_order_64_near_dmax() {
    // the gap reaches ~0.037 on a few of these pairs, most are under 0.02
    let mut close_enough = 0;
    for seed in 0..200 {
        let (r, s) = sample_pair(Ensemble::HsMixed, 2, seed).unwrap();
        let d = v(dv::dmax(&r, &s));
        let a = v(dv::renyi(&r, &s, 64.0, RenyiKind::Sandwiched));
        assert!(a <= d + 1e-9 && d - a <= 0.04, "{seed}: {a} vs {d}");
        close_enough += usize::from(d - a <= 0.02);
    }
    assert!(close_enough >= 160, "{close_enough}");
}

#[test]
fn gentle_measurement_on_a_qubit() {
    let zero = State::classical(&[1.0, 0.0]).unwrap();
    for k in 1..=12 {
        let e = 0.05 * k as f64;
        let w = gentle_measurement(&zero, &extremal_qubit_measurement(e).unwrap()).unwrap();
        close(w.certified.fidelity_norm, 1.0 - e, 1e-9);
        close(w.certified.trace_dist_sub, (e * (1.0 - 0.75 * e)).sqrt(), 1e-9);
    }
    let w = gentle_measurement(&zero, &extremal_qubit_measurement(0.7).unwrap()).unwrap();
    assert!(w.certified.trace_dist_sub <= 1.0 / 3f64.sqrt() + 1e-12);
}

#[test]
fn geometric_mean_with_inverse_is_identity() {
    let (r, _) = sample_pair(Ensemble::HsMixed, 3, 9).unwrap();
    let inv = r.op().eig().unwrap().map(|l| 1.0 / l);
    let g = geometric_mean(r.op(), &inv).unwrap();
    assert!((g.matrix() - HermitianOperator::identity(3).matrix()).norm() <= 1e-8);
}

#[test]
fn optimal_remainder_bounds_the_smoothed_dmax() {
    let e = 0.2;
    for seed in 0..10 {
        let (r, s) = sample_pair(Ensemble::HsMixed, 3, seed).unwrap();
        let (dt, wit) = dv::dtilde_max_witness(&r, &s, e).unwrap();
        let wit = wit.unwrap();
        let out = datta_renner(&r, &s.op().scale(wit.lambda), &wit.q).unwrap();
        let d = v(dv::dmax(&out.rho_prime_normalised, &s));
        assert!(d <= dt.value() - (1.0 - e).log2() + 1e-9);
    }
}

#[test]
fn commuting_inputs_give_diagonal_smoothing() {
    let (r, s) = sample_pair(Ensemble::ClassicalDirichlet, 4, 2).unwrap();
    let (_, wit) = dv::dtilde_max_witness(&r, &s, 0.3).unwrap();
    let wit = wit.unwrap();
    let out = datta_renner(&r, &s.op().scale(wit.lambda), &wit.q).unwrap();
    assert!(out.g.is_diagonal(1e-12));
    assert!(out.rho_prime.op().is_diagonal(1e-12));
}

#[test]
fn sandwiched_small_order_resolves_tiny_eigenvalues() {
    // reference values from a 60-digit evaluation; at order 0.05 the inner
    // operator has an eigenvalue near 1.8e-22 that still contributes
    let op = |m: [[C64; 2]; 2]| {
        State::new(HermitianOperator::new(CMat::from_fn(2, 2, |i, j| m[i][j])).unwrap()).unwrap()
    };
    let r = op([
        [C64::new(0.5545124482443645, 0.0), C64::new(0.12539057694226946, -0.30044924107202114)],
        [C64::new(0.12539057694226946, 0.30044924107202114), C64::new(0.44548755175563537, 0.0)],
    ]);
    let s = op([
        [C64::new(0.08529508095370622, 0.0), C64::new(-0.004525482710543163, 0.09015892230546214)],
        [C64::new(-0.004525482710543163, -0.09015892230546214), C64::new(0.9147049190462938, 0.0)],
    ]);
    close(v(dv::renyi(&r, &s, 0.05, RenyiKind::Sandwiched)), 0.052_161_337_055_095_775, 1e-9);
    close(v(dv::renyi(&r, &s, 0.3, RenyiKind::Sandwiched)), 0.381_768_678_269_096_92, 1e-10);
    assert!(v(dv::renyi(&r, &s, 0.05, RenyiKind::Sandwiched)) <= v(dv::renyi(&r, &s, 0.05, RenyiKind::Petz)));
}
