mod suites;

use num_complex::Complex64;
use pinnduct::autodiff::{Activation, Objective};
use pinnduct::format::fmt_float;
use pinnduct::media::air_ntp;
use pinnduct::metrics::relative_error;
use pinnduct::network::io::{decode, encode};
use pinnduct::network::{Architecture, NetworkParams};
use pinnduct::physics::{DuctProblem, PinnObjective, ProblemKind};
use pinnduct::trainer::{lbfgs_minimize, LbfgsConfig};
use pinnduct::trial::{BoundaryConditions, DuctGeometry};
use proptest::prelude::*;

fn pass(outcome: suites::Outcome) {
    if let Err(e) = outcome {
        panic!("{e}");
    }
}

#[test]
fn trial_bc_exactness() {
    pass(suites::trial_bc_exactness(256));
}

#[test]
fn jet_vs_finite_difference() {
    pass(suites::jet_vs_finite_difference(128));
}

#[test]
fn loss_gradient_vs_finite_difference() {
    pass(suites::loss_gradient_vs_finite_difference(48));
}

#[test]
fn oracle_residuals() {
    pass(suites::oracle_residuals(256));
}

#[test]
fn reduction_identities() {
    pass(suites::reduction_identities(256));
}

#[test]
fn webster_fourth_order() {
    pass(suites::webster_fourth_order());
}

#[test]
fn bessel_recurrence() {
    pass(suites::bessel_recurrence(512));
}

#[test]
fn resonance_list() {
    pass(suites::resonance_list_has_1020());
}

fn unit() -> DuctGeometry {
    DuctGeometry::new(0.0, 1.0).unwrap()
}

fn small_arch() -> impl Strategy<Value = Architecture> {
    (1usize..3, 1usize..7, prop_oneof![Just(Activation::Sin), Just(Activation::Cos), Just(Activation::Tanh)])
        .prop_map(|(l, w, a)| Architecture::new(l, w, 1, a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn loss_ignores_collocation_order(arch in small_arch(), seed: u64, f in 50.0..600.0f64, shift in 1usize..9) {
        let problem = DuctProblem::new(ProblemKind::Uniform, unit(), BoundaryConditions::real(1.0, -1.0), f, air_ntp()).unwrap();
        let xs: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let mut rotated = xs.clone();
        rotated.rotate_left(shift);
        rotated.reverse();
        let params = NetworkParams::init(&arch, seed).unwrap();
        let a = PinnObjective::pressure(&problem, arch.clone(), xs).unwrap().evaluate(params.as_slice()).unwrap();
        let b = PinnObjective::pressure(&problem, arch, rotated).unwrap().evaluate(params.as_slice()).unwrap();
        prop_assert!((a.loss - b.loss).abs() <= 1e-12 * a.loss.abs().max(1e-300));
        for (ga, gb) in a.gradient.iter().zip(&b.gradient) {
            prop_assert!((ga - gb).abs() <= 1e-10 * (ga.abs() + 1e-12 * a.loss));
        }
    }

    #[test]
    fn lbfgs_loss_never_increases(arch in small_arch(), seed: u64, f in 50.0..600.0f64) {
        let problem = DuctProblem::new(ProblemKind::Uniform, unit(), BoundaryConditions::real(1.0, -1.0), f, air_ntp()).unwrap();
        let xs: Vec<f64> = (1..=16).map(|i| i as f64 / 17.0).collect();
        let objective = PinnObjective::pressure(&problem, arch.clone(), xs).unwrap();
        let theta0 = NetworkParams::init(&arch, seed).unwrap();
        let config = LbfgsConfig { max_iterations: 25, tolerance: 0.0, ..LbfgsConfig::default() };
        let result = lbfgs_minimize(&objective, theta0.as_slice(), &config).unwrap();
        for pair in result.history.windows(2) {
            prop_assert!(pair[1].loss <= pair[0].loss);
        }
        prop_assert_eq!(objective.value(&result.params).unwrap(), result.final_entry().loss);
    }

    #[test]
    fn params_round_trip(arch in small_arch(), seed: u64) {
        let params = NetworkParams::init(&arch, seed).unwrap();
        let back = decode(&encode(&params)).unwrap();
        prop_assert_eq!(&back.arch, &params.arch);
        prop_assert_eq!(back.as_slice(), params.as_slice());
    }

    #[test]
    fn float_format_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_float(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn relative_error_is_scale_invariant(a in 0.1..5.0f64, b in -1.0..1.0f64, s in 1e-3..1e3f64) {
        let truth = |x: f64| Ok(Complex64::new((a * x).sin() + 1.5, b * x));
        let pred = |x: f64| Ok(Complex64::new((a * x).sin() + 1.5 + 0.01 * x, b * x * 1.1));
        let base = relative_error(pred, truth, &unit(), 101).unwrap().delta;
        let scaled = relative_error(|x| pred(x).map(|v| v * s), |x| truth(x).map(|v| v * s), &unit(), 101).unwrap().delta;
        prop_assert!((base - scaled).abs() <= 1e-12 * base);
    }
}
