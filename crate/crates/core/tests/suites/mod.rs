//! Property suites shared by the core property tests and the acceptance
//! harness. Each suite runs a deterministic proptest runner and reports the
//! first failing case.

#![allow(dead_code)]

use num_complex::Complex64;
use pinnduct::autodiff::{fd_check, Activation, Jet2};
use pinnduct::media::{air_ntp, complex_bessel_j, visco_thermal, PhiConvention};
use pinnduct::network::{Architecture, NetworkParams};
use pinnduct::oracle::{
    meanflow_analytic, narrow_analytic, resonance_frequencies, uniform_analytic, webster_bvp,
};
use pinnduct::physics::{
    residual_helmholtz, residual_meanflow, residual_narrow, residual_webster, AreaProfile, DuctProblem,
    PinnObjective, ProblemKind,
};
use pinnduct::trial::{BoundaryConditions, DuctGeometry, JetField, Parts, TrialField};
use pinnduct::Error;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub type Outcome = Result<(), String>;

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if ok {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

fn lift<T>(r: pinnduct::Result<T>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

fn activation() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::Sin), Just(Activation::Cos), Just(Activation::Tanh)]
}

fn arch(outputs: usize) -> impl Strategy<Value = Architecture> {
    (1usize..4, 1usize..9, activation())
        .prop_map(move |(layers, width, act)| Architecture::new(layers, width, outputs, act).unwrap())
}

fn geometry() -> impl Strategy<Value = DuctGeometry> {
    (-5.0..5.0f64, 0.1..10.0f64).prop_map(|(x1, len)| DuctGeometry::new(x1, x1 + len).unwrap())
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn unit() -> DuctGeometry {
    DuctGeometry::new(0.0, 1.0).unwrap()
}

/// The trial field reproduces both boundary values whatever the network.
pub fn trial_bc_exactness(cases: u32) -> Outcome {
    let strategy = (any::<bool>(), 1usize..4, 1usize..9, activation(), any::<u64>(), geometry(), complex(), complex());
    run(cases, strategy, |(complex_field, layers, width, act, seed, g, p1, p2)| {
        let (parts, bc) = if complex_field {
            (Parts::Complex, BoundaryConditions { p1, p2 })
        } else {
            (Parts::Real, BoundaryConditions::real(p1.re, p2.re))
        };
        let arch = Architecture::new(layers, width, parts.count(), act).unwrap();
        let field = lift(TrialField::new(lift(NetworkParams::init(&arch, seed))?, g, bc, parts))?;
        for (x, want) in [(g.x1, bc.p1), (g.x2, bc.p2)] {
            let got = lift(field.value(x))?;
            let err = (got - want).norm();
            check(err <= 1e-14 * want.norm().max(1.0), || format!("p({x}) = {got}, want {want}"))?;
        }
        Ok(())
    })
}

/// Richardson-extrapolated central difference of `f` at `x`.
fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Jet derivatives agree with finite differences of the jet values.
pub fn jet_vs_finite_difference(cases: u32) -> Outcome {
    let strategy = (arch(2), any::<u64>(), -2.0..2.0f64);
    run(cases, strategy, |(arch, seed, x)| {
        let net = lift(NetworkParams::init(&arch, seed))?;
        let at = |x: f64| net.forward_jet(x).unwrap().parts;
        let jets = at(x);
        for (i, j) in jets.iter().enumerate() {
            let d1 = derivative(|s| at(s)[i].value, x, 1e-3);
            let d2 = derivative(|s| at(s)[i].d1, x, 1e-3);
            for (name, exact, fd) in [("d1", j.d1, d1), ("d2", j.d2, d2)] {
                let scale = exact.abs().max(1e-2);
                check((exact - fd).abs() <= 1e-6 * scale, || {
                    format!("output {i} {name} at x = {x}: jet {exact}, finite difference {fd}")
                })?;
            }
        }
        Ok(())
    })
}

fn problem_kind() -> impl Strategy<Value = ProblemKind> {
    prop_oneof![
        Just(ProblemKind::Uniform),
        (0.01..0.05f64, 0.01..0.05f64).prop_map(|(h, w)| ProblemKind::Webster {
            area: AreaProfile::from_dimensions(h, w, 2.0 * h, 1.5 * w, &unit()).unwrap()
        }),
        (2e-4..5e-3f64).prop_map(|radius| ProblemKind::Narrow {
            radius,
            convention: PhiConvention::Standard
        }),
        (0.0..0.8f64).prop_map(|mach| ProblemKind::Meanflow { mach }),
    ]
}

fn problem(kind: ProblemKind, f: f64) -> DuctProblem {
    let bc = match kind {
        ProblemKind::Uniform | ProblemKind::Webster { .. } => BoundaryConditions::real(1.0, -1.0),
        _ => BoundaryConditions {
            p1: Complex64::new(1.0, 0.2),
            p2: Complex64::new(-1.0, 0.5),
        },
    };
    DuctProblem::new(kind, unit(), bc, f, air_ntp()).unwrap()
}

/// Back-propagated loss gradients agree with central differences of the
/// loss for every objective the trainer builds.
pub fn loss_gradient_vs_finite_difference(cases: u32) -> Outcome {
    let strategy = (problem_kind(), 40.0..600.0f64, 1usize..3, 2usize..6, activation(), any::<u64>(), 0usize..3);
    run(cases, strategy, |(kind, f, layers, width, act, seed, which)| {
        let p = problem(kind, f);
        let xs: Vec<f64> = (1..=7).map(|i| i as f64 / 8.0).collect();
        let outputs = p.parts().count();
        let objective = match which {
            0 => lift(PinnObjective::pressure(&p, Architecture::new(layers, width, outputs, act).unwrap(), xs))?,
            1 => lift(PinnObjective::lagrange(&p, Architecture::new(layers, width, outputs, act).unwrap(), xs, [1.0, 0.5]))?,
            _ => {
                let reference = lift(uniform_analytic(&unit(), &BoundaryConditions::real(1.0, -1.0), p.k(), &p.medium))?;
                let up = problem(ProblemKind::Meanflow { mach: p.mach() }, f);
                lift(PinnObjective::velocity(&up, &reference, Architecture::new(layers, width, 2, act).unwrap(), xs))?
            }
        };
        let arch = objective.arch().clone();
        let params = lift(NetworkParams::init(&arch, seed))?;
        let worst = lift(fd_check(&objective, params.as_slice(), 1e-3))?;
        check(worst < 1e-5, || format!("{} gradient deviates by {worst:e} (relative)", p.kind.name()))
    })
}

/// Residual of a jet triple relative to the size of its terms.
fn relative_residual(r: f64, jets: &[Jet2], k2: f64) -> f64 {
    let scale: f64 = jets.iter().map(|j| j.d2.abs() + k2 * j.value.abs()).sum();
    r.abs() / scale.max(f64::MIN_POSITIVE)
}

fn off_resonance(f: f64) -> bool {
    let spacing = 170.0;
    let n = (f / spacing).round();
    n == 0.0 || (f - n * spacing).abs() > 0.01 * f
}

/// Closed-form and numerical reference solutions satisfy their own equations.
pub fn oracle_residuals(cases: u32) -> Outcome {
    let air = air_ntp();
    let strategy = (50.0..2000.0f64, 0.0..0.8f64, 2e-4..5e-3f64, 0.001..0.999f64, complex(), complex());
    let closed = run(cases, strategy, |(f, mach, radius, x, p1, p2)| {
        prop_assume!(off_resonance(f));
        let k = air.wavenumber(f);
        let real_bc = BoundaryConditions::real(p1.re, p2.re);
        let bc = BoundaryConditions { p1, p2 };
        let u = lift(uniform_analytic(&unit(), &real_bc, k, &air))?;
        let r = lift(residual_helmholtz(&u, k, x))?;
        let rel = relative_residual(r, &lift(u.jets(x))?, k * k);
        check(rel < 1e-9, || format!("uniform residual {rel:e} at f = {f}, x = {x}"))?;

        let m = lift(meanflow_analytic(&unit(), &bc, k, mach, &air))?;
        let (rr, ri) = lift(residual_meanflow(&m, k, mach, x))?;
        let jets = lift(m.jets(x))?;
        let rel = relative_residual(rr.hypot(ri), &jets, k * k);
        check(rel < 1e-9, || format!("meanflow residual {rel:e} at f = {f}, M = {mach}, x = {x}"))?;

        let state = lift(visco_thermal(&air, f, radius, PhiConvention::Standard))?;
        let n = lift(narrow_analytic(&unit(), &bc, &state, &air))?;
        let (rr, ri) = lift(residual_narrow(&n, state.k_w, x))?;
        let rel = relative_residual(rr.hypot(ri), &lift(n.jets(x))?, state.k_w.norm_sqr());
        check(rel < 1e-9, || format!("narrow residual {rel:e} at f = {f}, a = {radius}, x = {x}"))
    });
    closed?;
    let strategy = (100.0..1000.0f64, 0.005..0.05f64, 0.005..0.05f64, 0.3..3.0f64, 0.01..0.99f64);
    run(cases.div_ceil(8), strategy, |(f, h, w, growth, x)| {
        prop_assume!(off_resonance(f));
        let k = air.wavenumber(f);
        let area = lift(AreaProfile::from_dimensions(h, w, growth * h, growth * w, &unit()))?;
        let bc = BoundaryConditions::real(1.0, -1.0);
        let grid = match webster_bvp(&unit(), &bc, &area, k, 4096, &air) {
            Err(Error::Resonance { .. }) => return Err(TestCaseError::reject("resonant horn")),
            other => lift(other)?,
        };
        let r = lift(residual_webster(&grid, &area, k, x))?;
        let rel = relative_residual(r, &lift(grid.jets(x))?, k * k);
        check(rel < 1e-4, || format!("webster residual {rel:e} at f = {f}, x = {x}"))
    })
}

/// Each extended operator collapses onto the Helmholtz operator.
pub fn reduction_identities(cases: u32) -> Outcome {
    let strategy = (any::<u64>(), 0.1..40.0f64, 1e-4..1.0f64, 0.0..1.0f64, complex(), complex());
    run(cases, strategy, |(seed, k, s, x, p1, p2)| {
        let arch = Architecture::new(2, 6, 2, Activation::Tanh).unwrap();
        let field = lift(TrialField::new(
            lift(NetworkParams::init(&arch, seed))?,
            unit(),
            BoundaryConditions { p1, p2 },
            Parts::Complex,
        ))?;
        let jets = lift(field.jets(x))?;
        let h: Vec<f64> = jets.iter().map(|j| j.d2 + k * k * j.value).collect();
        let tol = |i: usize| 1e-12 * (jets[i].d2.abs() + k * k * jets[i].value.abs()).max(1.0);
        let (r, i) = lift(residual_narrow(&field, Complex64::new(k, 0.0), x))?;
        check((r - h[0]).abs() <= tol(0) && (i - h[1]).abs() <= tol(1), || format!("narrow k_I = 0: {r}, {i} vs {h:?}"))?;
        let (r, i) = lift(residual_meanflow(&field, k, 0.0, x))?;
        check((r - h[0]).abs() <= tol(0) && (i - h[1]).abs() <= tol(1), || format!("meanflow M = 0: {r}, {i} vs {h:?}"))?;

        let real_arch = Architecture::new(2, 6, 1, Activation::Sin).unwrap();
        let real = lift(TrialField::new(
            lift(NetworkParams::init(&real_arch, seed))?,
            unit(),
            BoundaryConditions::real(p1.re, p2.re),
            Parts::Real,
        ))?;
        let w = lift(residual_webster(&real, &AreaProfile::constant(s), k, x))?;
        let hz = lift(residual_helmholtz(&real, k, x))?;
        let j = &lift(real.jets(x))?[0];
        let tol = 1e-12 * (j.d2.abs() + k * k * j.value.abs()).max(1.0);
        check((w - hz).abs() <= tol, || format!("webster S' = 0: {w} vs {hz}"))
    })
}

fn max_grid_error(grid_intervals: usize, area: &AreaProfile, k: f64, reference: &dyn Fn(f64) -> Complex64) -> f64 {
    let air = air_ntp();
    let bc = BoundaryConditions::real(1.0, -1.0);
    let grid = webster_bvp(&unit(), &bc, area, k, grid_intervals, &air).unwrap();
    grid.xs
        .iter()
        .zip(&grid.p)
        .map(|(&x, p)| (p - reference(x)).norm())
        .fold(0.0, f64::max)
}

/// Observed order of the Webster grid solver between 256 and 512 intervals,
/// against the closed form on a flat duct and against a 4096-interval solution
/// on a flared one.
pub fn webster_convergence_rates() -> Result<Vec<f64>, String> {
    let air = air_ntp();
    let k = air.wavenumber(500.0);
    let bc = BoundaryConditions::real(1.0, -1.0);
    let flat = AreaProfile::constant(1.0);
    let exact = uniform_analytic(&unit(), &bc, k, &air).map_err(|e| e.to_string())?;
    let flat_ref = |x: f64| exact.pressure(x);
    let flat_rate = (max_grid_error(256, &flat, k, &flat_ref) / max_grid_error(512, &flat, k, &flat_ref)).log2();

    let horn = AreaProfile::from_dimensions(0.01, 0.02, 0.03, 0.06, &unit()).map_err(|e| e.to_string())?;
    let fine = webster_bvp(&unit(), &bc, &horn, k, 4096, &air).map_err(|e| e.to_string())?;
    let horn_ref = |x: f64| fine.value(x).unwrap();
    let horn_rate = (max_grid_error(256, &horn, k, &horn_ref) / max_grid_error(512, &horn, k, &horn_ref)).log2();
    Ok(vec![flat_rate, horn_rate])
}

pub fn webster_fourth_order() -> Outcome {
    let rates = webster_convergence_rates()?;
    if rates.iter().all(|r| (3.5..=4.5).contains(r)) {
        Ok(())
    } else {
        Err(format!("observed rates {rates:?}"))
    }
}

/// `J_{n-1}(z) + J_{n+1}(z) = (2n/z) J_n(z)` over the arguments the narrow
/// duct model produces (along `(1 - j)`) and a general disc.
pub fn bessel_recurrence(cases: u32) -> Outcome {
    let along = (0.01..35.0f64).prop_map(|r| Complex64::from_polar(r, -std::f64::consts::FRAC_PI_4));
    let disc = (0.01..10.0f64, -std::f64::consts::PI..std::f64::consts::PI).prop_map(|(r, t)| Complex64::from_polar(r, t));
    let strategy = (prop_oneof![along, disc], 1u32..6);
    run(cases, strategy, |(z, n)| {
        let j = |m: u32| lift(complex_bessel_j(m, z));
        let lhs = j(n - 1)? + j(n + 1)?;
        let rhs = j(n)? * (2.0 * n as f64) / z;
        let scale = j(n - 1)?.norm() + j(n + 1)?.norm() + rhs.norm();
        check((lhs - rhs).norm() <= 1e-9 * scale, || format!("n = {n}, z = {z}: {lhs} vs {rhs}"))
    })
}

pub fn resonance_list_has_1020() -> Outcome {
    let f = resonance_frequencies(&unit(), 340.0, 10).map_err(|e| e.to_string())?;
    if f.contains(&1020.0) {
        Ok(())
    } else {
        Err(format!("resonances {f:?}"))
    }
}

/// Every suite of the property group, with its case budget.
pub fn all(scale: u32) -> Vec<(&'static str, Box<dyn Fn() -> Outcome>)> {
    vec![
        ("trial boundary exactness", Box::new(move || trial_bc_exactness(64 * scale))),
        ("jet vs finite difference", Box::new(move || jet_vs_finite_difference(32 * scale))),
        ("loss gradient vs finite difference", Box::new(move || loss_gradient_vs_finite_difference(16 * scale))),
        ("oracle residuals", Box::new(move || oracle_residuals(64 * scale))),
        ("reduction identities", Box::new(move || reduction_identities(64 * scale))),
        ("webster fourth-order convergence", Box::new(webster_fourth_order)),
        ("bessel recurrence", Box::new(move || bessel_recurrence(128 * scale))),
        ("resonance list", Box::new(resonance_list_has_1020)),
    ]
}
