//! Reference solutions: closed forms for uniform, narrow and mean-flow ducts,
//! and a shooting solver for the Webster equation.

pub mod bvp;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::autodiff::Jet2;
use crate::error::{Error, Result};
use crate::media::{MediumProperties, ViscoThermalState};
use crate::physics::{AreaProfile, DuctProblem, ProblemKind};
use crate::trial::{BoundaryConditions, DuctGeometry, JetField};

pub use bvp::{solve_linear_bvp, GridSolution, MIN_GRID};

/// Threshold on the modulus of the characteristic denominator.
pub const RESONANCE_THRESHOLD: f64 = 1e-8;

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Standing-wave solution `p = C1 cos(kx) + C2 sin(kx)` with possibly complex
/// `k` and impedance `z`; velocity `u = -(j/z)(C1 sin(kx) - C2 cos(kx))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StandingWave {
    pub k: Complex64,
    pub impedance: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
    pub parts: usize,
}

/// Convected waves `p = C1 e^{-j k⁺ x} + C2 e^{j k⁻ x}` with
/// `k⁺ = k/(1+M)`, `k⁻ = k/(1-M)`; velocity coefficients `D1 = C1/ρc`,
/// `D2 = -C2/ρc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvectedWave {
    pub k_plus: f64,
    pub k_minus: f64,
    pub c1: Complex64,
    pub c2: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

/// Resonance frequencies `n·c/(2L)` of a duct with pressure prescribed at
/// both ends, `n = 1..=n_max`.
pub fn resonance_frequencies(geometry: &DuctGeometry, c: f64, n_max: usize) -> Result<Vec<f64>> {
    geometry.validate()?;
    if n_max == 0 {
        return Err(Error::config("need at least one resonance"));
    }
    Ok((1..=n_max).map(|n| n as f64 * c / (2.0 * geometry.length())).collect())
}

/// The sequence `n·c/L` as printed alongside the resonance condition in the
/// reference tables; every other member of [`resonance_frequencies`].
pub fn printed_resonance_frequencies(geometry: &DuctGeometry, c: f64, n_max: usize) -> Result<Vec<f64>> {
    geometry.validate()?;
    Ok((1..=n_max).map(|n| n as f64 * c / geometry.length()).collect())
}

/// Resonance frequency closest to `f`.
pub fn nearest_resonance(geometry: &DuctGeometry, c: f64, f: f64) -> f64 {
    let spacing = c / (2.0 * geometry.length());
    (f / spacing).round().max(1.0) * spacing
}

fn resonance_error(geometry: &DuctGeometry, c: f64, f: f64, denominator: f64) -> Error {
    Error::Resonance {
        frequency: f,
        denominator,
        nearest: nearest_resonance(geometry, c, f),
    }
}

fn standing(
    geometry: &DuctGeometry,
    bc: &BoundaryConditions,
    k: Complex64,
    impedance: Complex64,
    on_singular: impl Fn(f64) -> Error,
) -> Result<StandingWave> {
    geometry.validate()?;
    bc.validate()?;
    let (x1, x2) = (geometry.x1, geometry.x2);
    let s = (k * geometry.length()).sin();
    if s.norm() <= RESONANCE_THRESHOLD {
        return Err(on_singular(s.norm()));
    }
    let c1 = (bc.p1 * (k * x2).sin() - bc.p2 * (k * x1).sin()) / s;
    let c2 = (bc.p1 * (k * x2).cos() - bc.p2 * (k * x1).cos()) / (-s);
    let parts = if k.im == 0.0 && bc.is_real() { 1 } else { 2 };
    Ok(StandingWave {
        k,
        impedance,
        c1,
        c2,
        parts,
    })
}

/// Lossless uniform duct.
pub fn uniform_analytic(
    geometry: &DuctGeometry,
    bc: &BoundaryConditions,
    k: f64,
    medium: &MediumProperties,
) -> Result<StandingWave> {
    let f = k * medium.c / (2.0 * PI);
    standing(
        geometry,
        bc,
        Complex64::new(k, 0.0),
        Complex64::new(medium.impedance(), 0.0),
        |d| resonance_error(geometry, medium.c, f, d),
    )
}

/// Narrow duct: the uniform solution with `k → k_w`, `ρc → z_w`.
pub fn narrow_analytic(
    geometry: &DuctGeometry,
    bc: &BoundaryConditions,
    state: &ViscoThermalState,
    medium: &MediumProperties,
) -> Result<StandingWave> {
    standing(geometry, bc, state.k_w, state.z_w, |d| {
        resonance_error(geometry, medium.c, state.frequency, d)
    })
}

impl StandingWave {
    pub fn pressure_jet(&self, x: f64) -> [Complex64; 3] {
        let (s, c) = ((self.k * x).sin(), (self.k * x).cos());
        let p = self.c1 * c + self.c2 * s;
        let dp = self.k * (self.c2 * c - self.c1 * s);
        [p, dp, -self.k * self.k * p]
    }

    pub fn pressure(&self, x: f64) -> Complex64 {
        self.pressure_jet(x)[0]
    }

    pub fn velocity(&self, x: f64) -> Complex64 {
        let (s, c) = ((self.k * x).sin(), (self.k * x).cos());
        -J / self.impedance * (self.c1 * s - self.c2 * c)
    }

    pub fn velocity_derivative(&self, x: f64) -> Complex64 {
        let (s, c) = ((self.k * x).sin(), (self.k * x).cos());
        -J / self.impedance * self.k * (self.c1 * c + self.c2 * s)
    }
}

/// Uniform duct with mean flow of Mach number `mach`.
pub fn meanflow_analytic(
    geometry: &DuctGeometry,
    bc: &BoundaryConditions,
    k: f64,
    mach: f64,
    medium: &MediumProperties,
) -> Result<ConvectedWave> {
    geometry.validate()?;
    bc.validate()?;
    if !(0.0..1.0).contains(&mach) {
        return Err(Error::config(format!("Mach number must satisfy 0 <= M < 1, got {mach}")));
    }
    let k_plus = k / (1.0 + mach);
    let k_minus = k / (1.0 - mach);
    let e_plus = |x: f64| (-J * k_plus * x).exp();
    let e_minus = |x: f64| (J * k_minus * x).exp();
    let (x1, x2) = (geometry.x1, geometry.x2);
    // [e+(x1) e-(x1); e+(x2) e-(x2)] [C1; C2] = [p1; p2]
    let det = e_plus(x1) * e_minus(x2) - e_minus(x1) * e_plus(x2);
    if det.norm() <= RESONANCE_THRESHOLD {
        let f = k * medium.c / (2.0 * PI);
        return Err(Error::Resonance {
            frequency: f,
            denominator: det.norm(),
            nearest: nearest_resonance(geometry, medium.c * (1.0 - mach * mach), f),
        });
    }
    let c1 = (bc.p1 * e_minus(x2) - bc.p2 * e_minus(x1)) / det;
    let c2 = (bc.p2 * e_plus(x1) - bc.p1 * e_plus(x2)) / det;
    let rho_c = medium.impedance();
    Ok(ConvectedWave {
        k_plus,
        k_minus,
        c1,
        c2,
        d1: c1 / rho_c,
        d2: -c2 / rho_c,
    })
}

impl ConvectedWave {
    pub fn pressure_jet(&self, x: f64) -> [Complex64; 3] {
        let a = self.c1 * (-J * self.k_plus * x).exp();
        let b = self.c2 * (J * self.k_minus * x).exp();
        [
            a + b,
            -J * self.k_plus * a + J * self.k_minus * b,
            -(self.k_plus * self.k_plus) * a - (self.k_minus * self.k_minus) * b,
        ]
    }

    pub fn pressure(&self, x: f64) -> Complex64 {
        self.pressure_jet(x)[0]
    }

    pub fn velocity(&self, x: f64) -> Complex64 {
        self.d1 * (-J * self.k_plus * x).exp() + self.d2 * (J * self.k_minus * x).exp()
    }

    pub fn velocity_derivative(&self, x: f64) -> Complex64 {
        -J * self.k_plus * self.d1 * (-J * self.k_plus * x).exp()
            + J * self.k_minus * self.d2 * (J * self.k_minus * x).exp()
    }
}

/// Webster horn solution on `intervals + 1` nodes.
pub fn webster_bvp(
    geometry: &DuctGeometry,
    bc: &BoundaryConditions,
    area: &AreaProfile,
    k: f64,
    intervals: usize,
    medium: &MediumProperties,
) -> Result<GridSolution> {
    area.check_positive(geometry)?;
    let k2 = Complex64::new(k * k, 0.0);
    let f = k * medium.c / (2.0 * PI);
    solve_linear_bvp(
        geometry,
        bc,
        intervals,
        |x| Ok((Complex64::new(area.log_slope(x)?, 0.0), k2)),
        |d| resonance_error(geometry, medium.c, f, d),
    )
}

fn split(v: [Complex64; 3], parts: usize) -> Vec<Jet2> {
    let mut out = vec![Jet2::new(v[0].re, v[1].re, v[2].re)];
    if parts == 2 {
        out.push(Jet2::new(v[0].im, v[1].im, v[2].im));
    }
    out
}

impl JetField for StandingWave {
    fn part_count(&self) -> usize {
        self.parts
    }

    fn jets(&self, x: f64) -> Result<Vec<Jet2>> {
        Ok(split(self.pressure_jet(x), self.parts))
    }
}

impl JetField for ConvectedWave {
    fn part_count(&self) -> usize {
        2
    }

    fn jets(&self, x: f64) -> Result<Vec<Jet2>> {
        Ok(split(self.pressure_jet(x), 2))
    }
}

/// Velocity of an analytic solution as a two-part field.
#[derive(Debug, Clone, Copy)]
pub struct VelocityOf<'a, T>(pub &'a T);

impl JetField for VelocityOf<'_, StandingWave> {
    fn part_count(&self) -> usize {
        2
    }

    fn jets(&self, x: f64) -> Result<Vec<Jet2>> {
        let w = self.0;
        let v = [w.velocity(x), w.velocity_derivative(x), -w.k * w.k * w.velocity(x)];
        Ok(split(v, 2))
    }
}

impl JetField for VelocityOf<'_, ConvectedWave> {
    fn part_count(&self) -> usize {
        2
    }

    fn jets(&self, x: f64) -> Result<Vec<Jet2>> {
        let w = self.0;
        let a = w.d1 * (-J * w.k_plus * x).exp();
        let b = w.d2 * (J * w.k_minus * x).exp();
        let v = [
            a + b,
            w.velocity_derivative(x),
            -(w.k_plus * w.k_plus) * a - (w.k_minus * w.k_minus) * b,
        ];
        Ok(split(v, 2))
    }
}

/// Reference solution of any supported problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Standing(StandingWave),
    Convected(ConvectedWave),
    Grid(GridSolution),
}

/// Grid used for the Webster reference when none is given.
pub const DEFAULT_WEBSTER_GRID: usize = 4096;

impl Reference {
    pub fn for_problem(problem: &DuctProblem, webster_grid: usize) -> Result<Self> {
        problem.validate()?;
        let (g, bc, m) = (&problem.geometry, &problem.bc, &problem.medium);
        Ok(match problem.kind {
            ProblemKind::Uniform => Reference::Standing(uniform_analytic(g, bc, problem.k(), m)?),
            ProblemKind::Webster { area } => {
                Reference::Grid(webster_bvp(g, bc, &area, problem.k(), webster_grid, m)?)
            }
            ProblemKind::Narrow { .. } => {
                let state = problem.visco_thermal().expect("narrow problem")?;
                Reference::Standing(narrow_analytic(g, bc, &state, m)?)
            }
            ProblemKind::Meanflow { mach } => Reference::Convected(meanflow_analytic(g, bc, problem.k(), mach, m)?),
        })
    }

    pub fn pressure(&self, x: f64) -> Result<Complex64> {
        match self {
            Reference::Standing(w) => Ok(w.pressure(x)),
            Reference::Convected(w) => Ok(w.pressure(x)),
            Reference::Grid(g) => g.value(x),
        }
    }

    /// Particle velocity, where a closed form exists.
    pub fn velocity(&self, x: f64) -> Option<Complex64> {
        match self {
            Reference::Standing(w) => Some(w.velocity(x)),
            Reference::Convected(w) => Some(w.velocity(x)),
            Reference::Grid(_) => None,
        }
    }
}

impl JetField for Reference {
    fn part_count(&self) -> usize {
        match self {
            Reference::Standing(w) => w.part_count(),
            Reference::Convected(w) => w.part_count(),
            Reference::Grid(g) => g.part_count(),
        }
    }

    fn jets(&self, x: f64) -> Result<Vec<Jet2>> {
        match self {
            Reference::Standing(w) => w.jets(x),
            Reference::Convected(w) => w.jets(x),
            Reference::Grid(g) => g.jets(x),
        }
    }
}
