//! Linear two-point boundary value problems `p'' + a(x) p' + b(x) p = 0` with
//! Dirichlet data, solved by superposing two RK4 initial-value solutions.

use num_complex::Complex64;

use crate::autodiff::Jet2;
use crate::error::{Error, Result};
use crate::trial::{BoundaryConditions, DuctGeometry, JetField};

/// Below this modulus the shooting combination is treated as singular.
pub const SHOOTING_SINGULAR: f64 = 1e-8;

pub const MIN_GRID: usize = 64;

/// Grid samples of `p`, `p'` and `p''` with a piecewise quintic Hermite
/// interpolant between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub xs: Vec<f64>,
    pub p: Vec<Complex64>,
    pub dp: Vec<Complex64>,
    pub d2p: Vec<Complex64>,
    /// Reported part count when used as a [`JetField`].
    pub parts: usize,
}

type State = [Complex64; 2];

fn rk4_step(f: &impl Fn(f64, State) -> Result<State>, x: f64, y: State, h: f64) -> Result<State> {
    let add = |y: State, k: State, s: f64| [y[0] + k[0] * s, y[1] + k[1] * s];
    let k1 = f(x, y)?;
    let k2 = f(x + h / 2.0, add(y, k1, h / 2.0))?;
    let k3 = f(x + h / 2.0, add(y, k2, h / 2.0))?;
    let k4 = f(x + h, add(y, k3, h))?;
    Ok([
        y[0] + (k1[0] + (k2[0] + k3[0]) * 2.0 + k4[0]) * (h / 6.0),
        y[1] + (k1[1] + (k2[1] + k3[1]) * 2.0 + k4[1]) * (h / 6.0),
    ])
}

/// Solves on `intervals + 1` equispaced nodes. `coeffs(x)` returns `(a, b)`.
/// A singular combination is reported through `on_singular`, which receives
/// the modulus of the shooting denominator.
pub fn solve_linear_bvp(
    geometry: &DuctGeometry,
    bc: &BoundaryConditions,
    intervals: usize,
    coeffs: impl Fn(f64) -> Result<(Complex64, Complex64)>,
    on_singular: impl Fn(f64) -> Error,
) -> Result<GridSolution> {
    geometry.validate()?;
    if intervals < MIN_GRID {
        return Err(Error::config(format!("grid needs at least {MIN_GRID} intervals, got {intervals}")));
    }
    let rhs = |x: f64, y: State| -> Result<State> {
        let (a, b) = coeffs(x)?;
        Ok([y[1], -a * y[1] - b * y[0]])
    };
    let xs = geometry.linspace(intervals + 1);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut ya = vec![[one, zero]];
    let mut yb = vec![[zero, one]];
    for w in xs.windows(2) {
        let h = w[1] - w[0];
        ya.push(rk4_step(&rhs, w[0], *ya.last().unwrap(), h)?);
        yb.push(rk4_step(&rhs, w[0], *yb.last().unwrap(), h)?);
    }
    let end_b = yb.last().unwrap()[0];
    if end_b.norm() <= SHOOTING_SINGULAR {
        return Err(on_singular(end_b.norm()));
    }
    let slope = (bc.p2 - bc.p1 * ya.last().unwrap()[0]) / end_b;
    let mut p = Vec::with_capacity(xs.len());
    let mut dp = Vec::with_capacity(xs.len());
    let mut d2p = Vec::with_capacity(xs.len());
    for ((x, a), b) in xs.iter().zip(&ya).zip(&yb) {
        let v = a[0] * bc.p1 + b[0] * slope;
        let d = a[1] * bc.p1 + b[1] * slope;
        let (ca, cb) = coeffs(*x)?;
        p.push(v);
        dp.push(d);
        d2p.push(-ca * d - cb * v);
    }
    // the combination meets p(x2) up to rounding; pin both ends exactly
    p[0] = bc.p1;
    *p.last_mut().unwrap() = bc.p2;
    let parts = if bc.is_real() && p.iter().all(|v| v.im == 0.0) { 1 } else { 2 };
    Ok(GridSolution { xs, p, dp, d2p, parts })
}

// Quintic Hermite basis on t in [0, 1], as polynomial coefficients
// (ascending powers) for f0, f0', f0'', f1, f1', f1''.
const BASIS: [[f64; 6]; 6] = [
    [1.0, 0.0, 0.0, -10.0, 15.0, -6.0],
    [0.0, 1.0, 0.0, -6.0, 8.0, -3.0],
    [0.0, 0.0, 0.5, -1.5, 1.5, -0.5],
    [0.0, 0.0, 0.0, 10.0, -15.0, 6.0],
    [0.0, 0.0, 0.0, -4.0, 7.0, -3.0],
    [0.0, 0.0, 0.0, 0.5, -1.0, 0.5],
];

fn poly(c: &[f64; 6], t: f64) -> [f64; 3] {
    let mut v = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for k in (0..6).rev() {
        d2 = d2 * t + d1 * 2.0;
        d1 = d1 * t + v;
        v = v * t + c[k];
    }
    [v, d1, d2]
}

impl GridSolution {
    fn interval(&self, x: f64) -> Result<usize> {
        let (lo, hi) = (self.xs[0], *self.xs.last().unwrap());
        if !(x >= lo && x <= hi) {
            return Err(Error::config(format!("x = {x} outside the grid [{lo}, {hi}]")));
        }
        let h = (hi - lo) / (self.xs.len() - 1) as f64;
        Ok((((x - lo) / h) as usize).min(self.xs.len() - 2))
    }

    /// Interpolated `(p, p', p'')` at `x`.
    pub fn eval(&self, x: f64) -> Result<[Complex64; 3]> {
        let i = self.interval(x)?;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let data = [
            self.p[i],
            self.dp[i] * h,
            self.d2p[i] * (h * h),
            self.p[i + 1],
            self.dp[i + 1] * h,
            self.d2p[i + 1] * (h * h),
        ];
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (basis, f) in BASIS.iter().zip(data) {
            let b = poly(basis, t);
            out[0] += f * b[0];
            out[1] += f * (b[1] / h);
            out[2] += f * (b[2] / (h * h));
        }
        Ok(out)
    }

    pub fn value(&self, x: f64) -> Result<Complex64> {
        Ok(self.eval(x)?[0])
    }
}

impl JetField for GridSolution {
    fn part_count(&self) -> usize {
        self.parts
    }

    fn jets(&self, x: f64) -> Result<Vec<Jet2>> {
        let [v, d1, d2] = self.eval(x)?;
        let mut out = vec![Jet2::new(v.re, d1.re, d2.re)];
        if self.parts == 2 {
            out.push(Jet2::new(v.im, d1.im, d2.im));
        }
        Ok(out)
    }
}
