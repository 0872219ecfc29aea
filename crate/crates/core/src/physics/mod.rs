//! Governing equations as residuals of trial fields, and the losses built
//! from them.
//!
//! Every residual here is affine in the field jets: row `r` of the residual
//! at `x` is `Σ_j c_rj · (p_j, p_j', p_j'') + s_r`. [`Operator`] holds the
//! coefficients, which the pointwise functions and the batched
//! [`PinnObjective`] share.

mod objective;

pub use objective::{LossTerm, PinnObjective, TermEvaluation, Wrap, DEFAULT_CHUNK};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::autodiff::Jet2;
use crate::error::{Error, Result};
use crate::media::{visco_thermal, MediumProperties, PhiConvention, ViscoThermalState};
use crate::network::NetworkParams;
use crate::trial::{BoundaryConditions, DuctGeometry, JetField, Parts, RawField};

/// Quadratic cross-section `S(x) = S0 + S1·x + S2·x²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaProfile {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
}

impl AreaProfile {
    pub fn constant(s: f64) -> Self {
        Self { s0: s, s1: 0.0, s2: 0.0 }
    }

    /// Rectangular duct whose half-height and half-width vary linearly from
    /// `(h1, w1)` at `x1` to `(h2, w2)` at `x2`, so `S = 4·h·w`.
    pub fn from_dimensions(h1: f64, w1: f64, h2: f64, w2: f64, geometry: &DuctGeometry) -> Result<Self> {
        geometry.validate()?;
        let l = geometry.length();
        let m_h = (h2 - h1) / l;
        let m_w = (w2 - w1) / l;
        // shift so the polynomial is in absolute x
        let h0 = h1 - m_h * geometry.x1;
        let w0 = w1 - m_w * geometry.x1;
        let area = Self {
            s0: 4.0 * h0 * w0,
            s1: 4.0 * (h0 * m_w + w0 * m_h),
            s2: 4.0 * m_h * m_w,
        };
        area.check_positive(geometry)?;
        Ok(area)
    }

    pub fn area(&self, x: f64) -> f64 {
        self.s0 + x * (self.s1 + x * self.s2)
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.s1 + 2.0 * self.s2 * x
    }

    /// `S'/S` at `x`, or a domain error where `S(x) ≤ 0`.
    pub fn log_slope(&self, x: f64) -> Result<f64> {
        let s = self.area(x);
        if !(s > 0.0) {
            return Err(Error::Domain(format!("cross-section S({x}) = {s} is not positive")));
        }
        Ok(self.slope(x) / s)
    }

    /// Errors unless `S > 0` on all of `[x1, x2]` (endpoints and interior
    /// extremum).
    pub fn check_positive(&self, geometry: &DuctGeometry) -> Result<()> {
        let mut probes = vec![geometry.x1, geometry.x2];
        if self.s2 != 0.0 {
            let xm = -self.s1 / (2.0 * self.s2);
            if xm > geometry.x1 && xm < geometry.x2 {
                probes.push(xm);
            }
        }
        for x in probes {
            self.log_slope(x)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemKind {
    Uniform,
    Webster {
        area: AreaProfile,
    },
    Narrow {
        radius: f64,
        #[serde(default)]
        convention: PhiConvention,
    },
    Meanflow {
        mach: f64,
    },
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Uniform => "uniform",
            ProblemKind::Webster { .. } => "webster",
            ProblemKind::Narrow { .. } => "narrow",
            ProblemKind::Meanflow { .. } => "meanflow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuctProblem {
    pub kind: ProblemKind,
    pub geometry: DuctGeometry,
    pub bc: BoundaryConditions,
    /// Frequency in Hz.
    pub frequency: f64,
    pub medium: MediumProperties,
}

impl DuctProblem {
    pub fn new(
        kind: ProblemKind,
        geometry: DuctGeometry,
        bc: BoundaryConditions,
        frequency: f64,
        medium: MediumProperties,
    ) -> Result<Self> {
        let p = Self {
            kind,
            geometry,
            bc,
            frequency,
            medium,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.bc.validate()?;
        self.medium.validate()?;
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(Error::config(format!("frequency must be positive, got {}", self.frequency)));
        }
        match self.kind {
            ProblemKind::Uniform => {}
            ProblemKind::Webster { area } => area.check_positive(&self.geometry)?,
            ProblemKind::Narrow { radius, .. } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::config(format!("duct radius must be positive, got {radius}")));
                }
            }
            ProblemKind::Meanflow { mach } => check_mach(mach)?,
        }
        if self.parts() == Parts::Real && !self.bc.is_real() {
            return Err(Error::config(format!(
                "{} problems take real boundary values",
                self.kind.name()
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> f64 {
        self.medium.wavenumber(self.frequency)
    }

    pub fn parts(&self) -> Parts {
        match self.kind {
            ProblemKind::Uniform | ProblemKind::Webster { .. } => Parts::Real,
            ProblemKind::Narrow { .. } | ProblemKind::Meanflow { .. } => Parts::Complex,
        }
    }

    pub fn mach(&self) -> f64 {
        match self.kind {
            ProblemKind::Meanflow { mach } => mach,
            _ => 0.0,
        }
    }

    pub fn visco_thermal(&self) -> Option<Result<ViscoThermalState>> {
        match self.kind {
            ProblemKind::Narrow { radius, convention } => {
                Some(visco_thermal(&self.medium, self.frequency, radius, convention))
            }
            _ => None,
        }
    }

    /// Operator of the pressure equation for this problem.
    pub fn pressure_operator(&self) -> Result<Operator> {
        let k = self.k();
        Ok(match self.kind {
            ProblemKind::Uniform => Operator::Helmholtz { k },
            ProblemKind::Webster { area } => Operator::Webster { k, area },
            ProblemKind::Narrow { radius, convention } => Operator::Narrow {
                k_w: visco_thermal(&self.medium, self.frequency, radius, convention)?.k_w,
            },
            ProblemKind::Meanflow { mach } => Operator::Meanflow { k, mach },
        })
    }
}

fn check_mach(mach: f64) -> Result<()> {
    if !(0.0..1.0).contains(&mach) {
        return Err(Error::config(format!("Mach number must satisfy 0 <= M < 1, got {mach}")));
    }
    Ok(())
}

/// Coefficients of one field part in one residual row, applied to
/// `(value, d/dx, d²/dx²)`.
pub type Coeff = [f64; 3];

/// Linear differential operators of the supported equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operator {
    /// `p'' + k²p`
    Helmholtz { k: f64 },
    /// `p'' + (S'/S)p' + k²p`
    Webster { k: f64, area: AreaProfile },
    /// Complex Helmholtz with `k_w = k_R + j k_I`, split into real rows.
    Narrow { k_w: Complex64 },
    /// Convected Helmholtz `(1-M²)p'' - 2jMk p' + k²p`, split into real rows.
    Meanflow { k: f64, mach: f64 },
    /// Momentum balance `M u' + jk u + p'/ρc` for a velocity field `u`,
    /// scaled by `ρc` so the coefficients act on `ρc·u` and the source is
    /// `p'`.
    Momentum { k: f64, mach: f64 },
}

impl Operator {
    pub fn rows(&self) -> usize {
        match self {
            Operator::Helmholtz { .. } | Operator::Webster { .. } => 1,
            _ => 2,
        }
    }

    pub fn parts(&self) -> usize {
        self.rows()
    }

    /// Coefficients at `x`, laid out `[row * parts + part]`.
    pub fn coefficients(&self, x: f64) -> Result<Vec<Coeff>> {
        Ok(match *self {
            Operator::Helmholtz { k } => vec![[k * k, 0.0, 1.0]],
            Operator::Webster { k, area } => vec![[k * k, area.log_slope(x)?, 1.0]],
            Operator::Narrow { k_w } => {
                let a = k_w.re * k_w.re - k_w.im * k_w.im;
                let b = 2.0 * k_w.re * k_w.im;
                vec![[a, 0.0, 1.0], [-b, 0.0, 0.0], [b, 0.0, 0.0], [a, 0.0, 1.0]]
            }
            Operator::Meanflow { k, mach } => {
                let c2 = 1.0 - mach * mach;
                let c1 = 2.0 * mach * k;
                vec![[k * k, 0.0, c2], [0.0, c1, 0.0], [0.0, -c1, 0.0], [k * k, 0.0, c2]]
            }
            Operator::Momentum { k, mach } => {
                vec![[0.0, mach, 0.0], [-k, 0.0, 0.0], [k, 0.0, 0.0], [0.0, mach, 0.0]]
            }
        })
    }

    /// Residual rows for the given part jets plus per-row sources.
    pub fn apply(&self, x: f64, jets: &[Jet2], source: &[f64]) -> Result<Vec<f64>> {
        let parts = self.parts();
        if jets.len() != parts {
            return Err(Error::config(format!(
                "operator acts on {parts} parts, field has {}",
                jets.len()
            )));
        }
        let coeffs = self.coefficients(x)?;
        Ok((0..self.rows())
            .map(|r| {
                let mut acc = source.get(r).copied().unwrap_or(0.0);
                for (j, jet) in jets.iter().enumerate() {
                    let c = coeffs[r * parts + j];
                    acc += c[0] * jet.value + c[1] * jet.d1 + c[2] * jet.d2;
                }
                acc
            })
            .collect())
    }
}

fn expect_parts(field: &impl JetField, n: usize) -> Result<()> {
    if field.part_count() != n {
        return Err(Error::config(format!(
            "residual needs a {n}-part field, got {}",
            field.part_count()
        )));
    }
    Ok(())
}

fn pair(r: Vec<f64>) -> (f64, f64) {
    (r[0], r[1])
}

/// `p'' + k²p` of a real field at `x`.
pub fn residual_helmholtz(field: &impl JetField, k: f64, x: f64) -> Result<f64> {
    expect_parts(field, 1)?;
    Ok(Operator::Helmholtz { k }.apply(x, &field.jets(x)?, &[])?[0])
}

/// `p'' + (S'/S)p' + k²p` of a real field at `x`.
pub fn residual_webster(field: &impl JetField, area: &AreaProfile, k: f64, x: f64) -> Result<f64> {
    expect_parts(field, 1)?;
    Ok(Operator::Webster { k, area: *area }.apply(x, &field.jets(x)?, &[])?[0])
}

/// Real and imaginary rows of the complex Helmholtz residual with `k_w`.
pub fn residual_narrow(field: &impl JetField, k_w: Complex64, x: f64) -> Result<(f64, f64)> {
    expect_parts(field, 2)?;
    Ok(pair(Operator::Narrow { k_w }.apply(x, &field.jets(x)?, &[])?))
}

/// Real and imaginary rows of the convected Helmholtz residual.
pub fn residual_meanflow(field: &impl JetField, k: f64, mach: f64, x: f64) -> Result<(f64, f64)> {
    check_mach(mach)?;
    expect_parts(field, 2)?;
    Ok(pair(Operator::Meanflow { k, mach }.apply(x, &field.jets(x)?, &[])?))
}

/// Momentum rows `M u_R' - k u_I + p_R'/ρc` and `M u_I' + k u_R + p_I'/ρc`.
/// A real (one-part) pressure field is treated as having zero imaginary part.
pub fn residual_momentum(
    velocity: &impl JetField,
    pressure: &impl JetField,
    k: f64,
    mach: f64,
    rho_c: f64,
    x: f64,
) -> Result<(f64, f64)> {
    check_mach(mach)?;
    expect_parts(velocity, 2)?;
    let p = pressure.jets(x)?;
    let source = [p[0].d1, p.get(1).map_or(0.0, |j| j.d1)];
    let scaled: Vec<Jet2> = velocity.jets(x)?.iter().map(|j| j.scale(rho_c)).collect();
    let r = Operator::Momentum { k, mach }.apply(x, &scaled, &source)?;
    Ok((r[0] / rho_c, r[1] / rho_c))
}

/// Residual samples: `residuals[part][i]` belongs to `points[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBatch {
    pub points: Vec<f64>,
    pub residuals: Vec<Vec<f64>>,
}

impl ResidualBatch {
    pub fn new(points: Vec<f64>, residuals: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = residuals.iter().find(|r| r.len() != points.len()) {
            return Err(Error::config(format!(
                "{} residuals for {} points",
                bad.len(),
                points.len()
            )));
        }
        Ok(Self { points, residuals })
    }
}

/// Sum over parts of the mean squared residual. Points are reduced in
/// ascending `x` order, so the value does not depend on their input order.
pub fn loss_mean_square(batch: &ResidualBatch) -> Result<f64> {
    let n = batch.points.len();
    if n == 0 {
        return Err(Error::config("empty residual batch"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        batch.points[a].total_cmp(&batch.points[b]).then_with(|| {
            let key = |i: usize| batch.residuals.iter().map(|r| r[i].to_bits()).collect::<Vec<_>>();
            key(a).cmp(&key(b))
        })
    });
    Ok(batch
        .residuals
        .iter()
        .map(|r| order.iter().map(|&i| r[i] * r[i]).sum::<f64>() / n as f64)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagrangeLoss {
    pub domain: f64,
    /// Per-boundary terms `(1/N_b) Σ_parts (p(x_j) - g_j)²`.
    pub boundary: [f64; 2],
    pub total: f64,
}

impl LagrangeLoss {
    pub fn boundary_total(&self) -> f64 {
        self.boundary[0] + self.boundary[1]
    }
}

/// Domain residual loss of an untrialed network plus boundary penalties
/// weighted by `lambda`.
pub fn lagrange_loss(
    net: &NetworkParams,
    problem: &DuctProblem,
    lambda: [f64; 2],
    interior: &[f64],
) -> Result<LagrangeLoss> {
    problem.validate()?;
    let field = RawField::new(net.clone(), 1.0);
    let parts = problem.parts().count();
    expect_parts(&field, parts)?;
    let op = problem.pressure_operator()?;
    let mut residuals = vec![Vec::with_capacity(interior.len()); op.rows()];
    for &x in interior {
        for (row, r) in residuals.iter_mut().zip(op.apply(x, &field.jets(x)?, &[])?) {
            row.push(r);
        }
    }
    let domain = loss_mean_square(&ResidualBatch::new(interior.to_vec(), residuals)?)?;
    let ends = [
        (problem.geometry.x1, problem.bc.p1),
        (problem.geometry.x2, problem.bc.p2),
    ];
    let mut boundary = [0.0; 2];
    for (b, (x, g)) in boundary.iter_mut().zip(ends) {
        let v = field.value(x)?;
        let diff = v - g;
        *b = if parts == 1 { diff.re * diff.re } else { diff.norm_sqr() } / ends.len() as f64;
    }
    let total = domain + lambda[0] * boundary[0] + lambda[1] * boundary[1];
    Ok(LagrangeLoss {
        domain,
        boundary,
        total,
    })
}

/// `α·λ + (1-α)·λ̂`.
pub fn lambda_update(lambda: f64, lambda_hat: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config(format!("update factor must lie in [0, 1], got {alpha}")));
    }
    if !lambda_hat.is_finite() {
        return Err(Error::numerical(format!("weight estimate {lambda_hat} is not finite")));
    }
    Ok(alpha * lambda + (1.0 - alpha) * lambda_hat)
}

/// `max|∇L_d| / mean|∇L_b|` over the given gradient components.
pub fn lambda_estimate(domain_grad: &[f64], boundary_grad: &[f64]) -> f64 {
    let max_d = domain_grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mean_b = boundary_grad.iter().map(|g| g.abs()).sum::<f64>() / boundary_grad.len() as f64;
    max_d / mean_b
}
