//! Trial fields that satisfy Dirichlet data by construction:
//! `p̂_t = φ2·p1 + φ1·p2 + φ1·φ2·p̂(x; θ)` with the linear pair
//! `φ1 = (x - x1)/L`, `φ2 = (x2 - x)/L`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::autodiff::Jet2;
use crate::error::{Error, Result};
use crate::network::NetworkParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuctGeometry {
    pub x1: f64,
    pub x2: f64,
}

impl DuctGeometry {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        let g = Self { x1, x2 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x1.is_finite() && self.x2.is_finite()) || self.x2 <= self.x1 {
            return Err(Error::config(format!(
                "duct geometry needs finite x2 > x1, got x1 = {}, x2 = {}",
                self.x1, self.x2
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.x2 - self.x1
    }

    /// `n` linearly spaced points covering `[x1, x2]`, endpoints included.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![self.x1],
            _ => {
                let l = self.length();
                let last = (n - 1) as f64;
                (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            self.x2
                        } else {
                            self.x1 + l * i as f64 / last
                        }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions {
    pub p1: Complex64,
    pub p2: Complex64,
}

impl BoundaryConditions {
    pub fn real(p1: f64, p2: f64) -> Self {
        Self {
            p1: Complex64::new(p1, 0.0),
            p2: Complex64::new(p2, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.p1, self.p2].iter().all(|p| p.re.is_finite() && p.im.is_finite());
        if !ok {
            return Err(Error::config("boundary values must be finite"));
        }
        Ok(())
    }

    pub fn is_real(&self) -> bool {
        self.p1.im == 0.0 && self.p2.im == 0.0
    }

    /// Boundary pair of one part (0 = real, 1 = imaginary).
    pub fn part(&self, part: usize) -> (f64, f64) {
        match part {
            0 => (self.p1.re, self.p2.re),
            _ => (self.p1.im, self.p2.im),
        }
    }
}

/// Number of real fields carried by a trial field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parts {
    Real,
    Complex,
}

impl Parts {
    pub fn count(self) -> usize {
        match self {
            Parts::Real => 1,
            Parts::Complex => 2,
        }
    }
}

pub fn phi_pair(geometry: &DuctGeometry, x: f64) -> Result<(f64, f64)> {
    geometry.validate()?;
    let l = geometry.length();
    Ok(((x - geometry.x1) / l, (geometry.x2 - x) / l))
}

/// Boundary interpolant jets (one per part) and the blend jet `φ1·φ2` at `x`.
pub fn boundary_and_blend(
    geometry: &DuctGeometry,
    bc: &BoundaryConditions,
    parts: Parts,
    x: f64,
) -> (Vec<Jet2>, Jet2) {
    let l = geometry.length();
    let phi1 = Jet2::new((x - geometry.x1) / l, 1.0 / l, 0.0);
    let phi2 = Jet2::new((geometry.x2 - x) / l, -1.0 / l, 0.0);
    let boundary = (0..parts.count())
        .map(|part| {
            let (a, b) = bc.part(part);
            phi2.scale(a) + phi1.scale(b)
        })
        .collect();
    (boundary, phi1 * phi2)
}

/// Anything that yields per-part jets `(value, d/dx, d²/dx²)` at a point:
/// trial fields as well as closed-form or numerical reference solutions.
pub trait JetField {
    fn part_count(&self) -> usize;
    fn jets(&self, x: f64) -> Result<Vec<Jet2>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialField {
    pub net: NetworkParams,
    pub geometry: DuctGeometry,
    pub bc: BoundaryConditions,
    pub parts: Parts,
}

impl TrialField {
    pub fn new(net: NetworkParams, geometry: DuctGeometry, bc: BoundaryConditions, parts: Parts) -> Result<Self> {
        geometry.validate()?;
        bc.validate()?;
        if net.arch.outputs() != parts.count() {
            return Err(Error::config(format!(
                "{} network outputs cannot carry a {parts:?} field",
                net.arch.outputs()
            )));
        }
        if parts == Parts::Real && !bc.is_real() {
            return Err(Error::config("real-valued field with complex boundary values"));
        }
        Ok(Self { net, geometry, bc, parts })
    }

    pub fn eval_trial(&self, x: f64) -> Result<Vec<Jet2>> {
        let out = self.net.forward_jet(x)?;
        let (boundary, blend) = boundary_and_blend(&self.geometry, &self.bc, self.parts, x);
        Ok(boundary
            .into_iter()
            .zip(out.parts)
            .map(|(b, n)| b + blend * n)
            .collect())
    }

    /// Complex value `p_R + j p_I` at `x`.
    pub fn value(&self, x: f64) -> Result<Complex64> {
        let jets = self.eval_trial(x)?;
        Ok(Complex64::new(jets[0].value, jets.get(1).map_or(0.0, |j| j.value)))
    }
}

impl JetField for TrialField {
    fn part_count(&self) -> usize {
        self.parts.count()
    }

    fn jets(&self, x: f64) -> Result<Vec<Jet2>> {
        self.eval_trial(x)
    }
}

/// Network output used directly, multiplied by a fixed `scale`. Carries no
/// boundary data; used for the Lagrange baseline and for velocity fields.
#[derive(Debug, Clone, PartialEq)]
pub struct RawField {
    pub net: NetworkParams,
    pub scale: f64,
}

impl RawField {
    pub fn new(net: NetworkParams, scale: f64) -> Self {
        Self { net, scale }
    }

    pub fn value(&self, x: f64) -> Result<Complex64> {
        let jets = self.jets(x)?;
        Ok(Complex64::new(jets[0].value, jets.get(1).map_or(0.0, |j| j.value)))
    }
}

impl JetField for RawField {
    fn part_count(&self) -> usize {
        self.net.arch.outputs()
    }

    fn jets(&self, x: f64) -> Result<Vec<Jet2>> {
        Ok(self.net.forward_jet(x)?.parts.into_iter().map(|j| j.scale(self.scale)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Activation;
    use crate::network::Architecture;

    #[test]
    fn phi_examples() {
        let g = DuctGeometry::new(0.0, 1.0).unwrap();
        assert_eq!(phi_pair(&g, 0.0).unwrap(), (0.0, 1.0));
        assert_eq!(phi_pair(&g, 0.5).unwrap(), (0.5, 0.5));
        let g = DuctGeometry::new(2.0, 4.0).unwrap();
        assert_eq!(phi_pair(&g, 3.5).unwrap(), (0.75, 0.25));
    }

    #[test]
    fn degenerate_geometry() {
        assert!(DuctGeometry::new(1.0, 1.0).is_err());
        let g = DuctGeometry { x1: 1.0, x2: 1.0 };
        assert!(phi_pair(&g, 1.0).is_err());
    }

    #[test]
    fn zero_network_is_linear_interpolant() {
        let arch = Architecture::new(2, 4, 1, Activation::Sin).unwrap();
        let net = NetworkParams::zeros(&arch).unwrap();
        let g = DuctGeometry::new(0.0, 1.0).unwrap();
        let field = TrialField::new(net, g, BoundaryConditions::real(1.0, -1.0), Parts::Real).unwrap();
        let j = field.eval_trial(0.25).unwrap()[0];
        assert_eq!(j, Jet2::new(0.5, -2.0, 0.0));
    }

    #[test]
    fn boundary_values_exact_for_random_network() {
        let arch = Architecture::new(2, 8, 2, Activation::Tanh).unwrap();
        let g = DuctGeometry::new(-0.3, 1.7).unwrap();
        let bc = BoundaryConditions {
            p1: Complex64::new(0.7, -0.2),
            p2: Complex64::new(-1.1, 0.4),
        };
        for seed in 0..20 {
            let net = NetworkParams::init(&arch, seed).unwrap();
            let f = TrialField::new(net, g, bc, Parts::Complex).unwrap();
            assert_eq!(f.value(g.x1).unwrap(), bc.p1);
            assert_eq!(f.value(g.x2).unwrap(), bc.p2);
        }
    }

    #[test]
    fn mismatched_parts_rejected() {
        let arch = Architecture::new(1, 3, 2, Activation::Sin).unwrap();
        let net = NetworkParams::zeros(&arch).unwrap();
        let g = DuctGeometry::new(0.0, 1.0).unwrap();
        assert!(TrialField::new(net, g, BoundaryConditions::real(1.0, 0.0), Parts::Real).is_err());
    }

    #[test]
    fn linspace_includes_endpoints() {
        let g = DuctGeometry::new(0.0, 1.0).unwrap();
        let xs = g.linspace(5);
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.linspace(500).len(), 500);
    }
}
