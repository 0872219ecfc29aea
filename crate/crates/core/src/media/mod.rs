//! Medium models: lossless air and the visco-thermal (narrow circular tube)
//! propagation model with its validity checks.

pub mod bessel;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bessel::{complex_bessel_j, j2_over_j0, SERIES_RADIUS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumProperties {
    /// Density, kg/m³.
    pub rho: f64,
    /// Dynamic viscosity, Pa·s.
    pub mu: f64,
    /// Specific heat at constant pressure, J/(kg·K).
    pub cp: f64,
    /// Thermal conductivity, W/(m·K).
    pub thermal_conductivity: f64,
    /// Ratio of specific heats.
    pub gamma: f64,
    /// Speed of sound, m/s.
    pub c: f64,
}

/// Air at 20 °C and 1 atm. The speed of sound is 340 m/s, which places the
/// uniform-duct resonances of a 1 m duct at multiples of 170 Hz (1020 Hz
/// among them).
pub fn air_ntp() -> MediumProperties {
    MediumProperties {
        rho: 1.225,
        mu: 1.8e-5,
        cp: 1007.0,
        thermal_conductivity: 0.02476,
        gamma: 1.4,
        c: 340.0,
    }
}

impl Default for MediumProperties {
    fn default() -> Self {
        air_ntp()
    }
}

impl MediumProperties {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("rho", self.rho),
            ("mu", self.mu),
            ("cp", self.cp),
            ("thermal_conductivity", self.thermal_conductivity),
            ("gamma", self.gamma),
            ("c", self.c),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("medium property {name} must be positive, got {v}")));
            }
        }
        if self.gamma <= 1.0 {
            return Err(Error::config(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn angular_frequency(f: f64) -> f64 {
        2.0 * PI * f
    }

    pub fn wavenumber(&self, f: f64) -> f64 {
        Self::angular_frequency(f) / self.c
    }

    /// Characteristic impedance `ρc`.
    pub fn impedance(&self) -> f64 {
        self.rho * self.c
    }
}

/// Which boundary-layer wavenumber feeds which Bessel-ratio function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiConvention {
    /// Viscous function from `k_v`, thermal function from `k_h`.
    #[default]
    Standard,
    /// Swapped pairing: viscous function from `k_h`, thermal from `k_v`.
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViscoThermalState {
    pub frequency: f64,
    /// Lossless wavenumber `ω/c`.
    pub k: f64,
    pub k_v: Complex64,
    pub k_h: Complex64,
    pub phi_v: Complex64,
    pub phi_h: Complex64,
    pub k_w: Complex64,
    pub z_w: Complex64,
    pub delta_v: f64,
    pub delta_h: f64,
}

fn bessel_phi(k: Complex64, a: f64) -> Result<Complex64> {
    Ok(-j2_over_j0(k * a)?)
}

/// Complex wavenumber and impedance of a narrow circular duct of radius `a`.
pub fn visco_thermal(
    medium: &MediumProperties,
    f: f64,
    a: f64,
    convention: PhiConvention,
) -> Result<ViscoThermalState> {
    medium.validate()?;
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::config(format!("frequency must be positive, got {f}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::config(format!("duct radius must be positive, got {a}")));
    }
    let omega = MediumProperties::angular_frequency(f);
    let k = omega / medium.c;
    let minus_j = Complex64::new(0.0, -1.0);
    let k_v = (minus_j * (omega * medium.rho / medium.mu)).sqrt();
    let k_h = (minus_j * (omega * medium.rho * medium.cp / medium.thermal_conductivity)).sqrt();
    let (phi_v, phi_h) = match convention {
        PhiConvention::Standard => (bessel_phi(k_v, a)?, bessel_phi(k_h, a)?),
        PhiConvention::PaperLiteral => (bessel_phi(k_h, a)?, bessel_phi(k_v, a)?),
    };
    let gamma = medium.gamma;
    let thermal = gamma - (gamma - 1.0) * phi_h;
    let k_w = k * (thermal / phi_v).sqrt();
    let z_w = medium.impedance() * (1.0 / (phi_v * thermal)).sqrt();
    if !(k_w.re.is_finite() && k_w.im.is_finite() && z_w.re.is_finite() && z_w.im.is_finite()) {
        return Err(Error::numerical(format!(
            "visco-thermal wavenumber not finite at f = {f} Hz, a = {a} m"
        )));
    }
    Ok(ViscoThermalState {
        frequency: f,
        k,
        k_v,
        k_h,
        phi_v,
        phi_h,
        k_w,
        z_w,
        delta_v: (2.0 * medium.mu / (omega * medium.rho)).sqrt(),
        delta_h: (2.0 * medium.thermal_conductivity / (omega * medium.rho * medium.cp)).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityCheck {
    pub name: &'static str,
    pub ratio: f64,
    pub threshold: f64,
    /// `true` when the ratio must stay below the threshold.
    pub upper_bound: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub checks: Vec<ValidityCheck>,
}

impl ValidityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidityCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

pub const WAVENUMBER_RATIO_MIN: f64 = 10.0;
pub const LAYER_RATIO_MIN: f64 = 100.0;

/// Assumptions behind the narrow-tube model: boundary-layer wavenumbers much
/// larger than `k`, plane waves (`ka < 1`), and a duct much longer than
/// either boundary layer.
pub fn validity_check(state: &ViscoThermalState, k: f64, a: f64, length: f64) -> ValidityReport {
    let lower = |name, ratio: f64, threshold| ValidityCheck {
        name,
        ratio,
        threshold,
        upper_bound: false,
        pass: ratio >= threshold,
    };
    ValidityReport {
        checks: vec![
            lower("viscous_wavenumber_ratio", state.k_v.norm() / k, WAVENUMBER_RATIO_MIN),
            lower("thermal_wavenumber_ratio", state.k_h.norm() / k, WAVENUMBER_RATIO_MIN),
            ValidityCheck {
                name: "plane_wave_ka",
                ratio: k * a,
                threshold: 1.0,
                upper_bound: true,
                pass: k * a < 1.0,
            },
            lower("viscous_layer_length_ratio", length / state.delta_v, LAYER_RATIO_MIN),
            lower("thermal_layer_length_ratio", length / state.delta_h, LAYER_RATIO_MIN),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn air_properties() {
        let air = air_ntp();
        assert_eq!(air.rho, 1.225);
        assert_eq!(air.gamma, 1.4);
        assert_eq!(air.c, 340.0);
        assert_eq!(air.mu, 1.8e-5);
        assert_eq!(air.cp, 1007.0);
        assert_eq!(air.thermal_conductivity, 0.02476);
        air.validate().unwrap();
    }

    #[test]
    fn invalid_medium() {
        let mut m = air_ntp();
        m.gamma = 1.0;
        assert!(m.validate().is_err());
        m = air_ntp();
        m.mu = -1.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn boundary_layer_wavenumbers_at_500_hz() {
        let s = visco_thermal(&air_ntp(), 500.0, 0.5e-3, PhiConvention::Standard).unwrap();
        // sqrt(ωρ/μ) e^{-jπ/4}, evaluated independently
        let mag = (2.0 * std::f64::consts::PI * 500.0 * 1.225 / 1.8e-5f64).sqrt();
        let expect = Complex64::from_polar(mag, -FRAC_PI_4);
        assert!((s.k_v - expect).norm() < 1e-9 * mag);
        assert!((s.k_v.re - 1.0339e4).abs() < 1.0);
        assert!((s.k_v.im + 1.0339e4).abs() < 1.0);
        assert!((s.delta_v - 9.67e-5).abs() < 0.01e-5);
        assert!((s.k_v.arg() + FRAC_PI_4).abs() < 1e-12);
        assert!((s.k_h.arg() + FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn narrow_duct_is_dissipative() {
        let s = visco_thermal(&air_ntp(), 500.0, 0.5e-3, PhiConvention::Standard).unwrap();
        assert!(s.k_w.im < 0.0, "{}", s.k_w);
        assert!(s.k_w.re > s.k);
    }

    #[test]
    fn wide_duct_limit_is_monotone() {
        let air = air_ntp();
        let k = air.wavenumber(500.0);
        let mut prev_k = f64::INFINITY;
        let mut prev_z = f64::INFINITY;
        for a in [1e-3, 5e-3, 50e-3] {
            let s = visco_thermal(&air, 500.0, a, PhiConvention::Standard).unwrap();
            let dk = (s.k_w / k - 1.0).norm();
            let dz = (s.z_w / air.impedance() - 1.0).norm();
            assert!(dk < prev_k && dz < prev_z, "a = {a}");
            prev_k = dk;
            prev_z = dz;
        }
        assert!(prev_k < 1e-2);
    }

    #[test]
    fn conventions_differ() {
        let air = air_ntp();
        let a = visco_thermal(&air, 500.0, 0.5e-3, PhiConvention::Standard).unwrap();
        let b = visco_thermal(&air, 500.0, 0.5e-3, PhiConvention::PaperLiteral).unwrap();
        assert_eq!(a.phi_v, b.phi_h);
        assert_ne!(a.k_w, b.k_w);
    }

    #[test]
    fn validity_examples() {
        let air = air_ntp();
        let k = air.wavenumber(500.0);
        let s = visco_thermal(&air, 500.0, 0.5e-3, PhiConvention::Standard).unwrap();
        assert!(validity_check(&s, k, 0.5e-3, 1.0).all_pass());

        let wide = visco_thermal(&air, 500.0, 0.2, PhiConvention::Standard).unwrap();
        let report = validity_check(&wide, k, 0.2, 1.0);
        let fails: Vec<_> = report.failures().map(|c| c.name).collect();
        assert_eq!(fails, vec!["plane_wave_ka"]);
        assert!((report.checks[2].ratio - 1.848).abs() < 1e-3);

        let short = validity_check(&s, k, 0.5e-3, s.delta_v);
        assert!(short.failures().any(|c| c.name == "viscous_layer_length_ratio"));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(visco_thermal(&air_ntp(), 0.0, 1e-3, PhiConvention::Standard).is_err());
        assert!(visco_thermal(&air_ntp(), 100.0, -1e-3, PhiConvention::Standard).is_err());
    }
}
