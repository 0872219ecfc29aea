//! Bessel functions of the first kind for complex arguments.
//!
//! The ascending series is used inside [`SERIES_RADIUS`]. Beyond it only the
//! ratio `J2/J0` is available, from the continued fraction for `J1/J0`, which
//! is what the visco-thermal model needs for wide ducts.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest `|z|` accepted by [`complex_bessel_j`]. Along the rays
/// `arg z = ±π/4` (the visco-thermal arguments) the series keeps a relative
/// error below 1e-10 up to this radius; on the real axis cancellation makes
/// the error absolute rather than relative near large `|z|`.
pub const SERIES_RADIUS: f64 = 40.0;

/// Below this `|J0|` the ratio `J2/J0` is treated as singular.
pub const J0_SINGULAR: f64 = 1e-12;

const MAX_TERMS: usize = 400;

/// `J_n(z)` by the ascending power series
/// `Σ_m (-1)^m (z/2)^(2m+n) / (m! (m+n)!)`, summed until the terms stop
/// changing the sum.
pub fn complex_bessel_j(order: u32, z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Range(format!("Bessel argument {z} is not finite")));
    }
    if z.norm() > SERIES_RADIUS {
        return Err(Error::Range(format!(
            "|z| = {:.3} exceeds the series radius {SERIES_RADIUS}; reduce the radius-frequency product",
            z.norm()
        )));
    }
    let half = z * 0.5;
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..=order {
        term = term * half / k as f64;
    }
    let q = -(half * half);
    let n = order as f64;
    let mut sum = term;
    let mut quiet = 0;
    for m in 1..MAX_TERMS {
        let mf = m as f64;
        term = term * q / (mf * (mf + n));
        let before = sum;
        sum += term;
        if sum == before {
            quiet += 1;
            // past the peak term and two terms without effect
            if quiet >= 2 && mf * mf > q.norm() {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Ok(sum)
}

/// `J1(z)/J0(z)` by the continued fraction `1/(2/z - 1/(4/z - 1/(6/z - ...)))`
/// (modified Lentz). Valid for any nonzero `z` away from zeros of `J0`.
pub fn j1_over_j0_cf(z: Complex64) -> Result<Complex64> {
    // complex division squares the modulus, so the floor must stay well above 1e-154
    const TINY: f64 = 1e-100;
    if z.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let inv = 1.0 / z;
    let tiny = Complex64::new(TINY, 0.0);
    let mut f = tiny;
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    let max_iter = 1000 + 10 * z.norm() as usize;
    for n in 1..=max_iter {
        let a = if n == 1 { 1.0 } else { -1.0 };
        let b = inv * (2.0 * n as f64);
        d = b + d * a;
        if d.norm() < TINY {
            d = tiny;
        }
        c = b + a / c;
        if c.norm() < TINY {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 4.0 * f64::EPSILON {
            return Ok(f);
        }
    }
    Err(Error::numerical(format!("J1/J0 continued fraction did not converge at z = {z}")))
}

/// `J2(z)/J0(z)`: series inside the radius, continued fraction outside.
pub fn j2_over_j0(z: Complex64) -> Result<Complex64> {
    if z.norm() <= SERIES_RADIUS {
        let j0 = complex_bessel_j(0, z)?;
        if j0.norm() < J0_SINGULAR {
            return Err(Error::Singularity(format!("J0({z}) = {j0} is numerically zero")));
        }
        return Ok(complex_bessel_j(2, z)? / j0);
    }
    Ok(j1_over_j0_cf(z)? * 2.0 / z - 1.0)
}
