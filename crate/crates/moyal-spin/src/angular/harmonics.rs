//! Legendre polynomials and spherical harmonics.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::Direction;
use crate::error::{Error, Result};

/// Legendre polynomial P_l(x) by the three-term recurrence.
///
/// Arguments with |x| slightly above 1 (within 1e-12) are clamped; anything
/// farther out is a domain error.
pub fn legendre_p(l: u32, x: f64) -> Result<f64> {
    if x.abs() > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("legendre_p argument x = {x}")));
    }
    let x = x.clamp(-1.0, 1.0);
    if l == 0 {
        return Ok(1.0);
    }
    let mut prev = 1.0;
    let mut curr = x;
    for k in 1..l {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0) * x * curr - k * prev) / (k + 1.0);
        prev = curr;
        curr = next;
    }
    Ok(curr)
}

/// Associated Legendre function P_l^m for m >= 0, Condon-Shortley phase
/// included. `sin_theta` must equal sqrt(1 - x^2) for stability near the
/// poles.
fn assoc_legendre(l: u32, m: u32, x: f64, sin_theta: f64) -> f64 {
    debug_assert!(m <= l);
    // P_m^m = (-1)^m (2m-1)!! sin^m(theta)
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= -f64::from(2 * k - 1) * sin_theta;
    }
    if l == m {
        return pmm;
    }
    // P_{m+1}^m = x (2m+1) P_m^m
    let mut prev = pmm;
    let mut curr = x * f64::from(2 * m + 1) * pmm;
    if l == m + 1 {
        return curr;
    }
    for ll in (m + 2)..=l {
        let ll = f64::from(ll);
        let m = f64::from(m);
        let next = ((2.0 * ll - 1.0) * x * curr - (ll + m - 1.0) * prev) / (ll - m);
        prev = curr;
        curr = next;
    }
    curr
}

/// Spherical harmonic Y_lm evaluated at a direction, orthonormal on the
/// sphere with the Condon-Shortley phase.
pub fn spherical_harmonic(l: u32, m: i32, n: &Direction) -> Result<Complex64> {
    if m.unsigned_abs() > l {
        return Err(Error::InvalidQuantumNumbers(format!(
            "spherical_harmonic: |m| = {} exceeds l = {l}",
            m.abs()
        )));
    }
    let m_abs = m.unsigned_abs();
    let ct = n.z();
    let st = n.x().hypot(n.y());
    let plm = assoc_legendre(l, m_abs, ct, st);

    // sqrt((2l+1)/(4 pi) * (l-|m|)!/(l+|m|)!)
    let mut ratio = 1.0;
    for k in (l - m_abs + 1)..=(l + m_abs) {
        ratio *= f64::from(k);
    }
    let norm = (f64::from(2 * l + 1) / (4.0 * PI) / ratio).sqrt();

    let phi = n.phi();
    let m_f = f64::from(m_abs);
    let phase = Complex64::new(0.0, m_f * phi).exp();
    let positive = norm * plm * phase;
    if m >= 0 {
        Ok(positive)
    } else {
        // Y_{l,-m} = (-1)^m conj(Y_{lm})
        let sign = if m_abs.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign * positive.conj())
    }
}
