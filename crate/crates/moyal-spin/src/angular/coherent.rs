//! Spin-coherent state amplitudes and overlaps.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::ToPrimitive;

use super::{clebsch_gordan, legendre_p, SpinJ, StereoPoint};
use crate::error::{Error, Result};

fn binomial(n: u32, k: u32) -> f64 {
    debug_assert!(k <= n);
    let mut acc = BigInt::from(1);
    for i in 0..k {
        acc *= n - i;
    }
    for i in 1..=k {
        acc /= i;
    }
    acc.to_f64().expect("binomial fits in f64 range")
}

/// Expansion coefficient <m, n_z | n> of the spin-coherent state along the
/// direction with stereographic image z:
///
///   binom(2s, s-m)^{1/2} z^{s-m} / (1 + |z|^2)^s .
///
/// Points with |z| > 1 are evaluated in the reciprocal chart u = 1/z, which
/// also covers the south-pole limit |z| -> infinity.
pub fn coherent_amplitude(s: SpinJ, two_m: i32, z: StereoPoint) -> Result<Complex64> {
    let two_s = s.two_s() as i32;
    if (two_s - two_m) % 2 != 0 || two_m.abs() > two_s {
        return Err(Error::InvalidQuantumNumbers(format!(
            "coherent_amplitude: invalid 2m = {two_m} for 2s = {two_s}"
        )));
    }
    let k_minus = ((two_s - two_m) / 2) as u32; // s - m
    let k_plus = ((two_s + two_m) / 2) as u32; // s + m
    let root_binom = binomial(s.two_s(), k_minus).sqrt();

    if !z.is_finite() {
        // South pole: only the lowest-weight component survives. Its phase
        // is a gauge choice; take the limit along the positive real axis.
        let amp = if two_m == -two_s { 1.0 } else { 0.0 };
        return Ok(Complex64::new(amp, 0.0));
    }

    let zv = z.value();
    let t = zv.norm();
    let amp = if t <= 1.0 {
        zv.powu(k_minus) * (1.0 + t * t).powf(-f64::from(s.two_s()) / 2.0)
    } else {
        // z^{s-m}/(1+|z|^2)^s = e^{i (s-m) arg z} u^{s+m}/(1+u^2)^s, u = 1/|z|
        let u = 1.0 / t;
        let phase = Complex64::from_polar(1.0, zv.arg() * f64::from(k_minus));
        phase * u.powi(k_plus as i32) * (1.0 + u * u).powf(-f64::from(s.two_s()) / 2.0)
    };
    Ok(root_binom * amp)
}

/// All 2s+1 coherent amplitudes in basis-row order a = s - m.
pub fn coherent_state_vector(s: SpinJ, z: StereoPoint) -> Vec<Complex64> {
    s.two_m_values()
        .map(|two_m| coherent_amplitude(s, two_m, z).expect("valid m by construction"))
        .collect()
}

/// Squared overlap |<m, n_z | m', n>|^2 as a Clebsch-Gordan/Legendre sum:
///
///   sum_l (2l+1)/(2s+1) C(s l s; m 0 m) C(s l s; m' 0 m') P_l(cos theta) .
pub fn basis_overlap_sq(s: SpinJ, two_m: i32, two_mp: i32, theta: f64) -> Result<f64> {
    let two_s = s.two_s();
    for two_x in [two_m, two_mp] {
        if (two_s as i32 - two_x) % 2 != 0 || two_x.abs() > two_s as i32 {
            return Err(Error::InvalidQuantumNumbers(format!(
                "basis_overlap_sq: invalid 2m = {two_x} for 2s = {two_s}"
            )));
        }
    }
    let ct = theta.cos();
    let mut acc = 0.0;
    for l in 0..=two_s {
        acc += f64::from(2 * l + 1) / f64::from(two_s + 1)
            * clebsch_gordan(two_s, two_m, 2 * l, 0, two_s, two_m)?
            * clebsch_gordan(two_s, two_mp, 2 * l, 0, two_s, two_mp)?
            * legendre_p(l, ct)?;
    }
    Ok(acc)
}
