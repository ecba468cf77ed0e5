//! Clebsch-Gordan coefficients in the Condon-Shortley convention.
//!
//! The coupling order is `<j1 m1; j2 m2 | J M>`. Coefficients are assembled
//! from exact rational arithmetic (big-integer factorials) and converted to
//! `f64` only at the end, so there is no cancellation error in the Racah sum.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

fn factorial(n: i64) -> BigInt {
    let mut acc = BigInt::from(1);
    for k in 2..=n {
        acc *= k;
    }
    acc
}

fn check_pair(two_j: u32, two_m: i32, label: &str) -> Result<()> {
    let two_j = two_j as i32;
    if (two_j - two_m) % 2 != 0 {
        return Err(Error::InvalidQuantumNumbers(format!(
            "{label}: 2j = {two_j} and 2m = {two_m} have different parity"
        )));
    }
    if two_m.abs() > two_j {
        return Err(Error::InvalidQuantumNumbers(format!(
            "{label}: |m| exceeds j (2j = {two_j}, 2m = {two_m})"
        )));
    }
    Ok(())
}

/// `<j1 m1; j2 m2 | J M>` with all quantum numbers doubled.
///
/// Returns 0 when M != m1 + m2. Errors on non-half-integer combinations and
/// on triangle violations.
pub fn clebsch_gordan(
    two_j1: u32,
    two_m1: i32,
    two_j2: u32,
    two_m2: i32,
    two_j: u32,
    two_m: i32,
) -> Result<f64> {
    check_pair(two_j1, two_m1, "(j1, m1)")?;
    check_pair(two_j2, two_m2, "(j2, m2)")?;
    check_pair(two_j, two_m, "(J, M)")?;

    let (j1, j2, j) = (two_j1 as i64, two_j2 as i64, two_j as i64);
    if j < (j1 - j2).abs() || j > j1 + j2 || (j1 + j2 + j) % 2 != 0 {
        return Err(Error::InvalidQuantumNumbers(format!(
            "triangle violation for (2j1, 2j2, 2J) = ({j1}, {j2}, {j})"
        )));
    }
    if two_m != two_m1 + two_m2 {
        return Ok(0.0);
    }

    let (m1, m2, m) = (two_m1 as i64, two_m2 as i64, two_m as i64);

    // Everything below is an integer thanks to the parity checks.
    let half = |x: i64| -> i64 {
        debug_assert!(x % 2 == 0);
        x / 2
    };

    // Squared prefactor: (2J+1) * triangle coefficient * m-dependent factorials.
    let mut pref = BigRational::new(BigInt::from(j + 1), BigInt::from(1));
    pref *= BigRational::new(
        factorial(half(j1 + j2 - j)) * factorial(half(j1 - j2 + j)) * factorial(half(-j1 + j2 + j)),
        factorial(half(j1 + j2 + j) + 1),
    );
    pref *= BigRational::from(
        factorial(half(j + m))
            * factorial(half(j - m))
            * factorial(half(j1 - m1))
            * factorial(half(j1 + m1))
            * factorial(half(j2 - m2))
            * factorial(half(j2 + m2)),
    );

    // Racah sum over k, exact.
    let k_min = 0.max(half(j2 - j - m1)).max(half(j1 - j + m2));
    let k_max = half(j1 + j2 - j).min(half(j1 - m1)).min(half(j2 + m2));
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(half(j1 + j2 - j) - k)
            * factorial(half(j1 - m1) - k)
            * factorial(half(j2 + m2) - k)
            * factorial(half(j - j2 + m1) + k)
            * factorial(half(j - j1 - m2) + k);
        let term = BigRational::new(BigInt::from(1), denom);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }

    if sum.is_zero() {
        return Ok(0.0);
    }
    let sign = if sum.is_negative() { -1.0 } else { 1.0 };
    let value_sq = pref * (&sum * &sum);
    Ok(sign
        * value_sq
            .to_f64()
            .expect("rational magnitude representable as f64")
            .sqrt())
}
