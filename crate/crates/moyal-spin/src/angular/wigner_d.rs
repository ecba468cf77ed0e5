//! Wigner small-d rotation matrix elements.

use super::SpinJ;
use crate::error::{Error, Result};

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = vec![0.0; n + 1];
    for k in 2..=n {
        table[k] = table[k - 1] + (k as f64).ln();
    }
    table
}

/// d^j_{m m'}(beta) = <j m| exp(-i beta J_y) |j m'>, via the standard
/// factorial sum. Projection arguments are doubled.
///
/// The alternating sum loses accuracy slowly with j (unitarity defect
/// measured at ~2e-13 for 2j = 20, ~2e-10 for 2j = 40, ~2e-7 for 2j = 60).
pub fn wigner_small_d(j: SpinJ, two_m: i32, two_mp: i32, beta: f64) -> Result<f64> {
    let two_j = j.two_s() as i32;
    for (label, two_x) in [("m", two_m), ("m'", two_mp)] {
        if (two_j - two_x) % 2 != 0 || two_x.abs() > two_j {
            return Err(Error::InvalidQuantumNumbers(format!(
                "wigner_small_d: invalid 2{label} = {two_x} for 2j = {two_j}"
            )));
        }
    }

    // Row index m distance from highest weight, as integers.
    let jm = ((two_j + two_mp) / 2) as i64; // j + m'
    let jmm = ((two_j - two_mp) / 2) as i64; // j - m'
    let jn = ((two_j + two_m) / 2) as i64; // j + m
    let jnn = ((two_j - two_m) / 2) as i64; // j - m
    let mu = ((two_m - two_mp) / 2) as i64; // m - m'

    let lf = ln_factorials(two_j as usize + 1);
    let lnf = |x: i64| -> f64 { lf[x as usize] };
    let ln_pref = 0.5 * (lnf(jm) + lnf(jmm) + lnf(jn) + lnf(jnn));

    let (half_c, half_s) = {
        let h = beta / 2.0;
        (h.cos(), h.sin())
    };

    // d^j_{m m'} = sum_k (-1)^{k + m - m'} sqrt(...) /
    //   [(j+m'-k)! k! (j-m-k)! (k+m-m')!] cos^{2j+m'-m-2k} sin^{m-m'+2k}
    let k_min = 0.max(-mu);
    let k_max = jm.min(jnn);
    let mut acc = 0.0;
    for k in k_min..=k_max {
        let ln_den = lnf(jm - k) + lnf(k) + lnf(jnn - k) + lnf(k + mu);
        let cos_pow = (jm - k) + (jnn - k); // = 2j + m' - m - 2k ... as count
        let sin_pow = mu + 2 * k;
        let magnitude =
            (ln_pref - ln_den).exp() * half_c.powi(cos_pow as i32) * half_s.powi(sin_pow as i32);
        let sign = if (k + mu) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * magnitude;
    }
    Ok(acc)
}
