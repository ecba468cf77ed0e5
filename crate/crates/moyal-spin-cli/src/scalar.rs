//! Complex scalars on the command line: polar "r@angle" (degrees by
//! default, "deg"/"rad" suffixes accepted) or cartesian "a+bi".

use num_complex::Complex64;

pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let text = text.trim();
    if let Some((radius, angle)) = text.split_once('@') {
        let r: f64 = radius
            .trim()
            .parse()
            .map_err(|_| format!("bad modulus '{radius}'"))?;
        let angle = angle.trim();
        let (body, to_radians): (&str, fn(f64) -> f64) = if let Some(b) = angle.strip_suffix("deg")
        {
            (b, f64::to_radians)
        } else if let Some(b) = angle.strip_suffix("rad") {
            (b, |x| x)
        } else {
            (angle, f64::to_radians)
        };
        let a: f64 = body
            .trim()
            .parse()
            .map_err(|_| format!("bad angle '{angle}'"))?;
        return Ok(Complex64::from_polar(r, to_radians(a)));
    }

    if let Ok(re) = text.parse::<f64>() {
        return Ok(Complex64::new(re, 0.0));
    }

    if let Some(body) = text.strip_suffix('i') {
        // Purely imaginary, e.g. "0.3i" or "-i".
        if let Ok(im) = body.parse::<f64>() {
            return Ok(Complex64::new(0.0, im));
        }
        if body == "-" || body == "+" || body.is_empty() {
            let sign = if body == "-" { -1.0 } else { 1.0 };
            return Ok(Complex64::new(0.0, sign));
        }
        // "a+bi": split at the last sign outside an exponent.
        let bytes = body.as_bytes();
        for idx in (1..bytes.len()).rev() {
            let ch = bytes[idx] as char;
            if (ch == '+' || ch == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                let re: f64 = body[..idx]
                    .parse()
                    .map_err(|_| format!("bad complex literal '{text}'"))?;
                let im_text = &body[idx..];
                let im: f64 = if im_text == "+" {
                    1.0
                } else if im_text == "-" {
                    -1.0
                } else {
                    im_text
                        .parse()
                        .map_err(|_| format!("bad complex literal '{text}'"))?
                };
                return Ok(Complex64::new(re, im));
            }
        }
    }
    Err(format!("bad complex literal '{text}'"))
}
