use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, JostError, Result};

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Parse `"0.4+0.2i"`, `"-1e-3i"`, `"0.5"`, `"i"` and similar.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(invalid("empty complex number"));
    }
    let bad = || invalid(format!("cannot parse complex number '{s}'"));
    let num = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => f64::from_str(x).map_err(|_| bad()),
        }
    };
    if let Some(body) = t.strip_suffix(['i', 'j']) {
        // Split at the last sign that is not part of an exponent.
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let z = match split {
            Some(k) => Complex64::new(f64::from_str(&body[..k]).map_err(|_| bad())?, num(&body[k..])?),
            None => Complex64::new(0.0, num(body)?),
        };
        if z.re.is_finite() && z.im.is_finite() {
            Ok(z)
        } else {
            Err(bad())
        }
    } else {
        let re = f64::from_str(&t).map_err(|_| bad())?;
        if re.is_finite() {
            Ok(Complex64::new(re, 0.0))
        } else {
            Err(bad())
        }
    }
}

/// Polynomial extrapolation to `h = 0` through `(h_i, f_i)` by Neville's scheme.
///
/// Returns the final estimate and the size of the last correction.
pub(crate) fn extrapolate_to_zero(h: &[f64], f: &[Complex64]) -> (Complex64, f64) {
    let n = h.len();
    let mut p = f.to_vec();
    let mut last_corr = f64::INFINITY;
    for k in 1..n {
        for i in (k..n).rev() {
            let prev = p[i];
            p[i] = (p[i] * h[i - k] - p[i - 1] * h[i]) / (h[i - k] - h[i]);
            if i == n - 1 {
                last_corr = (p[i] - prev).norm();
            }
        }
    }
    (p[n - 1], last_corr)
}

/// Richardson-style boundary limit with a stability check on successive
/// diagonal estimates.
pub(crate) fn boundary_limit(h: &[f64], f: &[Complex64], tol: f64) -> Result<Complex64> {
    if h.len() < 2 {
        return Err(invalid("extrapolation needs at least two samples"));
    }
    let (est, _) = extrapolate_to_zero(h, f);
    let (prev, _) = extrapolate_to_zero(&h[..h.len() - 1], &f[..f.len() - 1]);
    let spread = (est - prev).norm();
    let scale = est.norm().max(1.0);
    if !est.re.is_finite() || !est.im.is_finite() || spread > tol * scale {
        return Err(JostError::ExtrapolationUnstable { spread });
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        assert_eq!(parse_complex("0.4+0i").unwrap(), Complex64::new(0.4, 0.0));
        assert_eq!(parse_complex("0.3-0.2i").unwrap(), Complex64::new(0.3, -0.2));
        assert_eq!(parse_complex("-0.5").unwrap(), Complex64::new(-0.5, 0.0));
        assert_eq!(parse_complex("i").unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-3+2e-2i").unwrap(), Complex64::new(1e-3, 2e-2));
        assert_eq!(parse_complex("1e-3-i").unwrap(), Complex64::new(1e-3, -1.0));
        assert_eq!(parse_complex(" 0.1 + 0.2 i ").unwrap(), Complex64::new(0.1, 0.2));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
        assert!(parse_complex("nan").is_err());
    }

    #[test]
    fn neville_recovers_polynomials() {
        let h = [0.1, 0.05, 0.025];
        let f: Vec<Complex64> = h
            .iter()
            .map(|&x| Complex64::new(2.0 + 3.0 * x - x * x, -1.0 + x))
            .collect();
        let (v, _) = extrapolate_to_zero(&h, &f);
        assert!((v - Complex64::new(2.0, -1.0)).norm() < 1e-13);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-15).abs() < 1e-30);
    }
}
