//! Weierstrass factors, Blaschke factors for real zeros, and the renormalized
//! factors that stay summable when only `sum (1 - |p|)^3` is finite.

use num_complex::Complex64;

use crate::error::{invalid, JostError, Result};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `W_n(z) = (1 - z) exp(z + z^2/2 + ... + z^n/n)`.
pub fn weierstrass_w(n: usize, z: Complex64) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    let mut pow = ONE;
    for k in 1..=n {
        pow *= z;
        s += pow / k as f64;
    }
    (ONE - z) * s.exp()
}

fn check_zero(p: f64) -> Result<()> {
    if !(p.is_finite() && p.abs() < 1.0) {
        return Err(invalid(format!("zero p = {p} must lie in (-1, 1)")));
    }
    Ok(())
}

/// `b(z, p) = (|p|/p) (p - z) / (1 - p z)`, and `b(z, 0) = z`.
pub fn blaschke_b(z: Complex64, p: f64) -> Result<Complex64> {
    check_zero(p)?;
    if p == 0.0 {
        return Ok(z);
    }
    let den = ONE - p * z;
    if den.norm() == 0.0 {
        return Err(JostError::PoleHit { z });
    }
    Ok(p.signum() * (p - z) / den)
}

/// `b_n(z, p) = W_n(x / (1 - w z)) / W_n(-x w z / (1 - w z))` with
/// `p = (1 - x) w`, `w = sgn p`. Equal to `b(z, p)` at `n = 0`.
pub fn modified_b(n: usize, z: Complex64, p: f64) -> Result<Complex64> {
    check_zero(p)?;
    if p == 0.0 {
        return Err(invalid("modified factor needs p != 0"));
    }
    let w = p.signum();
    let x = 1.0 - p.abs();
    let den = ONE - w * z;
    if den.norm() == 0.0 {
        return Err(JostError::PoleHit { z });
    }
    let num = weierstrass_w(n, x / den);
    let dnm = weierstrass_w(n, -x * w * z / den);
    if dnm.norm() == 0.0 {
        return Err(JostError::PoleHit { z });
    }
    Ok(num / dnm)
}

/// `alpha(z) = (1 + z^2)/(1 - z^2)`, `beta(z) = 2z/(1 - z^2)`.
pub fn alpha_beta(z: Complex64) -> Result<(Complex64, Complex64)> {
    let den = ONE - z * z;
    if den.norm() < 1e-300 {
        return Err(JostError::PoleHit { z });
    }
    Ok(((ONE + z * z) / den, 2.0 * z / den))
}

/// `q(z, p) = b(z, p) exp(-alpha(z) log|p| - beta(z) (p - 1/p) / 2)`.
///
/// Evaluated as a single exponential so that `q(0, p) = 1` holds exactly.
pub fn renorm_q(z: Complex64, p: f64) -> Result<Complex64> {
    check_zero(p)?;
    if p == 0.0 {
        return Err(invalid("renormalized factor needs p != 0"));
    }
    let b = blaschke_b(z, p)?;
    if b.norm() == 0.0 {
        return Ok(b);
    }
    let (al, be) = alpha_beta(z)?;
    Ok((b.ln() - al * p.abs().ln() - 0.5 * be * (p - 1.0 / p)).exp())
}

/// The same factor through `b_2` and the cubic remainders `A`, `B`.
pub fn renorm_q_factored(z: Complex64, p: f64) -> Result<Complex64> {
    check_zero(p)?;
    let x = 1.0 - p.abs();
    let big_a = p.abs().ln() + x + 0.5 * x * x;
    let big_b = -x * x * x / p;
    let (al, be) = alpha_beta(z)?;
    Ok(modified_b(2, z, p)? * (-al * big_a - 0.5 * be * big_b).exp())
}

/// Upper bound on `|q(z, p) - 1|` for `|z| < 1 - delta`, `1 - |p| < delta/2`.
pub fn q_bound(delta: f64, p: f64) -> Option<f64> {
    let x = 1.0 - p.abs();
    if !(delta > 0.0 && delta < 1.0 && x < 0.5 * delta && p != 0.0) {
        return None;
    }
    let d3 = delta.powi(-3);
    let c = 5.0 / 3.0 / (delta * p.abs());
    Some((4.0 * d3 + c * (1.0 + 4.0 * d3) * (c * x * x * x).exp()) * x * x * x)
}

/// Upper bound on `|b_n(z, p) - 1|` under the same conditions.
pub fn modified_b_bound(n: usize, delta: f64, p: f64) -> Option<f64> {
    let x = 1.0 - p.abs();
    if !(delta > 0.0 && delta < 1.0 && x < 0.5 * delta) {
        return None;
    }
    Some(4.0 * delta.powi(-(n as i32) - 1) * x.powi(n as i32 + 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormProduct {
    pub value: Complex64,
    /// Sum of the factor bounds, an upper estimate of `|product - 1|` when
    /// every zero is close enough to the circle relative to `|z|`; infinite
    /// otherwise.
    pub tail_bound: f64,
}

/// `prod_{n >= start_index} q(z, p_n)` over the zeros sorted by `|p|`.
pub fn renorm_product(zeros: &[f64], z: Complex64, start_index: usize) -> Result<RenormProduct> {
    for &p in zeros {
        check_zero(p)?;
        if p == 0.0 {
            return Err(invalid("zeros must be nonzero"));
        }
    }
    let mut sorted = zeros.to_vec();
    sorted.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let tail = sorted.get(start_index..).unwrap_or(&[]);
    let mut value = ONE;
    for &p in tail {
        value *= renorm_q(z, p)?;
    }
    let delta = 1.0 - z.norm();
    let tail_bound = tail
        .iter()
        .map(|&p| q_bound(delta, p))
        .try_fold(0.0, |acc, b| b.map(|b| acc + b))
        .unwrap_or(f64::INFINITY);
    Ok(RenormProduct { value, tail_bound })
}
