//! Composite 16-point Gauss-Legendre quadrature with dyadic panel splitting.
//!
//! Each panel is compared against its two halves; panels that disagree are
//! split again. Splitting concentrates wherever the integrand varies quickly,
//! typically at the endpoints `0` and `pi` and near poles approaching the
//! contour.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::error::{invalid, JostError, Result};

pub const NODES_PER_PANEL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub initial_panels: usize,
    /// Target absolute agreement, scaled by `max(1, coarse |integral|)`.
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            initial_panels: 64,
            tol: 1e-10,
            max_panels: 1 << 14,
        }
    }
}

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let gl = GaussLegendre::new(NODES_PER_PANEL.try_into().unwrap());
        gl.as_node_weight_pairs().to_vec()
    })
}

/// Panel integral and the integral of `|f|`, which sets its rounding floor.
fn panel<F>(f: &mut F, lo: f64, hi: f64) -> Result<(Complex64, f64)>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut s = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    for &(x, w) in rule() {
        let v = w * f(mid + half * x)?;
        s += v;
        abs += v.norm();
    }
    Ok((s * half, abs * half))
}

/// Integral of `f` over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Complex64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    if !(a < b) || opts.initial_panels == 0 || !(opts.tol > 0.0) {
        return Err(invalid("quadrature needs a < b, panels > 0 and tol > 0"));
    }
    let len = b - a;
    let h = len / opts.initial_panels as f64;
    let mut pending = Vec::with_capacity(opts.initial_panels);
    let mut scale = 0.0;
    for i in 0..opts.initial_panels {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == opts.initial_panels { b } else { lo + h };
        let (v, _) = panel(&mut f, lo, hi)?;
        scale += v.norm();
        pending.push((lo, hi, v));
    }
    let budget = opts.tol * scale.max(1.0);
    let mut total = Complex64::new(0.0, 0.0);
    let mut err_total = 0.0;
    let mut accepted = 0usize;
    while let Some((lo, hi, whole)) = pending.pop() {
        let mid = 0.5 * (lo + hi);
        let (left, abs_l) = panel(&mut f, lo, mid)?;
        let (right, abs_r) = panel(&mut f, mid, hi)?;
        let err = (left + right - whole).norm();
        let floor = 64.0 * f64::EPSILON * (abs_l + abs_r);
        if err <= (budget * (hi - lo) / len).max(floor) || hi - lo <= 1e-14 * len {
            total += left + right;
            err_total += err;
            accepted += 2;
        } else {
            pending.push((lo, mid, left));
            pending.push((mid, hi, right));
        }
        if accepted + pending.len() > opts.max_panels {
            let remaining: f64 = pending.iter().map(|p| p.2.norm()).sum();
            return Err(JostError::QuadratureFailure {
                panels: accepted + pending.len(),
                estimate: err_total + remaining,
            });
        }
    }
    Ok(total)
}

/// Real-valued convenience wrapper.
pub fn integrate_real<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    Ok(integrate(|x| f(x).map(|v| Complex64::new(v, 0.0)), a, b, opts)?.re)
}
