//! Poisson kernels on the unit circle and the renormalized Poisson integral.
//!
//! `Q = S - alpha - beta cos(theta)` subtracts the first two Taylor terms of the
//! symmetrized kernel `S`, leaving `O(|z|^2)` decay at the origin and a factor
//! `sin^2(theta)` that absorbs boundary singularities of the integrand.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::blaschke::alpha_beta;
use crate::error::{invalid, Result};
use crate::quad::{integrate, QuadOptions};
use crate::util::boundary_limit;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `P(z, e^{i theta}) = (e^{i theta} + z) / (e^{i theta} - z)`.
pub fn kernel_p(z: Complex64, theta: f64) -> Complex64 {
    let w = Complex64::from_polar(1.0, theta);
    (w + z) / (w - z)
}

/// `S(z, theta) = (1 - z^2) / (1 + z^2 - 2 z cos(theta))`, the average of `P`
/// over `theta` and `-theta`.
pub fn kernel_s(z: Complex64, theta: f64) -> Complex64 {
    let z2 = z * z;
    (ONE - z2) / (ONE + z2 - 2.0 * theta.cos() * z)
}

/// `Q(z, theta) = -4 z^2 sin^2(theta) / ((1 - z^2)(1 + z^2 - 2 z cos(theta)))`.
pub fn kernel_q(z: Complex64, theta: f64) -> Complex64 {
    let z2 = z * z;
    let s = theta.sin();
    -4.0 * s * s * z2 / ((ONE - z2) * (ONE + z2 - 2.0 * theta.cos() * z))
}

/// `Q` as `S - alpha - beta cos(theta)`.
pub fn kernel_q_subtracted(z: Complex64, theta: f64) -> Result<Complex64> {
    let (al, be) = alpha_beta(z)?;
    Ok(kernel_s(z, theta) - al - be * theta.cos())
}

/// `4 sin^2(theta) / (1 - |z|)^3`, which dominates `|Q|`.
pub fn kernel_q_bound(z: Complex64, theta: f64) -> f64 {
    let s = theta.sin();
    4.0 * s * s / (1.0 - z.norm()).powi(3)
}

type Eval = dyn Fn(f64) -> Result<f64> + Send + Sync;

/// A real function on `(0, pi)`, extended evenly to the circle.
#[derive(Clone)]
pub struct BoundaryFunction {
    eval: Arc<Eval>,
}

impl std::fmt::Debug for BoundaryFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BoundaryFunction(..)")
    }
}

impl BoundaryFunction {
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        BoundaryFunction {
            eval: Arc::new(move |t| Ok(f(t))),
        }
    }

    /// Fallible evaluation, e.g. when each value needs its own limit.
    pub fn from_fallible<F>(f: F) -> Self
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        BoundaryFunction { eval: Arc::new(f) }
    }

    /// Piecewise-linear interpolation of samples at increasing `theta` in
    /// `(0, pi)`, held constant beyond the first and last sample.
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("boundary samples must be nonempty"));
        }
        if samples.iter().any(|&(t, v)| !(t > 0.0 && t < PI && v.is_finite())) {
            return Err(invalid("sample angles must lie in (0, pi) with finite values"));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("sample angles must be strictly increasing"));
        }
        Ok(BoundaryFunction {
            eval: Arc::new(move |t| {
                let i = samples.partition_point(|s| s.0 <= t);
                Ok(if i == 0 {
                    samples[0].1
                } else if i == samples.len() {
                    samples[i - 1].1
                } else {
                    let (t0, v0) = samples[i - 1];
                    let (t1, v1) = samples[i];
                    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                })
            }),
        })
    }

    pub fn value(&self, theta: f64) -> Result<f64> {
        (self.eval)(theta)
    }
}

/// `f(z) = (1/2pi) int_0^{2pi} Q(z, theta) g(theta) dtheta`, using evenness to
/// integrate over `(0, pi)` only.
pub fn renorm_poisson(g: &BoundaryFunction, z: Complex64, opts: &QuadOptions) -> Result<Complex64> {
    if !(z.norm() < 1.0) {
        return Err(invalid(format!("z = {z} must lie inside the unit disk")));
    }
    let v = integrate(|t| Ok(kernel_q(z, t) * g.value(t)?), 0.0, PI, opts)?;
    Ok(v / PI)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRecovery {
    pub value: f64,
    /// `Re f(r e^{i theta0})` for each radius.
    pub samples: Vec<f64>,
}

/// Extrapolate `Re f(r e^{i theta0})` to `r = 1`, where it equals `g(theta0)`
/// for continuous `g`.
pub fn boundary_recovery(
    g: &BoundaryFunction,
    theta0: f64,
    r_seq: &[f64],
    opts: &QuadOptions,
) -> Result<BoundaryRecovery> {
    if r_seq.len() < 2 || r_seq.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(invalid("need at least two radii in (0, 1)"));
    }
    if r_seq.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("radii must increase toward 1"));
    }
    let samples = r_seq
        .iter()
        .map(|&r| renorm_poisson(g, Complex64::from_polar(r, theta0), opts).map(|v| v.re))
        .collect::<Result<Vec<_>>>()?;
    let k = samples.len().min(4);
    let h: Vec<f64> = r_seq[r_seq.len() - k..].iter().map(|r| 1.0 - r).collect();
    let f: Vec<Complex64> = samples[samples.len() - k..]
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let value = boundary_limit(&h, &f, 1e-3)?.re;
    Ok(BoundaryRecovery { value, samples })
}
