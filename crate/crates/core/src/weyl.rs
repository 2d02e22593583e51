//! Weyl m-functions by backward continued fractions, the Weyl solution and
//! its scaled form, and coefficient diagnostics.
//!
//! `M_n(z) = 1 / (z + 1/z - b_{n+1} - a_{n+1}^2 M_{n+1}(z))`, closed at a finite
//! depth by the free value `M = z`. For free tails the closure is exact once the
//! depth reaches the head; other tails double the depth until the values settle.

use num_complex::Complex64;

use crate::error::{invalid, JostError, Result};
use crate::jacobi::{partial_sums, JacobiParams};
use crate::util::boundary_limit;

/// Denominators below this magnitude signal an eigenvalue of a stripped matrix.
pub const EIGENVALUE_GUARD: f64 = 1e-14;

/// Default closure depth for infinite tails.
pub const DEFAULT_DEPTH: usize = 2000;

const SETTLE_TOL: f64 = 1e-13;

/// A point of the closed unit disk with its energy `E = z + 1/z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint {
    pub z: Complex64,
    pub on_boundary: bool,
}

impl DiskPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        let r = z.norm();
        if !(r.is_finite()) || r > 1.0 + 1e-12 {
            return Err(invalid(format!("z = {z} lies outside the closed unit disk")));
        }
        Ok(DiskPoint {
            z,
            on_boundary: (r - 1.0).abs() <= 1e-12,
        })
    }

    pub fn on_circle(theta: f64) -> Self {
        DiskPoint {
            z: Complex64::from_polar(1.0, theta),
            on_boundary: true,
        }
    }

    /// `E = z + 1/z`; infinite at `z = 0`.
    pub fn energy(&self) -> Complex64 {
        self.z + self.z.inv()
    }
}

pub(crate) fn check_disk(z: Complex64, allow_boundary: bool, allow_zero: bool) -> Result<()> {
    let p = DiskPoint::new(z)?;
    if p.on_boundary && !allow_boundary {
        return Err(invalid(format!("z = {z} must lie strictly inside the unit disk")));
    }
    if !allow_zero && z == Complex64::new(0.0, 0.0) {
        return Err(invalid("z must be nonzero"));
    }
    Ok(())
}

/// `M_0(z), ..., M_depth(z)` for one closure depth.
#[derive(Debug, Clone)]
pub struct MTrace {
    pub z: Complex64,
    pub values: Vec<Complex64>,
}

impl MTrace {
    pub fn depth(&self) -> usize {
        self.values.len() - 1
    }
}

/// Backward recursion closed by `M_depth = z`.
pub fn m_trace(params: &JacobiParams, z: Complex64, depth: usize) -> Result<MTrace> {
    check_disk(z, true, false)?;
    params.check_index(depth)?;
    let e = z + z.inv();
    let mut values = vec![Complex64::new(0.0, 0.0); depth + 1];
    values[depth] = z;
    for k in (0..depth).rev() {
        let a = params.a(k + 1);
        let den = e - params.b(k + 1) - a * a * values[k + 1];
        if den.norm() < EIGENVALUE_GUARD {
            return Err(JostError::EigenvalueHit { level: k, z });
        }
        values[k] = den.inv();
    }
    Ok(MTrace { z, values })
}

/// Trace whose first `needed + 1` entries are insensitive to the closure depth.
pub(crate) fn settled_trace(
    params: &JacobiParams,
    z: Complex64,
    needed: usize,
    start_depth: usize,
) -> Result<MTrace> {
    if let Some(h) = params.support_len() {
        return m_trace(params, z, needed.max(h).max(1));
    }
    let horizon = params.horizon().unwrap_or(usize::MAX);
    let mut depth = start_depth.max(2 * needed + 64).min(horizon);
    let mut prev = m_trace(params, z, depth)?;
    loop {
        if depth >= horizon {
            return Err(JostError::NonConvergence {
                last: prev.values[0],
                oscillation: f64::NAN,
                n: depth,
            });
        }
        depth = (2 * depth).min(horizon);
        let next = m_trace(params, z, depth)?;
        let change = (0..=needed)
            .map(|k| (next.values[k] - prev.values[k]).norm() / next.values[k].norm().max(1.0))
            .fold(0.0, f64::max);
        if change < SETTLE_TOL {
            return Ok(next);
        }
        if depth >= horizon {
            return Err(JostError::NonConvergence {
                last: next.values[0],
                oscillation: change,
                n: depth,
            });
        }
        prev = next;
    }
}

/// `M(z)`, exact for free tails and depth-adaptive otherwise.
pub fn m_function(params: &JacobiParams, z: Complex64, depth: usize) -> Result<Complex64> {
    Ok(settled_trace(params, z, 0, depth)?.values[0])
}

/// `w_0 = 1`, `w_n = M (a_1 M_1) ... (a_{n-1} M_{n-1})`.
pub fn weyl_solution(params: &JacobiParams, z: Complex64, n: usize) -> Result<Vec<Complex64>> {
    check_disk(z, true, false)?;
    let trace = settled_trace(params, z, n, DEFAULT_DEPTH)?;
    let mut out = Vec::with_capacity(n + 1);
    let mut w = Complex64::new(1.0, 0.0);
    out.push(w);
    for k in 0..n {
        let a = if k == 0 { 1.0 } else { params.a(k) };
        w *= a * trace.values[k];
        out.push(w);
    }
    Ok(out)
}

/// `z^{-k} w_k` for `k = 0..=n`, accumulated factor by factor.
pub fn wtilde(params: &JacobiParams, z: Complex64, n: usize) -> Result<Vec<Complex64>> {
    check_disk(z, true, false)?;
    let trace = settled_trace(params, z, n, DEFAULT_DEPTH)?;
    Ok(wtilde_from_trace(params, &trace, n))
}

pub(crate) fn wtilde_from_trace(params: &JacobiParams, trace: &MTrace, n: usize) -> Vec<Complex64> {
    let zinv = trace.z.inv();
    let mut out = Vec::with_capacity(n + 1);
    let mut w = Complex64::new(1.0, 0.0);
    out.push(w);
    for k in 0..n {
        let a = if k == 0 { 1.0 } else { params.a(k) };
        w *= a * trace.values[k] * zinv;
        out.push(w);
    }
    out
}

/// Partial sums of the low-order coefficient functionals.
#[derive(Debug, Clone)]
pub struct TaylorDiagnostics {
    /// `sum_{j<=N} log a_j`
    pub nu1: Vec<f64>,
    /// `sum_{j<=N} b_j`
    pub nu2: Vec<f64>,
    /// `sum_{j<=N} a_j^2 - 1 + b_j^2 / 2`
    pub nu3: Vec<f64>,
    /// `sum G(a_j) + b_j^2 / 2` through the horizon
    pub g_sum: f64,
    /// `(a_1 ... a_N)^{-1}` at the horizon
    pub gamma_n: f64,
    /// `b_1 + ... + b_N` at the horizon
    pub lambda_n: f64,
}

pub fn taylor_diagnostics(params: &JacobiParams, horizon: usize) -> Result<TaylorDiagnostics> {
    if horizon == 0 {
        return Err(invalid("horizon must be positive"));
    }
    let ps = partial_sums(params, horizon)?;
    Ok(TaylorDiagnostics {
        gamma_n: (-ps.log_a[horizon - 1]).exp(),
        lambda_n: ps.b[horizon - 1],
        g_sum: ps.g,
        nu1: ps.log_a,
        nu2: ps.b,
        nu3: ps.quad,
    })
}

/// First two Taylor coefficients of `log(M(z)/z)` at the origin.
pub fn log_m_over_z_coefficients(params: &JacobiParams) -> (f64, f64) {
    let (a1, b1) = (params.a(1), params.b(1));
    (b1, 0.5 * b1 * b1 + a1 * a1 - 1.0)
}

/// Boundary values are approached along `r = 1 - eps` for these `eps`.
pub const BOUNDARY_EPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

/// `Im M(e^{i theta})`, positive for `theta` in `(0, pi)`.
///
/// Free tails are evaluated on the circle directly. Other tails are sampled at
/// `r = 1 - eps` and extrapolated to `r = 1`.
pub fn boundary_im_m(params: &JacobiParams, theta: f64, depth: usize) -> Result<f64> {
    if !theta.is_finite() {
        return Err(invalid("theta must be finite"));
    }
    if params.is_free_tail() {
        return Ok(m_function(params, Complex64::from_polar(1.0, theta), depth)?.im);
    }
    let mut f = Vec::with_capacity(BOUNDARY_EPS.len());
    for &eps in &BOUNDARY_EPS {
        let m = m_function(params, Complex64::from_polar(1.0 - eps, theta), depth)?;
        f.push(Complex64::new(m.im, 0.0));
    }
    Ok(boundary_limit(&BOUNDARY_EPS, &f, 1e-3)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_m_is_z() {
        let j = JacobiParams::free();
        for z in [c(0.3, 0.2), c(-0.5, 0.1), c(0.0, 0.9)] {
            assert!((m_function(&j, z, 10).unwrap() - z).norm() < 1e-15);
        }
    }

    #[test]
    fn rank_one_m() {
        let j = JacobiParams::rank_one(0.5).unwrap();
        let m = m_function(&j, c(0.5, 0.0), DEFAULT_DEPTH).unwrap();
        assert!((m - c(2.0 / 3.0, 0.0)).norm() < 1e-14);
        let m = m_function(&j, c(0.0, 1.0), DEFAULT_DEPTH).unwrap();
        assert!((m.im - 0.8).abs() < 1e-14);
    }

    #[test]
    fn eigenvalue_is_reported() {
        let j = JacobiParams::rank_one(2.0).unwrap();
        assert!(matches!(
            m_function(&j, c(0.5, 0.0), 10),
            Err(JostError::EigenvalueHit { level: 0, .. })
        ));
    }

    #[test]
    fn wtilde_rank_one_limit() {
        let j = JacobiParams::rank_one(2.0).unwrap();
        let w = wtilde(&j, c(0.4, 0.0), 20).unwrap();
        assert!((w[20] - c(5.0, 0.0)).norm() < 1e-13);
        assert_eq!(w[0], c(1.0, 0.0));
    }

    #[test]
    fn weyl_solution_matches_scaled_form() {
        let j = JacobiParams::new(vec![1.2, 0.8], vec![0.1, -0.3, 0.2]).unwrap();
        let z = c(0.3, 0.4);
        let w = weyl_solution(&j, z, 12).unwrap();
        let wt = wtilde(&j, z, 12).unwrap();
        for k in 0..=12 {
            assert!((w[k] - z.powu(k as u32) * wt[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn alternating_tail_settles() {
        let j = JacobiParams::with_rule(
            vec![],
            vec![],
            crate::jacobi::Rule::Power {
                exponent: 1.0,
                sign: crate::jacobi::Sign::Alternating,
                on: crate::jacobi::Entry::B,
            },
            1 << 20,
        )
        .unwrap();
        let z = c(0.3, 0.5);
        let m1 = m_function(&j, z, 100).unwrap();
        let m2 = m_trace(&j, z, 1 << 18).unwrap().values[0];
        assert!((m1 - m2).norm() < 1e-12);
    }

    #[test]
    fn log_m_expansion() {
        let j = JacobiParams::new(vec![1.3], vec![0.4]).unwrap();
        let (c1, c2) = log_m_over_z_coefficients(&j);
        for &t in &[1e-2, 5e-3] {
            let z = c(t, 0.0);
            let lhs = (m_function(&j, z, 10).unwrap() / z).ln();
            let rhs = c1 * t + c2 * t * t;
            assert!((lhs - rhs).norm() < 10.0 * t * t * t);
        }
    }

    #[test]
    fn taylor_alternating_harmonic() {
        let j = JacobiParams::with_rule(
            vec![],
            vec![],
            crate::jacobi::Rule::Power {
                exponent: 1.0,
                sign: crate::jacobi::Sign::Alternating,
                on: crate::jacobi::Entry::B,
            },
            1_000_000,
        )
        .unwrap();
        let d = taylor_diagnostics(&j, 1_000_000).unwrap();
        let n = d.nu2.len();
        let tail_avg = 0.5 * (d.nu2[n - 1] + d.nu2[n - 2]);
        assert!((tail_avg + std::f64::consts::LN_2).abs() < 1e-9);
        assert_eq!(d.gamma_n, 1.0);
    }

    #[test]
    fn taylor_off_diagonal_series() {
        // a_n = 1 + 1/n^2: sum log a_n = log(sinh(pi)/pi).
        let j = JacobiParams::with_rule(
            vec![],
            vec![],
            crate::jacobi::Rule::Power {
                exponent: 2.0,
                sign: crate::jacobi::Sign::Positive,
                on: crate::jacobi::Entry::A,
            },
            1_000_000,
        )
        .unwrap();
        let d = taylor_diagnostics(&j, 1_000_000).unwrap();
        let limit = (std::f64::consts::PI.sinh() / std::f64::consts::PI).ln();
        // Tail of sum 1/n^2 beyond N is about 1/N.
        assert!((d.nu1.last().unwrap() + 1e-6 - limit).abs() < 1e-9);
    }

    #[test]
    fn boundary_free_and_rank_one() {
        let free = JacobiParams::free();
        assert!((boundary_im_m(&free, 0.7, 10).unwrap() - 0.7f64.sin()).abs() < 1e-15);
        let j = JacobiParams::rank_one(0.5).unwrap();
        let th: f64 = 1.1;
        let expect = th.sin() / (Complex64::new(1.0, 0.0) - 0.5 * Complex64::from_polar(1.0, th)).norm_sqr();
        assert!((boundary_im_m(&j, th, 10).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn boundary_extrapolation_for_decaying_tail() {
        let j = JacobiParams::with_rule(
            vec![],
            vec![],
            crate::jacobi::Rule::Power {
                exponent: 2.0,
                sign: crate::jacobi::Sign::Positive,
                on: crate::jacobi::Entry::B,
            },
            1 << 22,
        )
        .unwrap();
        let v = boundary_im_m(&j, 1.2, 4000).unwrap();
        assert!(v > 0.0);
        // The free-tail truncation is a close neighbour.
        let t = j.truncate_gc(4000).unwrap();
        let w = boundary_im_m(&t, 1.2, 10).unwrap();
        assert!((v - w).abs() < 1e-3, "{v} vs {w}");
    }
}
