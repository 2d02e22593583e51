//! Orthonormal polynomials, the scaled sequence `c_n(z) = z^n p_n(z + 1/z)`,
//! and the coupled two-term recursion that produces both `c_n` and the Jost
//! function of the truncated matrix.
//!
//! With `c_0 = g_0 = 1`:
//!
//! ```text
//! c_{n+1} = a_{n+1}^{-1} [ (z^2 - b_{n+1} z) c_n + g_n ]
//! g_{n+1} = a_{n+1}^{-1} [ ((1 - a_{n+1}^2) z^2 - b_{n+1} z) c_n + g_n ]
//! ```
//!
//! `g_n` is the Jost function of the matrix that keeps `a_j, b_j` for `j <= n`,
//! and `c_n (1 - z^2) / g_n -> 1`.

use num_complex::Complex64;

use crate::error::{invalid, JostError, Result};
use crate::jacobi::JacobiParams;
use crate::weyl::{check_disk, settled_trace, wtilde_from_trace, DEFAULT_DEPTH};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Consecutive small increments required before a limit is accepted.
pub const STABLE_RUN: usize = 5;

/// `p_0(x), ..., p_n(x)` from the three-term recursion.
pub fn orthonormal_polys(params: &JacobiParams, x: Complex64, n: usize) -> Result<Vec<Complex64>> {
    params.check_index(n)?;
    let mut p = Vec::with_capacity(n + 1);
    p.push(ONE);
    let mut prev = ZERO;
    for k in 0..n {
        let a_prev = if k == 0 { 0.0 } else { params.a(k) };
        let next = ((x - params.b(k + 1)) * p[k] - a_prev * prev) / params.a(k + 1);
        prev = p[k];
        p.push(next);
    }
    Ok(p)
}

/// Real-argument variant used on `[-2, 2]`.
pub(crate) fn orthonormal_polys_real(params: &JacobiParams, x: f64, n: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    let mut prev = 0.0;
    for k in 0..n {
        let a_prev = if k == 0 { 0.0 } else { params.a(k) };
        let next = ((x - params.b(k + 1)) * p[k] - a_prev * prev) / params.a(k + 1);
        prev = p[k];
        p.push(next);
    }
    p
}

/// `c_k = z^k p_k(z + 1/z)` for `k = 0..=n`.
///
/// Runs the three-term recursion in scaled form, so no power of `z` is formed.
pub fn szego_sequence(params: &JacobiParams, z: Complex64, n: usize) -> Result<Vec<Complex64>> {
    check_disk(z, true, true)?;
    params.check_index(n)?;
    let z2 = z * z;
    let mut c = Vec::with_capacity(n + 1);
    c.push(ONE);
    let mut prev = ZERO;
    for k in 0..n {
        let a_prev = if k == 0 { 0.0 } else { params.a(k) };
        let next = ((ONE + z2 - params.b(k + 1) * z) * c[k] - a_prev * z2 * prev) / params.a(k + 1);
        prev = c[k];
        c.push(next);
    }
    Ok(c)
}

/// `(c_n, g_n)` after `n` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcState {
    pub n: usize,
    pub c: Complex64,
    pub g: Complex64,
}

impl GcState {
    pub fn initial() -> Self {
        GcState { n: 0, c: ONE, g: ONE }
    }
}

/// One step using `a = a_{n+1}`, `b = b_{n+1}`.
pub fn gc_step(state: GcState, a: f64, b: f64, z: Complex64) -> GcState {
    let z2 = z * z;
    let ainv = 1.0 / a;
    GcState {
        n: state.n + 1,
        c: ((z2 - b * z) * state.c + state.g) * ainv,
        g: (((1.0 - a * a) * z2 - b * z) * state.c + state.g) * ainv,
    }
}

/// States `0..=n`.
pub fn gc_sequence(params: &JacobiParams, z: Complex64, n: usize) -> Result<Vec<GcState>> {
    check_disk(z, true, true)?;
    params.check_index(n)?;
    let mut out = Vec::with_capacity(n + 1);
    let mut s = GcState::initial();
    out.push(s);
    for k in 1..=n {
        s = gc_step(s, params.a(k), params.b(k), z);
        out.push(s);
    }
    Ok(out)
}

/// A limit read off a sequence together with the evidence for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceLimit {
    pub value: Complex64,
    pub n_used: usize,
    /// Largest deviation from `value` over the final stable run.
    pub oscillation: f64,
}

/// Watches a sequence for `STABLE_RUN` consecutive increments below `tol`.
pub(crate) struct StabilityWindow {
    tol: f64,
    run: usize,
    recent: Vec<Complex64>,
    last: Option<Complex64>,
    last_step: f64,
}

impl StabilityWindow {
    pub fn new(tol: f64) -> Self {
        StabilityWindow {
            tol,
            run: 0,
            recent: Vec::new(),
            last: None,
            last_step: 0.0,
        }
    }

    /// Feed the next term; returns the limit once the run is complete.
    pub fn push(&mut self, v: Complex64, n: usize) -> Option<SequenceLimit> {
        if let Some(prev) = self.last {
            self.last_step = (v - prev).norm();
            if self.last_step < self.tol {
                self.run += 1;
            } else {
                self.run = 0;
                self.recent.clear();
            }
        }
        self.recent.push(v);
        self.last = Some(v);
        if self.run >= STABLE_RUN {
            let oscillation = self.recent.iter().map(|x| (x - v).norm()).fold(0.0, f64::max);
            return Some(SequenceLimit {
                value: v,
                n_used: n,
                oscillation,
            });
        }
        None
    }

    pub fn failure(&self, n: usize) -> JostError {
        let last = self.last.unwrap_or(ONE);
        JostError::NonConvergence {
            last,
            // The window restarts on every large step, so it alone can read 0.
            oscillation: self
                .recent
                .iter()
                .map(|x| (x - last).norm())
                .fold(self.last_step, f64::max),
            n,
        }
    }
}

/// `lim g_n`, which is the Jost function `u(z)`.
///
/// Free tails stop at the head, where the sequence becomes constant.
pub fn gc_limit(params: &JacobiParams, z: Complex64, tol: f64, max_n: usize) -> Result<SequenceLimit> {
    check_disk(z, true, true)?;
    if !(tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    if let Some(h) = params.support_len() {
        let s = gc_sequence(params, z, h)?;
        return Ok(SequenceLimit {
            value: s[h].g,
            n_used: h,
            oscillation: 0.0,
        });
    }
    let limit = max_n.min(params.horizon().unwrap_or(usize::MAX));
    let mut window = StabilityWindow::new(tol);
    let mut s = GcState::initial();
    window.push(s.g, 0);
    for k in 1..=limit {
        s = gc_step(s, params.a(k), params.b(k), z);
        if let Some(found) = window.push(s.g, k) {
            return Ok(found);
        }
    }
    Err(window.failure(limit))
}

/// The two terms of `a_n (p_n w_n - w_{n+1} p_{n-1})` in scaled form.
#[derive(Debug, Clone, Copy)]
pub struct WronskianTerms {
    pub first: Complex64,
    pub second: Complex64,
}

impl WronskianTerms {
    /// Deviation from 1.
    pub fn residual(&self) -> Complex64 {
        self.first - self.second - ONE
    }

    /// Residual relative to the size of the terms.
    pub fn relative(&self) -> f64 {
        self.residual().norm() / self.first.norm().max(self.second.norm()).max(1.0)
    }
}

/// Wronskian terms for `k = 0..=n`, with `a_0 = 1`, `p_{-1} = 0`.
///
/// `p_k w_k = c_k wt_k` and `w_{k+1} p_{k-1} = z^2 wt_{k+1} c_{k-1}`, so the
/// residual is formed without growing powers of `z`.
pub fn wronskian_terms(params: &JacobiParams, z: Complex64, n: usize) -> Result<Vec<WronskianTerms>> {
    check_disk(z, true, false)?;
    let c = szego_sequence(params, z, n)?;
    let trace = settled_trace(params, z, n + 1, DEFAULT_DEPTH)?;
    let wt = wtilde_from_trace(params, &trace, n + 1);
    let z2 = z * z;
    Ok((0..=n)
        .map(|k| {
            let a = if k == 0 { 1.0 } else { params.a(k) };
            let c_prev = if k == 0 { ZERO } else { c[k - 1] };
            WronskianTerms {
                first: a * c[k] * wt[k],
                second: a * z2 * wt[k + 1] * c_prev,
            }
        })
        .collect())
}

/// `a_n (p_n w_n - w_{n+1} p_{n-1}) - 1`.
pub fn wronskian_residual(params: &JacobiParams, z: Complex64, n: usize) -> Result<Complex64> {
    Ok(wronskian_terms(params, z, n)?[n].residual())
}
