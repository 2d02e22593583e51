//! Regularized perturbation determinants.
//!
//! With `E = z + 1/z` and `A = (J - J_0)(J_0 - E)^{-1}`, the Hilbert-Schmidt
//! determinant `det_2(1 + A) = det(1 + A) e^{-tr A}` is finite whenever the
//! coefficients are square summable. Multiplying by `e^{T(z)}`, where `T` is
//! the trace with its conditionally convergent part kept, gives `L_ren`, and
//! `u(z) = L_ren(z) / prod a_n`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, JostError, Result};
use crate::jacobi::{partial_sums, series_verdict, JacobiParams, Verdict};
use crate::util::CompensatedSum;
use crate::weyl::{check_disk, m_function, DEFAULT_DEPTH};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub const DEFAULT_TRUNC: usize = 200;
pub const MAX_TRUNC: usize = 3200;
/// Change in `L_ren` under doubling that counts as converged.
pub const TRUNC_TOL: f64 = 1e-10;
/// Largest admissible tail uncertainty in the conditionally convergent sums.
pub const TAIL_TOL: f64 = 1e-6;

/// `[(J_0 - E)^{-1}]_{nm} = -(1/z - z)^{-1} (z^{|m-n|} - z^{m+n})` for `n, m >= 1`.
pub fn free_resolvent_entry(n: usize, m: usize, z: Complex64) -> Complex64 {
    let d = n.abs_diff(m) as i32;
    let lo = n.min(m) as i32;
    -z * z.powi(d) * (ONE - z.powi(2 * lo)) / (ONE - z * z)
}

/// Finite section of `A = delta J G_0`.
#[derive(Debug, Clone)]
pub struct PerturbationMatrix {
    pub entries: DMatrix<Complex64>,
    pub trunc: usize,
    pub z: Complex64,
    /// Frobenius norm of the section.
    pub hs_norm: f64,
}

/// Rows and columns `1..=n_trunc` of `A`.
pub fn build_k(params: &JacobiParams, z: Complex64, n_trunc: usize) -> Result<PerturbationMatrix> {
    check_disk(z, false, true)?;
    if n_trunc == 0 {
        return Err(invalid("n_trunc must be positive"));
    }
    params.check_index(n_trunc)?;
    let n = n_trunc;
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for row in 1..=n {
        let below = if row > 1 { params.a(row - 1) - 1.0 } else { 0.0 };
        let diag = params.b(row);
        let above = params.a(row) - 1.0;
        if below == 0.0 && diag == 0.0 && above == 0.0 {
            continue;
        }
        for col in 1..=n {
            let mut v = diag * free_resolvent_entry(row, col, z);
            if below != 0.0 {
                v += below * free_resolvent_entry(row - 1, col, z);
            }
            if above != 0.0 {
                v += above * free_resolvent_entry(row + 1, col, z);
            }
            m[(row - 1, col - 1)] = v;
        }
    }
    let hs_norm = m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    Ok(PerturbationMatrix {
        entries: m,
        trunc: n,
        z,
        hs_norm,
    })
}

/// `det(1 + A)` by LU with partial pivoting.
pub fn det_plain(mat: &PerturbationMatrix) -> Complex64 {
    let n = mat.trunc;
    let one_plus = &mat.entries + DMatrix::<Complex64>::identity(n, n);
    one_plus.lu().determinant()
}

/// `det(1 + A) e^{-tr A}`.
pub fn det2(mat: &PerturbationMatrix) -> Complex64 {
    det_plain(mat) * (-mat.entries.trace()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TValue {
    pub value: Complex64,
    /// Spread of the conditionally convergent sums over the final window,
    /// scaled like their contribution to `T`.
    pub tail_estimate: f64,
}

/// `T(z) = -(1/z - z)^{-1} [ sum b_n (1 - z^{2n}) + 2 sum (a_n - 1)(z - z^{2n+1}) ]`
/// through `horizon`.
pub fn t_renorm(params: &JacobiParams, z: Complex64, horizon: usize, tol: f64) -> Result<TValue> {
    check_disk(z, false, true)?;
    let horizon = params.support_len().unwrap_or(horizon);
    params.check_index(horizon)?;
    let z2 = z * z;
    let (mut sb, mut sa) = (CompensatedSum::default(), CompensatedSum::default());
    let mut pb = Complex64::new(0.0, 0.0);
    let mut pa = Complex64::new(0.0, 0.0);
    let mut pow = z2;
    let window = (horizon / 10).max(1);
    let (mut lo_b, mut hi_b, mut lo_a, mut hi_a) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for n in 1..=horizon {
        let (a, b) = (params.a(n), params.b(n));
        sb.add(b);
        sa.add(a - 1.0);
        if pow.norm() > 1e-300 {
            pb += b * pow;
            pa += (a - 1.0) * pow * z;
        }
        pow *= z2;
        if n + window >= horizon {
            lo_b = lo_b.min(sb.value());
            hi_b = hi_b.max(sb.value());
            lo_a = lo_a.min(sa.value());
            hi_a = hi_a.max(sa.value());
        }
    }
    let pref = -z / (ONE - z2);
    let value = pref * (sb.value() - pb + 2.0 * z * sa.value() - 2.0 * pa);
    let tail_estimate = if params.is_free_tail() {
        0.0
    } else {
        pref.norm() * ((hi_b - lo_b) + 2.0 * z.norm() * (hi_a - lo_a))
    };
    if tail_estimate > tol {
        return Err(JostError::NonConvergence {
            last: value,
            oscillation: tail_estimate,
            n: horizon,
        });
    }
    Ok(TValue { value, tail_estimate })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LRen {
    pub value: Complex64,
    pub det2: Complex64,
    pub t_value: Complex64,
    pub n_trunc_used: usize,
    pub tail_estimate: f64,
}

fn default_horizon(params: &JacobiParams) -> usize {
    params.horizon().unwrap_or_else(|| params.head_len())
}

/// `L_ren = det_2(1 + A) e^{T}`.
///
/// For free tails every row of `A` past the head vanishes, so one section of
/// size `max(n_trunc, H + 1)` is exact. Other tails double the section until
/// the value moves by less than `TRUNC_TOL`.
pub fn l_ren(params: &JacobiParams, z: Complex64, n_trunc: usize, horizon: Option<usize>) -> Result<LRen> {
    let horizon = horizon.unwrap_or_else(|| default_horizon(params));
    let t = t_renorm(params, z, horizon, TAIL_TOL)?;
    let et = t.value.exp();
    if let Some(h) = params.support_len() {
        let n = n_trunc.max(h + 1);
        let d = det2(&build_k(params, z, n)?);
        return Ok(LRen {
            value: d * et,
            det2: d,
            t_value: t.value,
            n_trunc_used: n,
            tail_estimate: 0.0,
        });
    }
    let mut n = n_trunc.max(1);
    let mut prev = det2(&build_k(params, z, n)?);
    loop {
        let next_n = 2 * n;
        if next_n > MAX_TRUNC {
            return Err(JostError::NonConvergence {
                last: prev * et,
                oscillation: f64::NAN,
                n,
            });
        }
        let next = det2(&build_k(params, z, next_n)?);
        let change = ((next - prev) * et).norm();
        if change < TRUNC_TOL {
            return Ok(LRen {
                value: next * et,
                det2: next,
                t_value: t.value,
                n_trunc_used: next_n,
                tail_estimate: t.tail_estimate + change,
            });
        }
        n = next_n;
        prev = next;
    }
}

/// `sum log a_n` through the horizon, or `BetaFailure` when it diverges.
pub(crate) fn log_prod_a(params: &JacobiParams, horizon: usize) -> Result<f64> {
    if let Some(h) = params.support_len() {
        return Ok((1..=h).map(|n| params.a(n).ln()).sum());
    }
    let ps = partial_sums(params, horizon)?;
    if series_verdict(&ps.log_a, horizon / 10, TAIL_TOL) == Verdict::Fails {
        return Err(JostError::BetaFailure);
    }
    Ok(*ps.log_a.last().unwrap())
}

/// `u(z) = L_ren(z) / prod a_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetJost {
    pub u: Complex64,
    pub l_ren: LRen,
}

pub fn jost_via_det(params: &JacobiParams, z: Complex64, n_trunc: usize) -> Result<DetJost> {
    let horizon = default_horizon(params);
    let lp = log_prod_a(params, horizon.max(1))?;
    let l = l_ren(params, z, n_trunc, Some(horizon))?;
    Ok(DetJost {
        u: l.value * (-lp).exp(),
        l_ren: l,
    })
}

/// `M(z) - z L_ren(J^{(1)}) / L_ren(J)`.
pub fn m_ratio_residual(params: &JacobiParams, z: Complex64, n_trunc: usize) -> Result<Complex64> {
    let m = m_function(params, z, DEFAULT_DEPTH)?;
    let l0 = l_ren(params, z, n_trunc, None)?.value;
    let l1 = l_ren(&params.strip(1), z, n_trunc, None)?.value;
    Ok(m - z * l1 / l0)
}
