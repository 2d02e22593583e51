//! Discrete spectrum outside `[-2, 2]` from finite sections.
//!
//! Eigenvalues of each section are isolated by Sturm-sequence bisection. Only
//! values with `|E| > 2 + tol` are reported, taken from the largest section and
//! marked converged when the next largest section has one within `tol`.

use crate::error::{invalid, Result};
use crate::jacobi::JacobiParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub energy: f64,
    /// Root of `z^2 - E z + 1 = 0` inside the disk.
    pub z: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumData {
    /// `E > 2`, descending.
    pub above: Vec<Eigenvalue>,
    /// `E < -2`, ascending.
    pub below: Vec<Eigenvalue>,
    pub trunc_sizes: Vec<usize>,
}

impl SpectrumData {
    /// All eigenvalues, outermost first on each side.
    pub fn all(&self) -> impl Iterator<Item = &Eigenvalue> {
        self.above.iter().chain(self.below.iter())
    }

    pub fn unconverged(&self) -> usize {
        self.all().filter(|e| !e.converged).count()
    }

    /// Disk points of the converged eigenvalues.
    pub fn zeros(&self) -> Vec<f64> {
        self.all().filter(|e| e.converged).map(|e| e.z).collect()
    }
}

/// Disk point `z` with `z + 1/z = E` for real `|E| > 2`.
pub fn energy_to_z(e: f64) -> f64 {
    let s = e.signum();
    2.0 / (e + s * (e * e - 4.0).sqrt())
}

/// Symmetric tridiagonal section with diagonal `d` and off-diagonal `off`.
struct Section {
    d: Vec<f64>,
    off_sq: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Section {
    fn new(params: &JacobiParams, n: usize) -> Result<Self> {
        let (a, b) = params.coefficients(n)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { a[i - 1] } else { 0.0 } + if i + 1 < n { a[i] } else { 0.0 };
            lo = lo.min(b[i] - r);
            hi = hi.max(b[i] + r);
        }
        Ok(Section {
            d: b,
            off_sq: a[..n.saturating_sub(1)].iter().map(|x| x * x).collect(),
            lo: lo - 1.0,
            hi: hi + 1.0,
        })
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.d.len() {
            let prev = if i == 0 { 0.0 } else { self.off_sq[i - 1] / q };
            q = self.d[i] - x - prev;
            if q == 0.0 {
                q = -f64::EPSILON * (x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, pred: impl Fn(usize) -> bool) -> f64 {
        // pred(count_below(x)) is true on the low side of the target.
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return mid;
            }
            if pred(self.count_below(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    /// Eigenvalues above `t`, descending.
    fn above(&self, t: f64) -> Vec<f64> {
        let n = self.d.len();
        let k = n - self.count_below(t);
        (1..=k)
            .map(|i| self.bisect(t, self.hi, |c| n - c >= i))
            .collect()
    }

    /// Eigenvalues below `t`, ascending.
    fn below(&self, t: f64) -> Vec<f64> {
        let k = self.count_below(t);
        (1..=k).map(|i| self.bisect(self.lo, t, |c| c < i)).collect()
    }
}

/// Raw eigenvalues of the `n x n` section outside `[-2 - tol, 2 + tol]`.
pub fn section_outside(params: &JacobiParams, n: usize, tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = Section::new(params, n)?;
    Ok((s.above(2.0 + tol), s.below(-2.0 - tol)))
}

fn mark(values: &[f64], reference: &[f64], tol: f64) -> Vec<Eigenvalue> {
    values
        .iter()
        .map(|&e| Eigenvalue {
            energy: e,
            z: energy_to_z(e),
            converged: reference.iter().any(|&r| (r - e).abs() < tol),
        })
        .collect()
}

/// Eigenvalues outside `[-2, 2]` with convergence flags.
pub fn spectrum(params: &JacobiParams, trunc_sizes: &[usize], tol: f64) -> Result<SpectrumData> {
    if trunc_sizes.len() < 2 {
        return Err(invalid("spectrum needs at least two truncation sizes"));
    }
    if trunc_sizes.windows(2).any(|w| w[1] <= w[0]) || trunc_sizes[0] == 0 {
        return Err(invalid("truncation sizes must be positive and increasing"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    let k = trunc_sizes.len();
    let (big_above, big_below) = section_outside(params, trunc_sizes[k - 1], tol)?;
    let (ref_above, ref_below) = section_outside(params, trunc_sizes[k - 2], tol)?;
    Ok(SpectrumData {
        above: mark(&big_above, &ref_above, tol),
        below: mark(&big_below, &ref_below, tol),
        trunc_sizes: trunc_sizes.to_vec(),
    })
}

/// Section sizes that resolve the bound states of a free-tail matrix.
pub(crate) fn default_sizes(params: &JacobiParams) -> Vec<usize> {
    let h = params.head_len().max(1);
    vec![h + 200, h + 400]
}
