//! Cross-validation of the Jost function routes and the asymptotic
//! experiments built on them.
//!
//! Four routes compute `u(z)`: the limit of the scaled Weyl solution, the
//! renormalized determinant, the coupled recursion, and the factorization
//! over eigenvalues with a renormalized Poisson integral. The first three are
//! exact up to rounding for free tails; the last carries quadrature error.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::blaschke::{alpha_beta, blaschke_b, renorm_product};
use crate::determinants::{jost_via_det, log_prod_a, DEFAULT_TRUNC};
use crate::error::{invalid, JostError, Result};
use crate::jacobi::{partial_sums, JacobiParams};
use crate::poisson::{kernel_q, kernel_s};
use crate::quad::{integrate, integrate_real, QuadOptions};
use crate::recursions::{
    gc_limit, orthonormal_polys_real, szego_sequence, SequenceLimit, StabilityWindow,
};
use crate::spectrum::{default_sizes, section_outside, spectrum, SpectrumData};
use crate::weyl::{
    boundary_im_m, check_disk, m_function, m_trace, settled_trace, wtilde_from_trace, DEFAULT_DEPTH,
};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Agreement expected between the exact routes.
pub const EXACT_TOL: f64 = 1e-9;
/// Agreement expected when one side comes from quadrature.
pub const QUADRATURE_TOL: f64 = 1e-4;

/// `u = 1 / lim z^{-n} w_n`.
pub fn jost_via_weyl(params: &JacobiParams, z: Complex64, tol: f64, max_n: usize) -> Result<SequenceLimit> {
    check_disk(z, false, false)?;
    if let Some(h) = params.support_len() {
        // wt_n is constant from n = H + 1 on.
        let trace = m_trace(params, z, h.max(1))?;
        let wt = wtilde_from_trace(params, &trace, h + 1);
        return Ok(SequenceLimit {
            value: wt[h + 1].inv(),
            n_used: h + 1,
            oscillation: 0.0,
        });
    }
    let horizon = params.horizon().unwrap_or(usize::MAX);
    let mut cap = 1024usize.min(max_n);
    loop {
        let trace = settled_trace(params, z, cap, DEFAULT_DEPTH)?;
        let wt = wtilde_from_trace(params, &trace, cap);
        let mut window = StabilityWindow::new(tol);
        for (n, w) in wt.iter().enumerate() {
            if let Some(found) = window.push(*w, n) {
                return Ok(SequenceLimit {
                    value: found.value.inv(),
                    oscillation: found.oscillation / found.value.norm_sqr(),
                    n_used: n,
                });
            }
        }
        if cap >= max_n || 4 * cap > horizon {
            return Err(window.failure(cap));
        }
        cap = (2 * cap).min(max_n);
    }
}

/// Eigenvalue data used by the factorization, computed on demand.
fn eigen_data(params: &JacobiParams) -> Result<SpectrumData> {
    let sizes = match params.horizon() {
        None => default_sizes(params),
        Some(h) => vec![h / 2, h],
    };
    spectrum(params, &sizes, 1e-10)
}

/// `(1/2pi) int_0^pi Q(z, theta) log(Im M(e^{i theta}) / sin theta) dtheta`.
fn log_weight_integral(params: &JacobiParams, z: Complex64, quad: &QuadOptions) -> Result<Complex64> {
    let v = integrate(
        |t| {
            let im = boundary_im_m(params, t, DEFAULT_DEPTH)?;
            if !(im > 0.0) {
                return Err(JostError::NotApplicable(format!(
                    "Im M vanishes at theta = {t}"
                )));
            }
            Ok(kernel_q(z, t) * (im / t.sin()).ln())
        },
        0.0,
        PI,
        quad,
    )?;
    Ok(v / (2.0 * PI))
}

/// `u(z) = (prod a)^{-alpha} e^{-beta sum b / 2} prod q(z, z_j)
/// exp(-(1/4pi) int Q log(Im M / sin))`.
pub fn jost_via_factorization(
    params: &JacobiParams,
    z: Complex64,
    eigen: Option<&SpectrumData>,
    quad: &QuadOptions,
) -> Result<Complex64> {
    check_disk(z, false, true)?;
    let owned;
    let eigen = match eigen {
        Some(s) => s,
        None => {
            owned = eigen_data(params)?;
            &owned
        }
    };
    let unconverged = eigen.unconverged();
    if unconverged > 0 {
        return Err(JostError::SpectrumIncomplete { unconverged });
    }
    let horizon = params.horizon().unwrap_or_else(|| params.head_len()).max(1);
    let log_a = log_prod_a(params, horizon)?;
    let sum_b = match params.support_len() {
        Some(h) => (1..=h).map(|n| params.b(n)).sum(),
        None => *partial_sums(params, horizon)?.b.last().unwrap(),
    };
    let (al, be) = alpha_beta(z)?;
    let blaschke = renorm_product(&eigen.zeros(), z, 0)?.value;
    let integral = log_weight_integral(params, z, quad)?;
    Ok((-al * log_a - 0.5 * be * sum_b - integral).exp() * blaschke)
}

/// `L_n(z) = log(a_{n+1} M_n(z) / z)` for `n < count`, continued along the
/// segment from 0 to `z` starting from the real value `log a_{n+1}`.
pub fn log_ratio_terms(params: &JacobiParams, z: Complex64, count: usize, steps: usize) -> Result<Vec<Complex64>> {
    check_disk(z, false, false)?;
    let steps = steps.max(8);
    let mut out: Vec<Complex64> = Vec::with_capacity(count);
    let mut prev: Vec<Option<Complex64>> = vec![None; count];
    for s in 1..=steps {
        let zt = z * (s as f64 / steps as f64);
        let trace = settled_trace(params, zt, count, DEFAULT_DEPTH)?;
        for (n, slot) in prev.iter_mut().enumerate() {
            let raw = (params.a(n + 1) * trace.values[n] / zt).ln();
            let v = match *slot {
                None => raw,
                Some(p) => {
                    let k = ((p.im - raw.im) / (2.0 * PI)).round();
                    Complex64::new(raw.re, raw.im + 2.0 * PI * k)
                }
            };
            *slot = Some(v);
        }
    }
    out.extend(prev.into_iter().map(|v| v.unwrap()));
    Ok(out)
}

/// Outcome of one route at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Value(#[serde(with = "crate::lab::complex_json")] Complex64),
    /// `reason` is the error kind, e.g. `non_convergence`.
    Absent { reason: String, message: String },
}

impl Route {
    pub fn value(&self) -> Option<Complex64> {
        match self {
            Route::Value(v) => Some(*v),
            Route::Absent { .. } => None,
        }
    }

    fn from(r: Result<Complex64>) -> Self {
        match r {
            Ok(v) => Route::Value(v),
            Err(e) => Route::Absent {
                reason: e.kind().to_string(),
                message: e.to_string(),
            },
        }
    }
}

/// Convergence evidence for one route.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RouteDiagnostics {
    /// Sequence index or section size at which the value was accepted.
    pub n_used: Option<usize>,
    /// Oscillation over the stability window or truncation tail estimate.
    pub tail_estimate: Option<f64>,
}

pub const ROUTE_NAMES: [&str; 4] = ["weyl", "det", "gc", "fact"];

/// All four routes at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JostReport {
    #[serde(with = "crate::lab::complex_json")]
    pub z: Complex64,
    pub u_weyl: Route,
    pub u_det: Route,
    pub u_gc: Route,
    pub u_fact: Route,
    /// `|u_i - u_j| / max(|u_i|, |u_j|)` in the order weyl, det, gc, fact;
    /// `None` when either is absent.
    pub pairwise_disc: [[Option<f64>; 4]; 4],
    pub diagnostics: [RouteDiagnostics; 4],
    /// Pairs whose discrepancy exceeds their tolerance.
    pub flagged: Vec<(String, String)>,
}

impl JostReport {
    pub fn routes(&self) -> [&Route; 4] {
        [&self.u_weyl, &self.u_det, &self.u_gc, &self.u_fact]
    }
}

/// Shared inputs for a grid of cross-validation points.
pub struct CrossContext {
    spectrum: Result<SpectrumData>,
    pub quad: QuadOptions,
    pub max_n: usize,
}

impl CrossContext {
    pub fn new(params: &JacobiParams) -> Self {
        CrossContext {
            spectrum: eigen_data(params),
            quad: QuadOptions::default(),
            max_n: 100_000,
        }
    }
}

/// Run every route at `z`. Pairs between exact routes are flagged above
/// `tol`, pairs involving the factorization above `max(tol, QUADRATURE_TOL)`.
pub fn cross_validate_point(params: &JacobiParams, z: Complex64, tol: f64, ctx: &CrossContext) -> JostReport {
    let seq_tol = tol.min(1e-12);
    let mut diagnostics = [RouteDiagnostics::default(); 4];
    let seq = |r: Result<SequenceLimit>, d: &mut RouteDiagnostics| {
        r.map(|s| {
            *d = RouteDiagnostics {
                n_used: Some(s.n_used),
                tail_estimate: Some(s.oscillation),
            };
            s.value
        })
    };
    let u_weyl = Route::from(seq(jost_via_weyl(params, z, seq_tol, ctx.max_n), &mut diagnostics[0]));
    let u_det = Route::from(jost_via_det(params, z, DEFAULT_TRUNC).map(|d| {
        diagnostics[1] = RouteDiagnostics {
            n_used: Some(d.l_ren.n_trunc_used),
            tail_estimate: Some(d.l_ren.tail_estimate),
        };
        d.u
    }));
    let u_gc = Route::from(seq(gc_limit(params, z, seq_tol, ctx.max_n), &mut diagnostics[2]));
    let u_fact = Route::from(match &ctx.spectrum {
        Ok(s) => jost_via_factorization(params, z, Some(s), &ctx.quad),
        Err(e) => Err(e.clone()),
    });
    let vals = [u_weyl.value(), u_det.value(), u_gc.value(), u_fact.value()];
    let mut pairwise_disc = [[None; 4]; 4];
    let mut flagged = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            if let (Some(a), Some(b)) = (vals[i], vals[j]) {
                let scale = a.norm().max(b.norm());
                let d = if scale > 0.0 { (a - b).norm() / scale } else { 0.0 };
                pairwise_disc[i][j] = Some(d);
                let limit = if i == 3 || j == 3 { tol.max(QUADRATURE_TOL) } else { tol };
                if i < j && d > limit {
                    flagged.push((ROUTE_NAMES[i].to_string(), ROUTE_NAMES[j].to_string()));
                }
            }
        }
    }
    JostReport {
        z,
        u_weyl,
        u_det,
        u_gc,
        u_fact,
        pairwise_disc,
        diagnostics,
        flagged,
    }
}

pub fn cross_validate(params: &JacobiParams, z_grid: &[Complex64], tol: f64) -> Result<Vec<JostReport>> {
    if z_grid.is_empty() {
        return Err(invalid("grid nonempty"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    for &z in z_grid {
        check_disk(z, false, true)?;
    }
    let ctx = CrossContext::new(params);
    Ok(z_grid.iter().map(|&z| cross_validate_point(params, z, tol, &ctx)).collect())
}

/// Limits of `c_n` and of the Weyl route, with the tail of the product test.
#[derive(Debug, Clone)]
pub struct SzegoCheck {
    pub c_limit: Complex64,
    pub u: Complex64,
    /// `|(1 - z^2) c_inf - u|`
    pub residual: f64,
    /// `|(1 - z^2) c_inf wt_inf - 1|`
    pub product_residual: f64,
    /// `|(1 - z^2) c_n wt_inf - 1|` for `n = 0..=n_used`
    pub tail: Vec<f64>,
    pub n_used: usize,
}

pub fn szego_limit_check(params: &JacobiParams, z: Complex64, tol: f64, max_n: usize) -> Result<SzegoCheck> {
    check_disk(z, false, false)?;
    let u = jost_via_weyl(params, z, tol, max_n)?.value;
    let limit = max_n.min(params.horizon().unwrap_or(usize::MAX));
    let mut n_cap = 256usize.min(limit);
    loop {
        let c = szego_sequence(params, z, n_cap)?;
        let mut window = StabilityWindow::new(tol);
        for (n, v) in c.iter().enumerate() {
            if let Some(found) = window.push(*v, n) {
                let f = ONE - z * z;
                let wt_inf = u.inv();
                return Ok(SzegoCheck {
                    c_limit: found.value,
                    u,
                    residual: (f * found.value - u).norm(),
                    product_residual: (f * found.value * wt_inf - ONE).norm(),
                    tail: c[..=n].iter().map(|cn| (f * cn * wt_inf - ONE).norm()).collect(),
                    n_used: n,
                });
            }
        }
        if n_cap >= limit {
            return Err(window.failure(n_cap));
        }
        n_cap = (2 * n_cap).min(limit);
    }
}

/// Least-squares slope of `log v_n` against `n` over entries above `floor`.
pub fn log_linear_slope(values: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > floor && v.is_finite())
        .map(|(n, &v)| (n as f64, v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Disk points of the eigenvalues of `params`, all of which must have converged.
fn converged_zeros(params: &JacobiParams) -> Result<Vec<f64>> {
    let s = eigen_data(params)?;
    let unconverged = s.unconverged();
    if unconverged > 0 {
        return Err(JostError::SpectrumIncomplete { unconverged });
    }
    Ok(s.zeros())
}

/// `a_{n+1} M_n(z) - z B(z) exp((1/4pi) int log(Im M_n / Im M_{n+1}) P dtheta)`,
/// where `B` has zeros at the eigenvalues of `J^{(n+1)}` and poles at those of
/// `J^{(n)}`.
pub fn step_sum_rule_residual(params: &JacobiParams, n: usize, z: Complex64, quad: &QuadOptions) -> Result<Complex64> {
    check_disk(z, false, true)?;
    let jn = params.strip(n);
    let jn1 = params.strip(n + 1);
    let lhs = params.a(n + 1) * m_function(&jn, z, DEFAULT_DEPTH)?;
    let mut blaschke = ONE;
    for p in converged_zeros(&jn)? {
        blaschke /= blaschke_b(z, p)?;
    }
    for q in converged_zeros(&jn1)? {
        blaschke *= blaschke_b(z, q)?;
    }
    let integral = integrate(
        |t| {
            let num = boundary_im_m(&jn, t, DEFAULT_DEPTH)?;
            let den = boundary_im_m(&jn1, t, DEFAULT_DEPTH)?;
            if !(num > 0.0 && den > 0.0) {
                return Err(JostError::NotApplicable(format!(
                    "Im M vanishes at theta = {t}"
                )));
            }
            Ok(kernel_s(z, t) * (num / den).ln())
        },
        0.0,
        PI,
        quad,
    )? / (2.0 * PI);
    Ok(lhs - z * blaschke * integral.exp())
}

/// `L^2(f dx)` distance between `p_n` and its boundary asymptotics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2ErrorCurve {
    pub n: Vec<usize>,
    pub error: Vec<f64>,
    /// `||p_n||^2` in `L^2(f dx)`, `f` the density of the a.c. part.
    pub norm_sq: Vec<f64>,
}

/// Needs a free tail, where `u` on the circle is a polynomial evaluated exactly.
pub fn boundary_l2_error(params: &JacobiParams, n_values: &[usize], quad: &QuadOptions) -> Result<L2ErrorCurve> {
    let Some(h) = params.support_len() else {
        return Err(JostError::NotApplicable(
            "boundary values of u are exact only for free tails".into(),
        ));
    };
    if n_values.is_empty() {
        return Err(invalid("n values must be nonempty"));
    }
    let n_max = *n_values.iter().max().unwrap();
    let u_on = |t: f64| gc_limit(params, Complex64::from_polar(1.0, t), 1.0, h).map(|s| s.value);
    let mut error = Vec::with_capacity(n_values.len());
    let mut norm_sq = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let e = integrate_real(
            |t| {
                let u = u_on(t)?;
                let p = orthonormal_polys_real(params, 2.0 * t.cos(), n_max)[n];
                let asym = (u.conj() * Complex64::from_polar(1.0, (n + 1) as f64 * t)).im;
                let d = p * t.sin() - asym;
                Ok(2.0 * d * d / (PI * u.norm_sqr()))
            },
            0.0,
            PI,
            quad,
        )?;
        let w = integrate_real(
            |t| {
                let u = u_on(t)?;
                let p = orthonormal_polys_real(params, 2.0 * t.cos(), n)[n];
                let s = t.sin();
                Ok(2.0 * p * p * s * s / (PI * u.norm_sqr()))
            },
            0.0,
            PI,
            quad,
        )?;
        error.push(e);
        norm_sq.push(w);
    }
    Ok(L2ErrorCurve {
        n: n_values.to_vec(),
        error,
        norm_sq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBound {
    /// `sup |z^n p_n(z + 1/z) (1 - z^2) / u(z)| (1 - |z|)^{5/2}` over the grid.
    pub sup_scaled: f64,
    #[serde(with = "crate::lab::complex_json")]
    pub argmax_z: Complex64,
    pub argmax_n: usize,
}

/// Sample the scaled polynomial bound on `r e^{i theta}` for `theta` in the
/// sector (`n_theta` equispaced interior angles) and `r` in `r_values`.
pub fn sampled_power_bound(
    params: &JacobiParams,
    sector: (f64, f64),
    n_values: &[usize],
    r_values: &[f64],
    n_theta: usize,
) -> Result<PowerBound> {
    if n_values.is_empty() || r_values.is_empty() || n_theta == 0 {
        return Err(invalid("grids must be nonempty"));
    }
    if !(sector.0 < sector.1) || r_values.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(invalid("need an increasing sector and radii in (0, 1)"));
    }
    let n_max = *n_values.iter().max().unwrap();
    let mut best = PowerBound {
        sup_scaled: 0.0,
        argmax_z: Complex64::new(0.0, 0.0),
        argmax_n: 0,
    };
    for &r in r_values {
        let scale = (1.0 - r).powf(2.5);
        for i in 0..n_theta {
            let t = sector.0 + (sector.1 - sector.0) * (i as f64 + 0.5) / n_theta as f64;
            let z = Complex64::from_polar(r, t);
            let u = gc_limit(params, z, 1e-13, 1_000_000)?.value;
            let c = szego_sequence(params, z, n_max)?;
            let f = (ONE - z * z) / u;
            for &n in n_values {
                let v = (c[n] * f).norm() * scale;
                if v > best.sup_scaled {
                    best = PowerBound {
                        sup_scaled: v,
                        argmax_z: z,
                        argmax_n: n,
                    };
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyRow {
    pub trunc: usize,
    pub count: usize,
    /// `sum (|E| - 2)^q` for each requested `q`
    pub sums: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Relative growth above 5% at every doubling.
    Grows,
    /// Relative change below 1% at the last doubling.
    Stabilizes,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyReport {
    pub q: Vec<f64>,
    pub rows: Vec<SurveyRow>,
    pub trends: Vec<Trend>,
}

/// Fraction of a section discarded to test eigenvalue convergence.
const SURVEY_REFERENCE: f64 = 0.9;

/// Eigenvalue sums `sum (|E| - 2)^q` over the converged eigenvalues of each
/// section. An eigenvalue of the `N`-section counts as converged when the
/// `0.9 N`-section has one within `tol` of it.
pub fn bound_state_survey(params: &JacobiParams, q: &[f64], trunc_sizes: &[usize], tol: f64) -> Result<SurveyReport> {
    if q.is_empty() || trunc_sizes.is_empty() {
        return Err(invalid("q and truncation sizes must be nonempty"));
    }
    if trunc_sizes.windows(2).any(|w| w[1] <= w[0]) || trunc_sizes[0] < 10 {
        return Err(invalid("truncation sizes must increase from at least 10"));
    }
    let mut rows = Vec::with_capacity(trunc_sizes.len());
    for &n in trunc_sizes {
        let reference = ((n as f64) * SURVEY_REFERENCE) as usize;
        let s = spectrum(params, &[reference, n], tol)?;
        let excess: Vec<f64> = s
            .all()
            .filter(|e| e.converged)
            .map(|e| e.energy.abs() - 2.0)
            .collect();
        rows.push(SurveyRow {
            trunc: n,
            count: excess.len(),
            sums: q.iter().map(|&qq| excess.iter().map(|x| x.powf(qq)).sum()).collect(),
        });
    }
    let trends = (0..q.len())
        .map(|k| {
            let v: Vec<f64> = rows.iter().map(|r| r.sums[k]).collect();
            if v.len() < 2 {
                return Trend::Undetermined;
            }
            let rel = |i: usize| (v[i + 1] - v[i]) / v[i].abs().max(f64::MIN_POSITIVE);
            if (0..v.len() - 1).all(|i| rel(i) > 0.05) {
                Trend::Grows
            } else if rel(v.len() - 2).abs() < 0.01 {
                Trend::Stabilizes
            } else {
                Trend::Undetermined
            }
        })
        .collect();
    Ok(SurveyReport {
        q: q.to_vec(),
        rows,
        trends,
    })
}

/// Raw section eigenvalues outside `[-2 - tol, 2 + tol]`, for inspection.
pub fn section_eigenvalues(params: &JacobiParams, n: usize, tol: f64) -> Result<Vec<f64>> {
    let (mut up, down) = section_outside(params, n, tol)?;
    up.extend(down);
    Ok(up)
}

/// Serialize complex numbers as `{"re": .., "im": ..}`.
pub mod complex_json {
    use num_complex::Complex64;
    use serde::ser::SerializeStruct;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Complex", 2)?;
        st.serialize_field("re", &z.re)?;
        st.serialize_field("im", &z.im)?;
        st.end()
    }
}
