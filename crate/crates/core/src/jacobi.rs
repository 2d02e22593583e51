//! Half-line Jacobi parameters and summability diagnostics.
//!
//! A matrix is described by a finite head `a_1..a_H`, `b_1..b_H` followed by a
//! tail. A free tail continues with `a = 1`, `b = 0` forever. A generator tail
//! evaluates a closed-form rule up to a declared horizon; indices beyond the
//! horizon are rejected.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, JostError, Result};
use crate::util::CompensatedSum;

/// Sign pattern of a power-law tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    /// `(-1)^n`
    Alternating,
    Positive,
}

/// Which diagonal a power-law tail perturbs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entry {
    /// `b_n = s_n n^{-e}`
    #[default]
    B,
    /// `a_n = 1 + s_n n^{-e}`
    A,
}

/// Sparse block potential with alternating signs.
///
/// Block `m >= m0` is `[floor(m^{p+1} - c1 m^p), floor(m^{p+1} + c1 m^p)]`.
/// On it `b_n = n^{-alpha}` for even `m` and `-n^{-alpha}` for odd `m`;
/// `b_n = 0` off the blocks and `a_n = 1` everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBlocks {
    pub alpha: f64,
    pub p: f64,
    pub c1: f64,
    pub m0: usize,
    blocks: Vec<Block>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub m: usize,
    pub start: usize,
    pub end: usize,
}

impl Block {
    pub fn sign(&self) -> f64 {
        if self.m % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl SparseBlocks {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    fn block_of(&self, n: usize) -> Option<&Block> {
        let i = self.blocks.partition_point(|blk| blk.end < n);
        self.blocks.get(i).filter(|blk| blk.start <= n)
    }

    fn b(&self, n: usize) -> f64 {
        match self.block_of(n) {
            Some(blk) => blk.sign() * (n as f64).powf(-self.alpha),
            None => 0.0,
        }
    }
}

/// Closed-form coefficient rule evaluated at absolute site indices.
#[derive(Clone)]
pub enum Rule {
    Power { exponent: f64, sign: Sign, on: Entry },
    Sparse(Arc<SparseBlocks>),
    /// Arbitrary rule returning `(a_n, b_n)`; `a_n` must be positive.
    Custom(Arc<dyn Fn(usize) -> (f64, f64) + Send + Sync>),
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Power { exponent, sign, on } => f
                .debug_struct("Power")
                .field("exponent", exponent)
                .field("sign", sign)
                .field("on", on)
                .finish(),
            Rule::Sparse(s) => f.debug_tuple("Sparse").field(s).finish(),
            Rule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Rule {
    fn eval(&self, n: usize) -> (f64, f64) {
        match self {
            Rule::Power { exponent, sign, on } => {
                let s = match sign {
                    Sign::Alternating if n % 2 == 1 => -1.0,
                    _ => 1.0,
                };
                let v = s * (n as f64).powf(-exponent);
                match on {
                    Entry::B => (1.0, v),
                    Entry::A => (1.0 + v, 0.0),
                }
            }
            Rule::Sparse(s) => (1.0, s.b(n)),
            Rule::Custom(f) => f(n),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generator {
    rule: Rule,
    /// Added to the local index before the rule is evaluated.
    offset: usize,
    /// Last local index that may be requested.
    horizon: usize,
}

#[derive(Debug, Clone)]
pub enum Tail {
    Free,
    Generator(Generator),
}

/// Jacobi parameters `a_n > 0`, `b_n` for `n >= 1`.
#[derive(Debug, Clone)]
pub struct JacobiParams {
    a_head: Vec<f64>,
    b_head: Vec<f64>,
    tail: Tail,
}

impl JacobiParams {
    /// The free matrix `a = 1`, `b = 0`.
    pub fn free() -> Self {
        JacobiParams {
            a_head: Vec::new(),
            b_head: Vec::new(),
            tail: Tail::Free,
        }
    }

    /// Finite head followed by a free tail. The heads may differ in length.
    pub fn new(a_head: Vec<f64>, b_head: Vec<f64>) -> Result<Self> {
        validate_head(&a_head, &b_head)?;
        Ok(JacobiParams {
            a_head,
            b_head,
            tail: Tail::Free,
        })
    }

    /// `b_1 = beta`, everything else free.
    pub fn rank_one(beta: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![beta])
    }

    /// Finite head followed by `rule` at indices past the head, up to `horizon`.
    pub fn with_rule(a_head: Vec<f64>, b_head: Vec<f64>, rule: Rule, horizon: usize) -> Result<Self> {
        validate_head(&a_head, &b_head)?;
        match &rule {
            Rule::Power { exponent, on, .. } => {
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(invalid("power tail needs a positive finite exponent"));
                }
                // |n^{-e}| decreases, so the first rule-controlled site decides positivity.
                if *on == Entry::A && a_head.len() < horizon {
                    let first = a_head.len() + 1;
                    if rule.eval(first).0 <= 0.0 {
                        return Err(invalid(format!("power tail gives a_{first} <= 0")));
                    }
                }
            }
            Rule::Sparse(_) | Rule::Custom(_) => {}
        }
        Ok(JacobiParams {
            a_head,
            b_head,
            tail: Tail::Generator(Generator {
                rule,
                offset: 0,
                horizon,
            }),
        })
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn a_head(&self) -> &[f64] {
        &self.a_head
    }

    pub fn b_head(&self) -> &[f64] {
        &self.b_head
    }

    /// Length of the explicit head.
    pub fn head_len(&self) -> usize {
        self.a_head.len().max(self.b_head.len())
    }

    pub fn is_free_tail(&self) -> bool {
        matches!(self.tail, Tail::Free)
    }

    /// Last admissible index, `None` when unbounded.
    pub fn horizon(&self) -> Option<usize> {
        match &self.tail {
            Tail::Free => None,
            Tail::Generator(g) => Some(g.horizon.max(self.head_len())),
        }
    }

    /// Number of sites carrying a perturbation, `None` for generator tails.
    pub fn support_len(&self) -> Option<usize> {
        self.is_free_tail().then(|| self.head_len())
    }

    pub fn check_index(&self, n: usize) -> Result<()> {
        match self.horizon() {
            Some(h) if n > h => Err(JostError::HorizonExceeded {
                requested: n,
                horizon: h,
            }),
            _ => Ok(()),
        }
    }

    fn tail_eval(&self, n: usize) -> (f64, f64) {
        match &self.tail {
            Tail::Free => (1.0, 0.0),
            Tail::Generator(g) => {
                debug_assert!(n <= self.horizon().unwrap_or(usize::MAX));
                g.rule.eval(n + g.offset)
            }
        }
    }

    /// `a_n` for `n >= 1`. Callers validate `n` with [`check_index`](Self::check_index).
    pub fn a(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        match self.a_head.get(n - 1) {
            Some(&a) => a,
            None => self.tail_eval(n).0,
        }
    }

    /// `b_n` for `n >= 1`. Callers validate `n` with [`check_index`](Self::check_index).
    pub fn b(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        match self.b_head.get(n - 1) {
            Some(&b) => b,
            None => self.tail_eval(n).1,
        }
    }

    /// `(a_1..a_n, b_1..b_n)`.
    pub fn coefficients(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_index(n)?;
        Ok(((1..=n).map(|k| self.a(k)).collect(), (1..=n).map(|k| self.b(k)).collect()))
    }

    /// Parameters of `J^{(n)}`: `a'_k = a_{k+n}`, `b'_k = b_{k+n}`.
    pub fn strip(&self, n: usize) -> JacobiParams {
        let tail = match &self.tail {
            Tail::Free => Tail::Free,
            Tail::Generator(g) => Tail::Generator(Generator {
                rule: g.rule.clone(),
                offset: g.offset + n,
                horizon: g.horizon.saturating_sub(n),
            }),
        };
        JacobiParams {
            a_head: self.a_head[n.min(self.a_head.len())..].to_vec(),
            b_head: self.b_head[n.min(self.b_head.len())..].to_vec(),
            tail,
        }
    }

    /// Keep `a_j`, `b_j` for `j <= n` and continue freely.
    pub fn truncate_gc(&self, n: usize) -> Result<JacobiParams> {
        let (a, b) = self.coefficients(n)?;
        JacobiParams::new(a, b)
    }
}

/// Parameters of `J^{(n)}`.
pub fn strip(params: &JacobiParams, n: usize) -> JacobiParams {
    params.strip(n)
}

/// Parameters of the truncation that keeps `a_j`, `b_j` for `j <= n`.
pub fn truncate_gc(params: &JacobiParams, n: usize) -> Result<JacobiParams> {
    params.truncate_gc(n)
}

fn validate_head(a: &[f64], b: &[f64]) -> Result<()> {
    if let Some((i, _)) = a.iter().enumerate().find(|(_, &x)| !(x.is_finite() && x > 0.0)) {
        return Err(invalid(format!("a_{} must be positive and finite", i + 1)));
    }
    if let Some((i, _)) = b.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(invalid(format!("b_{} must be finite", i + 1)));
    }
    Ok(())
}

/// Sparse alternating block family with exponents `alpha`, `p`.
///
/// Requires `1/2 < alpha < 1`, `alpha/(2-alpha) < p < alpha/(1-alpha)`,
/// `0 < c1 < (p+1)/2` and block gaps of at least 2 through `horizon`.
pub fn section9_family(alpha: f64, p: f64, c1: f64, m0: usize, horizon: usize) -> Result<JacobiParams> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(invalid(format!("alpha = {alpha} must lie in (1/2, 1)")));
    }
    let (lo, hi) = (alpha / (2.0 - alpha), alpha / (1.0 - alpha));
    if !(p > lo && p < hi) {
        return Err(invalid(format!("p = {p} must lie in ({lo}, {hi})")));
    }
    if !(c1 > 0.0 && c1 < 0.5 * (p + 1.0)) {
        return Err(invalid(format!("c1 = {c1} must lie in (0, {})", 0.5 * (p + 1.0))));
    }
    if m0 < 1 {
        return Err(invalid("m0 must be at least 1"));
    }
    let mut blocks: Vec<Block> = Vec::new();
    let mut m = m0;
    loop {
        let mf = m as f64;
        let centre = mf.powf(p + 1.0);
        let half = c1 * mf.powf(p);
        let start = (centre - half).floor();
        if start > horizon as f64 {
            break;
        }
        if start < 1.0 {
            return Err(invalid(format!("block {m} starts before site 1")));
        }
        let blk = Block {
            m,
            start: start as usize,
            end: (centre + half).floor() as usize,
        };
        if let Some(prev) = blocks.last() {
            if blk.start < prev.end + 2 {
                return Err(invalid(format!(
                    "blocks {} and {} are separated by less than 2 sites",
                    prev.m, blk.m
                )));
            }
        }
        blocks.push(blk);
        m += 1;
    }
    let sparse = SparseBlocks {
        alpha,
        p,
        c1,
        m0,
        blocks,
    };
    JacobiParams::with_rule(Vec::new(), Vec::new(), Rule::Sparse(Arc::new(sparse)), horizon)
}

/// On-disk parameter description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    #[serde(default)]
    pub a_head: Vec<f64>,
    #[serde(default)]
    pub b_head: Vec<f64>,
    #[serde(default)]
    pub tail: TailDesc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TailDesc {
    /// Only `"free"` is accepted.
    Name(String),
    Rule(RuleDesc),
}

impl Default for TailDesc {
    fn default() -> Self {
        TailDesc::Name("free".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleDesc {
    /// A single diagonal entry `beta` right after the head.
    RankOne { beta: f64 },
    Power {
        exponent: f64,
        sign: Sign,
        #[serde(default)]
        on: Entry,
    },
    Section9 { alpha: f64, p: f64, c1: f64, m0: usize },
}

impl ParamFile {
    pub fn into_params(self) -> Result<JacobiParams> {
        let ParamFile {
            a_head,
            mut b_head,
            tail,
            horizon,
        } = self;
        let need_horizon = || horizon.ok_or_else(|| invalid("generator tails need a horizon"));
        match tail {
            TailDesc::Name(name) if name == "free" => JacobiParams::new(a_head, b_head),
            TailDesc::Name(name) => Err(invalid(format!("unknown tail '{name}'"))),
            TailDesc::Rule(RuleDesc::RankOne { beta }) => {
                let h = a_head.len().max(b_head.len());
                b_head.resize(h, 0.0);
                b_head.push(beta);
                JacobiParams::new(a_head, b_head)
            }
            TailDesc::Rule(RuleDesc::Power { exponent, sign, on }) => {
                JacobiParams::with_rule(a_head, b_head, Rule::Power { exponent, sign, on }, need_horizon()?)
            }
            TailDesc::Rule(RuleDesc::Section9 { alpha, p, c1, m0 }) => {
                if !a_head.is_empty() || !b_head.is_empty() {
                    return Err(invalid("the sparse block family takes no head"));
                }
                section9_family(alpha, p, c1, m0, need_horizon()?)
            }
        }
    }
}

/// Three-valued outcome of a finite-horizon convergence test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Partial sums and verdicts for the square-summability and conditional
/// convergence conditions.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub horizon: usize,
    /// `sum (a_n - 1)^2 + b_n^2`
    pub sum_sq: f64,
    /// `sum_{j<=N} log a_j` for `N = 1..=horizon`
    pub log_prod_partial: Vec<f64>,
    /// `sum_{j<=N} b_j` for `N = 1..=horizon`
    pub b_sum_partial: Vec<f64>,
    /// `sum G(a_n) + b_n^2 / 2` with `G(a) = a^2 - 1 - 2 log a`
    pub g_sum: f64,
    /// `sup_N (|sum log a| + |sum b|) + sum_sq`
    pub k_bound: f64,
    /// `(a_1 ... a_horizon)^{-1}`
    pub gamma_leading: f64,
    /// `b_1 + ... + b_horizon`
    pub lambda_n: f64,
    pub alpha_ok: Verdict,
    pub beta_ok: Verdict,
    pub gamma_ok: Verdict,
}

/// `G(a) = a^2 - 1 - 2 log a`, nonnegative and at least `(a-1)^2`.
pub fn g_fn(a: f64) -> f64 {
    let t = a - 1.0;
    if t.abs() < 0.1 {
        // 2 t^2 - 2 t^3/3 + 2 t^4/4 - ...
        let mut sum = t * t;
        let mut pow = t * t;
        for k in 2..40 {
            let term = 2.0 * pow / k as f64;
            sum += if k % 2 == 0 { term } else { -term };
            pow *= t;
            if pow.abs() < 1e-40 {
                break;
            }
        }
        sum
    } else {
        (t * (a + 1.0) - 2.0 * t.ln_1p()).max(0.0)
    }
}

pub(crate) struct PartialSums {
    pub log_a: Vec<f64>,
    pub b: Vec<f64>,
    pub sq: Vec<f64>,
    pub quad: Vec<f64>,
    pub g: f64,
}

pub(crate) fn partial_sums(params: &JacobiParams, horizon: usize) -> Result<PartialSums> {
    params.check_index(horizon)?;
    let mut log_a = Vec::with_capacity(horizon);
    let mut bs = Vec::with_capacity(horizon);
    let mut sq = Vec::with_capacity(horizon);
    let mut quad = Vec::with_capacity(horizon);
    let (mut sl, mut sb, mut ss, mut sv, mut sg) = (
        CompensatedSum::default(),
        CompensatedSum::default(),
        CompensatedSum::default(),
        CompensatedSum::default(),
        CompensatedSum::default(),
    );
    for n in 1..=horizon {
        let (a, b) = (params.a(n), params.b(n));
        sl.add((a - 1.0).ln_1p());
        sb.add(b);
        ss.add((a - 1.0) * (a - 1.0) + b * b);
        sv.add((a - 1.0) * (a + 1.0) + 0.5 * b * b);
        sg.add(g_fn(a) + 0.5 * b * b);
        log_a.push(sl.value());
        bs.push(sb.value());
        sq.push(ss.value());
        quad.push(sv.value());
    }
    Ok(PartialSums {
        log_a,
        b: bs,
        sq,
        quad,
        g: sg.value(),
    })
}

/// Verdict on the convergence of a series from its partial sums.
///
/// Holds when the partial sums vary by less than `tol` over the final
/// `window` entries. Fails when they drift monotonically by more than `tol`
/// and the drift does not shrink against the matching window at half the
/// horizon, which for power-law terms `n^{-s}` means `s <= 1`.
pub(crate) fn series_verdict(partials: &[f64], window: usize, tol: f64) -> Verdict {
    let n = partials.len();
    if n < 4 {
        return Verdict::Inconclusive;
    }
    let w = window.clamp(1, n / 2);
    let seg = &partials[n - w - 1..];
    let (lo, hi) = seg
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if hi - lo < tol {
        return Verdict::Holds;
    }
    let nondecreasing = seg.windows(2).all(|p| p[1] >= p[0]);
    let nonincreasing = seg.windows(2).all(|p| p[1] <= p[0]);
    if !(nondecreasing || nonincreasing) {
        return Verdict::Inconclusive;
    }
    let drift = (partials[n - 1] - partials[n - w - 1]).abs();
    let n2 = n / 2;
    let w2 = (w / 2).max(1);
    if n2 <= w2 {
        return Verdict::Inconclusive;
    }
    let drift2 = (partials[n2 - 1] - partials[n2 - w2 - 1]).abs();
    if drift > tol && drift2 > 0.0 && drift / drift2 >= 2f64.powf(-0.05) {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    }
}

/// Partial sums through `horizon` and verdicts on the tail.
///
/// `tail_window` defaults to `horizon / 10`.
pub fn check_conditions(
    params: &JacobiParams,
    horizon: usize,
    tail_window: Option<usize>,
    tol: f64,
) -> Result<ConditionReport> {
    if horizon == 0 {
        return Err(invalid("horizon must be positive"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    let window = tail_window.unwrap_or(horizon / 10).max(1);
    let ps = partial_sums(params, horizon)?;
    let sup = ps
        .log_a
        .iter()
        .zip(&ps.b)
        .map(|(l, b)| l.abs() + b.abs())
        .fold(0.0, f64::max);
    let sum_sq = *ps.sq.last().unwrap();
    Ok(ConditionReport {
        horizon,
        sum_sq,
        g_sum: ps.g,
        k_bound: sup + sum_sq,
        gamma_leading: (-ps.log_a[horizon - 1]).exp(),
        lambda_n: ps.b[horizon - 1],
        alpha_ok: series_verdict(&ps.sq, window, tol),
        beta_ok: series_verdict(&ps.log_a, window, tol),
        gamma_ok: series_verdict(&ps.b, window, tol),
        log_prod_partial: ps.log_a,
        b_sum_partial: ps.b,
    })
}
