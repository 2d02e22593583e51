//! Acceptance suite. Each criterion prints one PASS/FAIL line with its
//! measured figures and runtime; the process exits nonzero if any fails.
//!
//! Run with `cargo test -p jostlab --test acceptance`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use jostlab::blaschke::{renorm_product, renorm_q, renorm_q_factored};
use jostlab::determinants::{jost_via_det, l_ren, DEFAULT_TRUNC};
use jostlab::jacobi::{Rule, Sign, Entry};
use jostlab::lab::{
    bound_state_survey, boundary_l2_error, jost_via_factorization, jost_via_weyl, log_linear_slope,
    sampled_power_bound, step_sum_rule_residual, szego_limit_check,
};
use jostlab::poisson::{kernel_q, kernel_q_bound, kernel_q_subtracted, renorm_poisson, BoundaryFunction};
use jostlab::quad::QuadOptions;
use jostlab::recursions::{gc_limit, gc_sequence, orthonormal_polys, wronskian_terms};
use jostlab::spectrum::{section_outside, spectrum};
use jostlab::weyl::{boundary_im_m, DEFAULT_DEPTH};
use jostlab::{section9_family, truncate_gc, Complex64, JacobiParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_head(rng: &mut ChaCha8Rng, len: usize, spread: f64) -> JacobiParams {
    let a = (0..len).map(|_| 1.0 + rng.gen_range(-spread..=spread)).collect();
    let b = (0..len).map(|_| rng.gen_range(-spread..=spread)).collect();
    JacobiParams::new(a, b).unwrap()
}

/// Points with `|z| <= r_max`, `|Im z| >= im_min`.
fn disk_grid(rng: &mut ChaCha8Rng, count: usize, r_max: f64, im_min: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = c(rng.gen_range(-r_max..r_max), rng.gen_range(-r_max..r_max));
        if z.norm() <= r_max && z.im.abs() >= im_min {
            out.push(z);
        }
    }
    out
}

fn alternating_tail() -> JacobiParams {
    JacobiParams::with_rule(
        vec![1.1],
        vec![0.2],
        Rule::Power {
            exponent: 3.0,
            sign: Sign::Alternating,
            on: Entry::B,
        },
        1_000_000,
    )
    .unwrap()
}

fn test_families(rng: &mut ChaCha8Rng) -> Vec<(String, JacobiParams)> {
    let mut v = vec![("free".to_string(), JacobiParams::free())];
    for beta in [0.5, -0.5, 2.0, -2.0] {
        v.push((format!("rank one {beta}"), JacobiParams::rank_one(beta).unwrap()));
    }
    for k in 0..3 {
        v.push((format!("random head {k}"), random_head(rng, 8, 0.3)));
    }
    v.push(("alternating tail".to_string(), alternating_tail()));
    v.push((
        "sparse blocks".to_string(),
        section9_family(0.7, 1.0, 0.4, 10, 400).unwrap(),
    ));
    v
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn wronskian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid = disk_grid(&mut rng, 100, 0.9, 0.05);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let j = random_head(&mut rng, 8, 0.3);
        for &z in &grid {
            for t in wronskian_terms(&j, z, 300).unwrap() {
                worst = worst.max(t.relative());
            }
        }
    }
    outcome(worst <= 1e-10, format!("max relative residual {worst:.2e}"))
}

fn rank_one_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut grid = disk_grid(&mut rng, 16, 0.85, 0.05);
    grid.extend([c(0.3, 0.0), c(-0.4, 0.0), c(0.0, 0.6), c(0.7, 0.0)]);
    let quad = QuadOptions::default();
    let (mut exact_err, mut fact_err): (f64, f64) = (0.0, 0.0);
    for beta in [0.5, -0.5, 2.0, -2.0] {
        let j = JacobiParams::rank_one(beta).unwrap();
        for &z in &grid {
            let oracle = 1.0 - beta * z;
            let w = jost_via_weyl(&j, z, 1e-13, 10_000).unwrap().value;
            let d = jost_via_det(&j, z, DEFAULT_TRUNC).unwrap().u;
            let g = gc_limit(&j, z, 1e-13, 10_000).unwrap().value;
            for v in [w, d, g] {
                exact_err = exact_err.max((v - oracle).norm());
            }
            let f = jost_via_factorization(&j, z, None, &quad).unwrap();
            fact_err = fact_err.max((f - oracle).norm());
        }
    }
    let j = JacobiParams::rank_one(2.0).unwrap();
    let s = spectrum(&j, &[100, 200], 1e-10).unwrap();
    let e = s.above.first().map(|e| e.energy).unwrap_or(f64::NAN);
    let single = s.above.len() == 1 && s.below.is_empty();
    let l = l_ren(&j, c(0.5, 0.0), DEFAULT_TRUNC, None).unwrap().value.norm();
    outcome(
        exact_err <= 1e-10 && fact_err <= 1e-4 && single && (e - 2.5).abs() <= 1e-10 && l <= 1e-8,
        format!(
            "exact routes {exact_err:.2e}, factorization {fact_err:.2e}, E = {e:.12}, |L_ren(0.5)| = {l:.2e}"
        ),
    )
}

fn gc_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let families = test_families(&mut rng);
    let grid = [c(0.5, 0.2), c(-0.3, 0.6), c(0.8, 0.0), c(0.4, -0.4), c(0.0, 0.9)];
    let mut worst: f64 = 0.0;
    for (_, j) in &families {
        for &z in &grid {
            let gc = gc_sequence(j, z, 300).unwrap();
            let p = orthonormal_polys(j, z + z.inv(), 300).unwrap();
            let mut zn = c(1.0, 0.0);
            for n in 0..=300 {
                let direct = zn * p[n];
                worst = worst.max((gc[n].c - direct).norm() / direct.norm());
                zn *= z;
            }
        }
    }
    outcome(worst <= 1e-12, format!("max relative deviation {worst:.2e}"))
}

fn gc_truncation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let grid = [c(0.3, 0.3), c(-0.5, 0.1), c(0.6, -0.5), c(0.2, 0.0)];
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let j = random_head(&mut rng, 12, 0.3);
        for &z in &grid {
            let g = gc_sequence(&j, z, 10).unwrap();
            for n in 1..=10 {
                let d = jost_via_det(&truncate_gc(&j, n).unwrap(), z, DEFAULT_TRUNC).unwrap().u;
                worst = worst.max((g[n].g - d).norm());
            }
        }
    }
    outcome(worst <= 1e-9, format!("max |g_n - u(J~_n)| {worst:.2e}"))
}

fn szego_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let families = test_families(&mut rng);
    let grid = [c(0.5, 0.0), c(-0.6, 0.0), c(0.3, 0.4), c(-0.2, 0.7), c(0.7, 0.1)];
    let (mut worst, mut worst_slope): (f64, f64) = (0.0, 0.0);
    let (mut converged, mut skipped) = (0, 0);
    for (_, j) in families.iter().filter(|(n, _)| n != "sparse blocks") {
        for &z in &grid {
            let Ok(chk) = szego_limit_check(j, z, 1e-13, 100_000) else {
                skipped += 1;
                continue;
            };
            converged += 1;
            worst = worst.max(chk.product_residual);
            // Past the head wt_n is constant and the tail is exactly the
            // geometric remainder; decaying tails add a polynomial remainder.
            if !j.is_free_tail() {
                continue;
            }
            let tail: Vec<f64> = chk.tail.iter().skip(12).copied().collect();
            if let Some(slope) = log_linear_slope(&tail, 1e-12) {
                let target = 2.0 * z.norm().ln();
                worst_slope = worst_slope.max((slope / target - 1.0).abs());
            }
        }
    }
    outcome(
        worst <= 1e-9 && worst_slope <= 0.1 && converged > 0,
        format!(
            "{converged} points, {skipped} nonconvergent, max residual {worst:.2e}, max slope deviation {:.1}%",
            100.0 * worst_slope
        ),
    )
}

fn kernel_identities() -> Outcome {
    let mut worst_q: f64 = 0.0;
    let mut bound_ok = true;
    for i in 0..100 {
        let r = 0.05 + 0.9 * (i / 10) as f64 / 9.0;
        let phi = 2.0 * PI * (i % 10) as f64 / 10.0 + 0.1;
        let z = Complex64::from_polar(r, phi);
        for k in 0..100 {
            let th = PI * (k as f64 + 0.5) / 100.0;
            let q = kernel_q(z, th);
            let sub = kernel_q_subtracted(z, th).unwrap();
            worst_q = worst_q.max((q - sub).norm() / q.norm().max(1.0));
            bound_ok &= q.norm() <= kernel_q_bound(z, th) * (1.0 + 1e-12);
        }
    }
    let quad = QuadOptions::default();
    let one = BoundaryFunction::from_fn(|_| 1.0);
    let cos = BoundaryFunction::from_fn(f64::cos);
    let mut worst_closed: f64 = 0.0;
    for z in [c(0.5, 0.0), c(0.3, 0.4), c(-0.7, 0.2), c(0.0, 0.9)] {
        let den = 1.0 - z * z;
        let e1 = renorm_poisson(&one, z, &quad).unwrap() - (-2.0 * z * z / den);
        let e2 = renorm_poisson(&cos, z, &quad).unwrap() - (-z * z * z / den);
        worst_closed = worst_closed.max(e1.norm()).max(e2.norm());
    }
    outcome(
        worst_q <= 1e-12 && bound_ok && worst_closed <= 1e-8,
        format!("Q forms {worst_q:.2e}, bound holds: {bound_ok}, closed forms {worst_closed:.2e}"),
    )
}

fn renormalized_blaschke() -> Outcome {
    let ps = [0.95, -0.8, 0.5, -0.2, 0.05, 0.999];
    let exact_origin = ps.iter().all(|&p| renorm_q(c(0.0, 0.0), p).unwrap() == c(1.0, 0.0));
    let mut worst_mod: f64 = 0.0;
    for &p in &ps {
        for k in 0..200 {
            let th = 0.05 + (PI - 0.1) * k as f64 / 199.0;
            for s in [1.0, -1.0] {
                let q = renorm_q(Complex64::from_polar(1.0, s * th), p).unwrap();
                worst_mod = worst_mod.max((q.norm() - 1.0).abs());
            }
        }
    }
    let mut worst_fact: f64 = 0.0;
    for &p in &ps {
        for z in [c(0.3, 0.2), c(-0.6, 0.5), c(0.85, -0.1), c(0.0, -0.7)] {
            let a = renorm_q(z, p).unwrap();
            let b = renorm_q_factored(z, p).unwrap();
            worst_fact = worst_fact.max((a - b).norm() / a.norm());
        }
    }
    let zeros: Vec<f64> = (2..=20_000).map(|k| 1.0 - (k as f64).powf(-0.4)).collect();
    let zs: Vec<Complex64> = (0..40)
        .map(|i| Complex64::from_polar(0.1 + 0.4 * (i / 8) as f64 / 4.0, 2.0 * PI * (i % 8) as f64 / 8.0 + 0.2))
        .collect();
    let starts = [0usize, 10, 20, 40, 80, 160, 320, 640, 1280, 2560, 5120, 10240];
    let sups: Vec<f64> = starts
        .iter()
        .map(|&n| {
            zs.iter()
                .map(|&z| (renorm_product(&zeros, z, n).unwrap().value - 1.0).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let monotone = sups.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        exact_origin && worst_mod <= 1e-12 && worst_fact <= 1e-12 && monotone,
        format!(
            "q(0,p) = 1 exactly: {exact_origin}, ||q| - 1| {worst_mod:.2e}, factored form {worst_fact:.2e}, tail sups {:.2e} .. {:.2e} monotone: {monotone}",
            sups[0],
            sups[sups.len() - 1]
        ),
    )
}

fn boundary_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let families = [
        JacobiParams::free(),
        JacobiParams::rank_one(0.5).unwrap(),
        JacobiParams::rank_one(2.0).unwrap(),
        random_head(&mut rng, 5, 0.3),
    ];
    let mut worst: f64 = 0.0;
    for j in &families {
        for k in 0..200 {
            let th = PI * (k as f64 + 0.5) / 200.0;
            let im = boundary_im_m(j, th, DEFAULT_DEPTH).unwrap();
            let u = gc_limit(j, Complex64::from_polar(1.0, th), 1.0, 1).unwrap().value;
            worst = worst.max((im * u.norm_sqr() - th.sin()).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max |Im M |u|^2 - sin| {worst:.2e}"))
}

fn step_sum_rule() -> Outcome {
    let quad = QuadOptions::default();
    let families = [
        JacobiParams::free(),
        JacobiParams::rank_one(0.5).unwrap(),
        JacobiParams::rank_one(-0.5).unwrap(),
        JacobiParams::rank_one(2.0).unwrap(),
    ];
    let zs = [
        c(0.3, 0.0),
        c(-0.4, 0.0),
        c(0.2, 0.3),
        c(-0.5, 0.5),
        c(0.0, 0.7),
        c(0.6, -0.2),
        c(0.8, 0.1),
        c(-0.7, -0.3),
        c(0.1, -0.1),
        c(0.45, 0.45),
    ];
    let mut worst: f64 = 0.0;
    for j in &families {
        for n in 0..=1 {
            for &z in &zs {
                worst = worst.max(step_sum_rule_residual(j, n, z, &quad).unwrap().norm());
            }
        }
    }
    outcome(worst <= 1e-5, format!("max residual {worst:.2e}"))
}

fn l2_convergence() -> Outcome {
    let quad = QuadOptions::default();
    let ns: Vec<usize> = (0..=200).step_by(5).collect();
    let free = boundary_l2_error(&JacobiParams::free(), &ns, &quad).unwrap();
    let free_max = free.error.iter().fold(0.0f64, |m, &e| m.max(e.abs()));
    let r1 = boundary_l2_error(&JacobiParams::rank_one(0.5).unwrap(), &ns, &quad).unwrap();
    let tail: Vec<f64> = r1.n.iter().zip(&r1.error).filter(|(n, _)| **n >= 20).map(|(_, e)| *e).collect();
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    let at_200 = *r1.error.last().unwrap();
    let norm_dev = free
        .norm_sq
        .iter()
        .chain(&r1.norm_sq)
        .fold(0.0f64, |m, &v| m.max((v - 1.0).abs()));
    let rank_max = r1.error.iter().fold(0.0f64, |m, &e| m.max(e.abs()));
    outcome(
        free_max <= 1e-12 && decreasing && at_200 < 1e-3 && norm_dev <= 1e-3,
        format!(
            "free max {free_max:.2e}; rank one: strictly decreasing from n = 20: {decreasing} (max {rank_max:.2e}), n = 200: {at_200:.2e}; max ||p_n||^2 - 1 {norm_dev:.2e}"
        ),
    )
}

fn survey() -> Outcome {
    let sizes = [1000, 2000, 4000];
    let j = section9_family(0.51, 0.35, 0.1, 20, 4000).unwrap();
    let counts: Vec<usize> = sizes
        .iter()
        .map(|&n| {
            let (up, down) = section_outside(&j, n, 1e-9).unwrap();
            up.len() + down.len()
        })
        .collect();
    let counts_grow = counts.windows(2).all(|w| w[1] > w[0]);
    let report = bound_state_survey(&j, &[0.9, 1.5], &sizes, 1e-9).unwrap();
    let s09: Vec<f64> = report.rows.iter().map(|r| r.sums[0]).collect();
    let s15: Vec<f64> = report.rows.iter().map(|r| r.sums[1]).collect();
    let grows = s09.windows(2).all(|w| w[1] > 1.05 * w[0]);
    let last = (s15[2] - s15[1]).abs() / s15[1].abs();
    outcome(
        counts_grow && grows && last < 0.01,
        format!(
            "counts {counts:?}; q = 0.9 sums {s09:.4?}; q = 1.5 sums {s15:.4?} (last change {:.2}%)",
            100.0 * last
        ),
    )
}

fn power_bound() -> Outcome {
    let j = JacobiParams::rank_one(0.5).unwrap();
    let ns: Vec<usize> = (0..=200).collect();
    let sector = (PI / 4.0, 3.0 * PI / 4.0);
    let coarse: Vec<f64> = (1..=9).map(|k| 0.1 * k as f64).collect();
    let mut fine = coarse.clone();
    fine.extend([0.95, 0.975, 0.99, 0.995, 0.999]);
    let mut finer: Vec<f64> = (20..=199).map(|k| 0.005 * k as f64).collect();
    finer.push(0.9995);
    let sups: Vec<f64> = [&coarse, &fine, &finer]
        .iter()
        .map(|r| sampled_power_bound(&j, sector, &ns, r, 64).unwrap().sup_scaled)
        .collect();
    let change = sups.windows(2).map(|w| (w[1] - w[0]).abs() / w[0]).fold(0.0, f64::max);
    outcome(
        sups.iter().all(|s| s.is_finite()) && change < 0.02,
        format!("sups {sups:.4?}, max relative change {:.2}%", 100.0 * change),
    )
}

type Criterion = (&'static str, u64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("Wronskian identity", 10, wronskian),
        ("rank-one oracle", 30, rank_one_oracle),
        ("coupled recursion identity", 5, gc_identity),
        ("coupled recursion truncation identity", 60, gc_truncation),
        ("Szego/Jost equivalence", 30, szego_equivalence),
        ("kernel identities", 20, kernel_identities),
        ("renormalized Blaschke factors", 10, renormalized_blaschke),
        ("boundary identity", 10, boundary_identity),
        ("step-by-step sum rule", 60, step_sum_rule),
        ("L2 boundary convergence", 120, l2_convergence),
        ("sparse block survey", 600, survey),
        ("power bound", 60, power_bound),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let label = format!("{:>2} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {label}: {} [{:.1}s / {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
