//! The end-to-end acceptance checks, runnable from the library or the CLI.
//!
//! Each check rebuilds nothing it can share: the two coefficient tables are
//! computed once in a [`Context`] and borrowed by every check.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Zero};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::Serialize;

use crate::arith;
use crate::bfree::{build_bset, direct_sign_count, lower_bound_count, partition_signs, sieve_bfree};
use crate::error::Result;
use crate::forms::{EigenForm, Weierstrass};
use crate::intervals::{self, IntervalConfig};
use crate::voronoi::kernel::{r_beta, r_beta_leading, KernelParams};
use crate::voronoi::{
    self, find_extrema, half_integers, log_spaced, median, moebius_identity, partial_sum_coprime, residual_scan,
    TruncationPolicy,
};
use crate::Precision;

/// Table length for the weight-12 level-1 form.
pub const DELTA_BOUND: u64 = 1_005_000;
/// Table length for the level-11 curve; the last short window and its
/// follow-up window end near 1.087e6.
pub const CURVE_BOUND: u64 = 1_090_000;
/// Number of checks.
pub const CRITERIA: u8 = 10;

/// `y^2 + y = x^3 - x^2 - 10x - 20`, conductor 11.
pub fn curve_11a() -> Weierstrass {
    Weierstrass::new(0, -1, 1, -10, -20)
}

/// Tables shared by all checks, built on first use.
#[derive(Default)]
pub struct Context {
    delta: OnceLock<EigenForm>,
    curve: OnceLock<EigenForm>,
}

impl Context {
    /// Builds both tables up front.
    pub fn new() -> Result<Context> {
        let ctx = Context::lazy();
        ctx.delta()?;
        ctx.curve()?;
        Ok(ctx)
    }

    /// Defers each table until a check asks for it.
    pub fn lazy() -> Context {
        Context::default()
    }

    /// Uses the given tables instead of the default ones.
    pub fn with_tables(delta: EigenForm, curve: EigenForm) -> Context {
        Context {
            delta: OnceLock::from(delta),
            curve: OnceLock::from(curve),
        }
    }

    pub fn delta(&self) -> Result<&EigenForm> {
        get_or_build(&self.delta, || EigenForm::from_level1(12, DELTA_BOUND))
    }

    pub fn curve(&self) -> Result<&EigenForm> {
        get_or_build(&self.curve, || EigenForm::from_elliptic_curve(&curve_11a(), 11, CURVE_BOUND))
    }
}

fn get_or_build(cell: &OnceLock<EigenForm>, build: impl FnOnce() -> Result<EigenForm>) -> Result<&EigenForm> {
    if let Some(f) = cell.get() {
        return Ok(f);
    }
    let f = build()?;
    Ok(cell.get_or_init(|| f))
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{verdict}] {:>2} {}: {}", self.id, self.title, self.detail)
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "exact coefficients",
        2 => "Deligne bound",
        3 => "level-prime relation",
        4 => "B-free density",
        5 => "sign counts up to 10^6",
        6 => "Moebius identity",
        7 => "truncated Voronoi formula",
        8 => "kernel identities",
        9 => "large values of S*",
        10 => "short-interval sign counts",
        _ => "unknown",
    }
}

/// Runs check `id` (1 to 10).
pub fn run(ctx: &Context, id: u8) -> Result<CriterionResult> {
    let (passed, detail) = match id {
        1 => exact_coefficients(ctx.delta()?)?,
        2 => deligne(ctx.delta()?, ctx.curve()?)?,
        3 => level_prime(ctx.curve()?)?,
        4 => bfree_density(ctx.delta()?)?,
        5 => sign_counts(ctx.delta()?)?,
        6 => moebius(ctx.curve()?)?,
        7 => voronoi_residuals(ctx.delta()?)?,
        8 => kernel_identities()?,
        9 => large_values(ctx.delta()?)?,
        10 => short_intervals(ctx.delta()?, ctx.curve()?)?,
        _ => return Err(crate::Error::usage(format!("no criterion {id}; valid ids are 1 to {CRITERIA}"))),
    };
    Ok(CriterionResult {
        id,
        title: title(id),
        passed,
        detail,
    })
}

pub fn run_all(ctx: &Context) -> Result<Vec<CriterionResult>> {
    (1..=CRITERIA).map(|id| run(ctx, id)).collect()
}

/// `q prod_{n >= 1} (1 - q^n)^24` expanded factor by factor, coefficients of `q^1..q^len`.
fn naive_delta(len: usize) -> Vec<BigInt> {
    // p[i] is the coefficient of q^i of the running product
    let mut p = vec![BigInt::zero(); len];
    p[0] = BigInt::one();
    for n in 1..len {
        for _ in 0..24 {
            for i in (n..len).rev() {
                let t = p[i - n].clone();
                p[i] -= t;
            }
        }
    }
    p
}

fn exact_coefficients(f: &EigenForm) -> Result<(bool, String)> {
    const LIMIT: u64 = 100_000;
    let a = |n: u64| f.a(n);
    let mut failures = Vec::new();

    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut pairs = 0;
    while pairs < 10_000 {
        let m = rng.random_range(2..=LIMIT / 2);
        let n = rng.random_range(2..=LIMIT / m);
        if m.gcd(&n) != 1 {
            continue;
        }
        pairs += 1;
        if a(m * n)? != &(a(m)? * a(n)?) {
            failures.push(format!("a({m}*{n})"));
        }
    }

    let k1 = f.weight() - 1;
    let mut powers = 0;
    for p in arith::primes_up_to(LIMIT) {
        let pk = Pow::pow(BigInt::from(p), k1);
        let (mut prev, mut cur, mut q) = (BigInt::one(), a(p)?.clone(), p);
        while q <= LIMIT / p {
            q *= p;
            let next = a(p)? * &cur - &pk * &prev;
            if a(q)? != &next {
                failures.push(format!("a({q})"));
            }
            powers += 1;
            prev = cur;
            cur = next;
        }
    }

    let oracle = naive_delta(5);
    for n in 2..=4u64 {
        if a(n)? != &oracle[n as usize - 1] {
            failures.push(format!("a({n}) vs product expansion"));
        }
    }
    let spots = [(2, -24), (3, 252), (4, -1472)];
    for (n, v) in spots {
        if a(n)? != &BigInt::from(v) {
            failures.push(format!("a({n}) = {}", a(n)?));
        }
    }
    Ok((
        failures.is_empty(),
        format!(
            "{pairs} coprime pairs, {powers} prime powers, a(2..4) = {}, {}, {}; failures: {}",
            a(2)?,
            a(3)?,
            a(4)?,
            summarize_failures(&failures)
        ),
    ))
}

fn summarize_failures(failures: &[String]) -> String {
    match failures.len() {
        0 => "none".into(),
        n if n <= 5 => failures.join(", "),
        n => format!("{} and {} more", failures[..5].join(", "), n - 5),
    }
}

fn deligne(delta: &EigenForm, curve: &EigenForm) -> Result<(bool, String)> {
    const LIMIT: u64 = 1_000_000;
    let d = delta.verify_deligne(LIMIT)?;
    let c = curve.verify_deligne(LIMIT)?;
    let show = |r: Option<u64>| r.map_or("none".to_string(), |n| format!("n = {n}"));
    Ok((
        d.is_none() && c.is_none(),
        format!("n <= {LIMIT}; first failure: level 1 {}, level 11 {}", show(d), show(c)),
    ))
}

fn level_prime(curve: &EigenForm) -> Result<(bool, String)> {
    let a11 = curve.a(11)?.clone();
    let unit = a11 == BigInt::one() || a11 == -BigInt::one();
    let mut ok = unit;
    let mut q = 1u64;
    for v in 1..=5u32 {
        q *= 11;
        ok &= curve.a(q)? == &Pow::pow(&a11, v);
    }
    Ok((ok, format!("a(11) = {a11}; a(11^v) = a(11)^v for v <= 5: {ok}")))
}

fn bfree_density(delta: &EigenForm) -> Result<(bool, String)> {
    const X: u64 = 1_000_000;
    let b = build_bset(delta, 1000)?;
    let sieve = sieve_bfree(&b, X);
    let observed = sieve.count_up_to(X) as f64 / X as f64;
    let expected = 4.0 / (PI * PI);
    let rel = (observed - expected).abs() / expected;
    Ok((
        rel <= 0.01,
        format!(
            "density {observed:.6} vs 4/pi^2 = {expected:.6} (product {:.6}), relative gap {rel:.2e}",
            b.density_product()
        ),
    ))
}

fn sign_counts(delta: &EigenForm) -> Result<(bool, String)> {
    const X: u64 = 1_000_000;
    let sieve = sieve_bfree(&build_bset(delta, 1000)?, X);
    let part = partition_signs(delta, &sieve)?;
    let lb = lower_bound_count(delta, &part, X)?;
    let floor = sieve.count_up_to(X / 2);
    let direct = direct_sign_count(delta, X)?;
    let (dp, dm) = (direct.plus as f64 / X as f64, direct.minus as f64 / X as f64);
    let ok = lb.plus >= floor && lb.minus >= floor && dp >= 0.202 && dm >= 0.202;
    Ok((
        ok,
        format!(
            "lower bounds ({}, {}) vs |A n [1, x/2]| = {floor}; direct densities ({dp:.6}, {dm:.6}) vs 0.202",
            lb.plus, lb.minus
        ),
    ))
}

fn moebius(curve: &EigenForm) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut at = 0;
    for x in 1..=10_000u64 {
        let gap = (moebius_identity(curve, x as f64)? - partial_sum_coprime(curve, x as f64)?).abs();
        if gap > worst {
            worst = gap;
            at = x;
        }
    }
    Ok((worst <= 1e-6, format!("max gap {worst:.3e} at x = {at} over x <= 10^4")))
}

fn voronoi_residuals(delta: &EigenForm) -> Result<(bool, String)> {
    let xs = half_integers(&log_spaced(1e3, 1e5, 100));
    let full = residual_scan(delta, &xs, TruncationPolicy::default(), Precision::Double)?;
    let short = residual_scan(delta, &xs, TruncationPolicy::fraction(100.0), Precision::Double)?;
    let worst = full.iter().map(|e| e.residual_over_x4.abs()).fold(0.0, f64::max);
    let abs = |v: &[voronoi::VoronoiEvaluation]| v.iter().map(|e| e.residual.abs()).collect::<Vec<_>>();
    let (m_full, m_short) = (median(&abs(&full)), median(&abs(&short)));
    Ok((
        worst <= 0.5 && m_full < m_short,
        format!("max |R|/x^(1/4) = {worst:.4} (M = x); median |R| {m_full:.4} (M = x) vs {m_short:.4} (M = x/100)"),
    ))
}

/// `(alpha, tau, t, beta)` grid for the kernel check.
pub fn kernel_grid() -> Vec<KernelParams> {
    let mut grid = Vec::new();
    for alpha in [1.0, 2.5, 5.0, 10.0, 20.0, 25.0, 50.0] {
        for tau in [1i8, -1] {
            for t in [1u64, 7, 100, 1000] {
                for (num, den) in [(1, 1), (1, 4), (1, 2), (2, 1), (9, 4), (4, 1), (3, 11)] {
                    grid.push(KernelParams::new(alpha, tau, t, num, den).expect("valid grid point"));
                }
            }
        }
    }
    grid
}

fn kernel_identities() -> Result<(bool, String)> {
    let grid = kernel_grid();
    let mut worst_quad = 0.0f64;
    let mut worst_lead = 0.0f64;
    for p in &grid {
        let r = r_beta(p);
        worst_quad = worst_quad.max((r.numeric - r.closed_form).abs());
        if p.beta_is_one() && p.alpha >= 20.0 {
            worst_lead = worst_lead.max((r.closed_form - r_beta_leading(p)).abs());
        }
    }
    Ok((
        worst_quad <= 1e-8 && worst_lead <= 0.01,
        format!(
            "{} grid points: max |numeric - closed| = {worst_quad:.2e}; max |r_1 - tau/(2 sqrt 2)| = {worst_lead:.2e} (alpha >= 20)",
            grid.len()
        ),
    ))
}

fn large_values(delta: &EigenForm) -> Result<(bool, String)> {
    let window = 3.0 * intervals::c_n(1, 3.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for x in [1e4f64, 1e5] {
        let bar = 0.05 * x.powf(0.25);
        let e = find_extrema(delta, x, window)?;
        ok &= e.max_value >= bar && e.min_value <= -bar;
        parts.push(format!(
            "X = {x:e}: max {:.4} at {}, min {:.4} at {} (bar {bar:.4})",
            e.max_value, e.max_at, e.min_value, e.min_at
        ));
    }
    let bar = 1.0 / (PI * PI * SQRT_2);
    let plus = voronoi::j_tau(delta, 1e4, 20.0, 1)?;
    let minus = voronoi::j_tau(delta, 1e4, 20.0, -1)?;
    ok &= plus > bar && minus < -bar;
    parts.push(format!("J_+ = {plus:.4}, J_- = {minus:.4} vs +-{bar:.4}"));
    Ok((ok, parts.join("; ")))
}

fn short_intervals(delta: &EigenForm, curve: &EigenForm) -> Result<(bool, String)> {
    let cfg = IntervalConfig {
        c: 3.0,
        eps: 0.1,
        ..Default::default()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, f) in [("level 1", delta), ("level 11", curve)] {
        let cn = intervals::c_n(f.level(), cfg.c);
        for x in [1e4f64, 1e5, 1e6] {
            let r = intervals::verify_short_interval(f, x, &cfg)?;
            let triple = intervals::alternating_triple(f, x, cn, cfg.triple_threshold)?;
            let alternates = triple.is_some_and(|t| {
                let (d1, d2) = t.differences();
                (d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)
            });
            ok &= r.pass && alternates;
            parts.push(format!(
                "{name} x = {x:e}: (+{}, -{}) vs {:.3}{}",
                r.plus,
                r.minus,
                r.threshold,
                if alternates { "" } else { ", no alternating triple" }
            ));
        }
    }
    Ok((ok, parts.join("; ")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_product_matches_known_values() {
        let p = naive_delta(6);
        let expected = [1, -24, 252, -1472, 4830, -6048];
        for (c, e) in p.iter().zip(expected) {
            assert_eq!(c, &BigInt::from(e));
        }
    }

    #[test]
    fn unknown_criterion_is_rejected() {
        let ctx = Context::with_tables(
            EigenForm::from_level1(12, 20).unwrap(),
            EigenForm::from_elliptic_curve(&curve_11a(), 11, 20).unwrap(),
        );
        assert!(run(&ctx, 0).is_err());
        assert!(run(&ctx, 11).is_err());
        let r = run(&ctx, 8).unwrap();
        assert!(r.passed, "{r}");
        // the kernel check never touches the tables
        let lazy = Context::lazy();
        assert!(run(&lazy, 8).unwrap().passed);
        assert!(lazy.delta.get().is_none() && lazy.curve.get().is_none());
    }

    #[test]
    fn grid_covers_both_regimes() {
        let grid = kernel_grid();
        assert!(grid.iter().any(|p| p.beta_is_one() && p.alpha >= 20.0));
        assert!(grid.iter().any(|p| !p.beta_is_one()));
    }
}
