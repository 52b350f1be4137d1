//! Partial sums of eigenvalues and their truncated Voronoi expansion.
//!
//! For a form of level `N` and weight `k`,
//!
//! ```text
//! S*(x) ~ s_f (Nx)^(1/4) / (pi sqrt 2)
//!         * sum_{d | N} (-1)^omega(d) lambda(d) d^(-1/4)
//!           * sum_{n <= M} lambda(n) n^(-3/4) cos(4 pi sqrt(nx / (dN)) - pi/4)
//! ```
//!
//! with `s_f = (-1)^(k/2) mu(N) sign a(N)`. The residual `S*(x) - main`
//! is what the scans below measure.

pub mod kernel;

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::arith;
use crate::error::{Error, Result};
use crate::forms::EigenForm;
use crate::quadrature::AdaptiveSimpson;
use crate::summation::{compensated_sum, Accumulator, NeumaierSum, Precision};

pub use kernel::{kernel_k, kernel_mass, kernel_w, r_beta, r_beta_leading, KernelParams, RBeta};

fn floor_index(f: &EigenForm, x: f64) -> Result<u64> {
    if !x.is_finite() {
        return Err(Error::usage(format!("x must be finite, got {x}")));
    }
    if x < 1.0 {
        return Ok(0);
    }
    let n = x.floor() as u64;
    if n > f.bound() {
        return Err(Error::OutOfRange { n, bound: f.bound() });
    }
    Ok(n)
}

/// `S_f(x) = sum_{n <= x} lambda(n)`, compensated.
pub fn partial_sum(f: &EigenForm, x: f64) -> Result<f64> {
    let n = floor_index(f, x)? as usize;
    Ok(compensated_sum(f.lambdas()[..n].iter().copied(), Precision::Double))
}

/// `S*_f(x)`: as [`partial_sum`] restricted to `n` coprime to the level.
pub fn partial_sum_coprime(f: &EigenForm, x: f64) -> Result<f64> {
    let n = floor_index(f, x)?;
    Ok(compensated_sum(
        (1..=n)
            .filter(|&m| f.coprime_to_level(m))
            .map(|m| f.lambdas()[m as usize - 1]),
        Precision::Double,
    ))
}

/// `sum_{d | N} (-1)^omega(d) lambda(d) S_f(x/d)`, which equals `S*_f(x)`.
pub fn moebius_identity(f: &EigenForm, x: f64) -> Result<f64> {
    if x < 1.0 {
        return Ok(0.0);
    }
    let mut acc = NeumaierSum::new();
    for d in arith::divisors(f.level()) {
        let sign = if arith::omega(d).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc.add(sign * f.lambda(d)? * partial_sum(f, x / d as f64)?);
    }
    Ok(acc.value())
}

/// Sign in front of the main term: `eta_f = mu(N) sign a(N)`.
///
/// The `i^k` of the Bessel-kernel asymptotics cancels against the `i^k` of
/// the functional equation, so no `(-1)^(k/2)` survives; the regression
/// tests check this against the partial sums for every supported weight.
pub fn front_sign(f: &EigenForm) -> Result<i8> {
    let mu = arith::mobius(f.level()) as i8;
    let sign_n: i8 = if f.level() <= f.bound() {
        match f.sign(f.level())? {
            std::cmp::Ordering::Less => -1,
            _ => 1,
        }
    } else {
        f.level_primes()
            .into_iter()
            .map(|p| f.epsilon(p))
            .product::<Result<i8>>()?
    };
    Ok(mu * sign_n)
}

/// Main term of the truncated Voronoi formula with `M` terms per divisor.
pub fn main_term(f: &EigenForm, x: f64, m: u64) -> Result<f64> {
    main_term_with(f, x, m, Precision::Double)
}

pub fn main_term_with(f: &EigenForm, x: f64, m: u64, precision: Precision) -> Result<f64> {
    if m > f.bound() {
        return Err(Error::usage(format!(
            "truncation M = {m} exceeds coefficient bound {}",
            f.bound()
        )));
    }
    if !x.is_finite() || x < 1.0 {
        return Err(Error::usage(format!("main term needs x >= 1, got {x}")));
    }
    if m == 0 {
        return Ok(0.0);
    }
    let level = f.level();
    let lambdas = f.lambdas();
    let mut outer = Accumulator::new(precision);
    for d in arith::divisors(level) {
        let sign = if arith::omega(d).is_multiple_of(2) { 1.0 } else { -1.0 };
        let coeff = sign * f.lambda(d)? / (d as f64).powf(0.25);
        let dn = (d * level) as f64;
        let mut inner = Accumulator::new(precision);
        for n in 1..=m {
            let nf = n as f64;
            let root = nf.sqrt();
            let weight = lambdas[n as usize - 1] / (root * root.sqrt());
            let phase = 4.0 * PI * (nf * x / dn).sqrt() - PI / 4.0;
            inner.add(weight * phase.cos());
        }
        outer.add(coeff * inner.value());
    }
    let s = front_sign(f)? as f64;
    Ok(s * (level as f64 * x).powf(0.25) / (PI * SQRT_2) * outer.value())
}

/// Prefix sums `S(n)` and `S*(n)` for `0 <= n <= limit`, accumulated with compensation.
#[derive(Clone, Debug)]
pub struct PartialSums {
    plain: Vec<f64>,
    coprime: Vec<f64>,
}

impl PartialSums {
    pub fn new(f: &EigenForm, limit: u64) -> Result<PartialSums> {
        if limit > f.bound() {
            return Err(Error::OutOfRange { n: limit, bound: f.bound() });
        }
        let lambdas = f.lambdas();
        let mut plain = Vec::with_capacity(limit as usize + 1);
        let mut coprime = Vec::with_capacity(limit as usize + 1);
        plain.push(0.0);
        coprime.push(0.0);
        let mut s = NeumaierSum::new();
        let mut sc = NeumaierSum::new();
        for n in 1..=limit {
            let l = lambdas[n as usize - 1];
            s.add(l);
            if f.coprime_to_level(n) {
                sc.add(l);
            }
            plain.push(s.value());
            coprime.push(sc.value());
        }
        Ok(PartialSums { plain, coprime })
    }

    pub fn limit(&self) -> u64 {
        self.plain.len() as u64 - 1
    }

    fn index(&self, x: f64) -> Result<usize> {
        if x < 1.0 {
            return Ok(0);
        }
        let n = x.floor() as u64;
        if n > self.limit() {
            return Err(Error::OutOfRange { n, bound: self.limit() });
        }
        Ok(n as usize)
    }

    pub fn plain(&self, x: f64) -> Result<f64> {
        Ok(self.plain[self.index(x)?])
    }

    pub fn coprime(&self, x: f64) -> Result<f64> {
        Ok(self.coprime[self.index(x)?])
    }

    /// Largest and smallest `S*` on `[x, x + h]`. `S*` is a right-continuous
    /// step function, so the candidates are `x` and the integers in `(x, x + h]`.
    pub fn extrema(&self, x: f64, h: f64) -> Result<Extrema> {
        if h.is_nan() || h < 0.0 {
            return Err(Error::usage(format!("window length must be >= 0, got {h}")));
        }
        let start = self.coprime(x)?;
        let mut ext = Extrema {
            max_at: x,
            max_value: start,
            min_at: x,
            min_value: start,
        };
        let first = x.floor() as u64 + 1;
        let last = (x + h).floor() as u64;
        if last > self.limit() {
            return Err(Error::OutOfRange { n: last, bound: self.limit() });
        }
        for n in first..=last {
            let v = self.coprime[n as usize];
            if v > ext.max_value {
                ext.max_value = v;
                ext.max_at = n as f64;
            }
            if v < ext.min_value {
                ext.min_value = v;
                ext.min_at = n as f64;
            }
        }
        Ok(ext)
    }
}

/// Location and value of the extremes of `S*` in a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extrema {
    pub max_at: f64,
    pub max_value: f64,
    pub min_at: f64,
    pub min_value: f64,
}

/// Argmax and argmin of `S*_f` over `[X, X + c_n sqrt(X)]`.
pub fn find_extrema(f: &EigenForm, x: f64, c_n: f64) -> Result<Extrema> {
    let h = c_n * x.sqrt();
    let sums = PartialSums::new(f, ((x + h).floor() as u64).min(f.bound()))?;
    sums.extrema(x, h)
}

/// Truncation length as a function of `x`: `M(x) = floor(scale * x^exponent)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationPolicy {
    pub scale: f64,
    pub exponent: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            scale: 1.0,
            exponent: 1.0,
        }
    }
}

impl TruncationPolicy {
    /// `M = floor(x / divisor)`.
    pub fn fraction(divisor: f64) -> Self {
        TruncationPolicy {
            scale: 1.0 / divisor,
            exponent: 1.0,
        }
    }

    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= 2.0) {
            return Err(Error::usage(format!("truncation exponent must lie in (0, 2], got {exponent}")));
        }
        Ok(TruncationPolicy { scale: 1.0, exponent })
    }

    pub fn truncation(&self, x: f64) -> u64 {
        (self.scale * x.powf(self.exponent)).floor().max(0.0) as u64
    }
}

/// One evaluation of the truncated Voronoi formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VoronoiEvaluation {
    pub x: f64,
    #[serde(rename = "M")]
    pub m: u64,
    pub main: f64,
    pub direct: f64,
    pub residual: f64,
    pub residual_over_x4: f64,
    pub sign: i8,
}

/// Evaluates `S*_f` and the main term at each `x`, with `M = policy(x)`.
pub fn residual_scan(
    f: &EigenForm,
    xs: &[f64],
    policy: TruncationPolicy,
    precision: Precision,
) -> Result<Vec<VoronoiEvaluation>> {
    let Some(max_x) = xs.iter().copied().reduce(f64::max) else {
        return Ok(Vec::new());
    };
    let sums = PartialSums::new(f, floor_index(f, max_x)?)?;
    let sign = front_sign(f)?;
    xs.par_iter()
        .map(|&x| {
            let m = policy.truncation(x);
            let direct = sums.coprime(x)?;
            let main = main_term_with(f, x, m, precision)?;
            let residual = direct - main;
            Ok(VoronoiEvaluation {
                x,
                m,
                main,
                direct,
                residual,
                residual_over_x4: residual / x.powf(0.25),
                sign,
            })
        })
        .collect()
}

/// Summary statistics of a residual scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanSummary {
    pub points: usize,
    pub max_abs_residual: f64,
    pub median_abs_residual: f64,
    pub max_abs_residual_over_x4: f64,
}

pub fn summarize(evals: &[VoronoiEvaluation]) -> ScanSummary {
    let abs: Vec<f64> = evals.iter().map(|e| e.residual.abs()).collect();
    ScanSummary {
        points: evals.len(),
        max_abs_residual: abs.iter().copied().fold(0.0, f64::max),
        median_abs_residual: median(&abs),
        max_abs_residual_over_x4: evals
            .iter()
            .map(|e| e.residual_over_x4.abs())
            .fold(0.0, f64::max),
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// `log_spaced(lo, hi, count)`: `count` points geometrically spaced on `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            // endpoints exactly, not exp(ln(x))
            (0..count)
                .map(|i| match i {
                    0 => lo,
                    i if i == count - 1 => hi,
                    _ => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

/// Moves each point to `floor(x) + 1/2`, away from the jumps of the partial sums.
pub fn half_integers(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|x| x.floor() + 0.5).collect()
}

/// `sum_{d | N} (-1)^omega(d) / d^2 = prod_{p | N} (1 - p^-2)`.
pub fn level_euler_factor(level: u64) -> f64 {
    arith::divisors(level)
        .into_iter()
        .map(|d| {
            let s = if arith::omega(d).is_multiple_of(2) { 1.0 } else { -1.0 };
            s / (d as f64 * d as f64)
        })
        .sum()
}

/// Value `J_tau` should approach for large `alpha` and `X`.
pub fn j_tau_expected(level: u64, tau: i8) -> f64 {
    tau as f64 / (2.0 * SQRT_2) * level_euler_factor(level)
}

/// `J_tau = int_{-1}^{1} F(t + alpha u) K_tau(u) du` with
/// `F(s) = pi sqrt 2 / s_f * S*(N s^2) / sqrt(N s)`, `T = sqrt(X/N)`, `t = floor(T) + 1`.
///
/// `S*(N s^2)` is constant between consecutive solutions of `N s^2 in Z`, so
/// the interval is cut at every such point (and at `u = 0`) and each smooth
/// piece is integrated separately.
pub fn j_tau(f: &EigenForm, big_x: f64, alpha: f64, tau: i8) -> Result<f64> {
    if tau != 1 && tau != -1 {
        return Err(Error::usage(format!("tau must be +1 or -1, got {tau}")));
    }
    if alpha.is_nan() || alpha < 1.0 {
        return Err(Error::usage(format!("alpha must be >= 1, got {alpha}")));
    }
    let level = f.level() as f64;
    let t = (big_x / level).sqrt().floor() + 1.0;
    if t <= alpha {
        return Err(Error::usage(format!(
            "centre t = {t} must exceed alpha = {alpha}; increase X"
        )));
    }
    let top = level * (t + alpha) * (t + alpha);
    if top.floor() as u64 > f.bound() {
        return Err(Error::usage(format!(
            "J_tau needs coefficients up to {} but the table stops at {}",
            top.floor(),
            f.bound()
        )));
    }
    let sums = PartialSums::new(f, top.floor() as u64)?;
    let bottom = level * (t - alpha) * (t - alpha);

    let mut cuts = vec![-1.0, 0.0, 1.0];
    let first = bottom.floor() as u64 + 1;
    let last = top.ceil() as u64 - 1;
    for m in first..=last {
        cuts.push(((m as f64 / level).sqrt() - t) / alpha);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let quad = AdaptiveSimpson::with_tolerance(1e-9 / cuts.len() as f64);
    let smooth = |u: f64| kernel_k(alpha, tau, u) / (level * (t + alpha * u)).sqrt();
    let mut acc = NeumaierSum::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let s = t + alpha * mid;
        let step = sums.coprime(level * s * s)?;
        if step == 0.0 {
            continue;
        }
        acc.add(step * quad.integrate(smooth, a, b));
    }
    let sign = front_sign(f)? as f64;
    Ok(PI * SQRT_2 / sign * acc.value())
}
