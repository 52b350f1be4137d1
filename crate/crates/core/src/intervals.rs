//! Same-sign counts in short windows `(x, x + C_N sqrt(x)]`.
//!
//! If `S*` takes alternating signs of size `>> (Nx)^(1/4)` at three points
//! `x_1 < x_2 < x_3`, the two increments are large and of opposite sign, and
//! each increment is a sum of at most `|increment| / max|lambda|` terms of
//! its sign. That forces many positive and many negative eigenvalues in the
//! window.

use std::cmp::Ordering;

use serde::Serialize;

use crate::arith;
use crate::bfree::SignCounts;
use crate::error::{Error, Result};
use crate::forms::EigenForm;
use crate::voronoi::PartialSums;

/// `Psi(N) = sum_{d | N} d^(-1/2) log(2d)`.
pub fn psi(level: u64) -> f64 {
    arith::divisors(level)
        .into_iter()
        .map(|d| (2.0 * d as f64).ln() / (d as f64).sqrt())
        .sum()
}

/// `C_N = C N^(1/2) Psi(N)^3`.
pub fn c_n(level: u64, c: f64) -> f64 {
    c_n_with_exponent(level, c, 3.0)
}

/// `C N^(1/2) Psi(N)^exponent`.
pub fn c_n_with_exponent(level: u64, c: f64, exponent: f64) -> f64 {
    c * (level as f64).sqrt() * psi(level).powf(exponent)
}

/// Exact sign counts over integers `n` in `(x, x + h]` coprime to the level.
pub fn window_counts(f: &EigenForm, x: f64, h: f64) -> Result<SignCounts> {
    if h.is_nan() || x.is_nan() || h < 0.0 || x < 0.0 {
        return Err(Error::usage(format!("window ({x}, {x} + {h}] is invalid")));
    }
    let first = x.floor() as u64 + 1;
    let last = (x + h).floor() as u64;
    if last > f.bound() {
        return Err(Error::OutOfRange { n: last, bound: f.bound() });
    }
    let mut counts = SignCounts::default();
    for n in first..=last {
        if !f.coprime_to_level(n) {
            continue;
        }
        match f.sign(n)? {
            Ordering::Greater => counts.plus += 1,
            Ordering::Less => counts.minus += 1,
            Ordering::Equal => {}
        }
    }
    Ok(counts)
}

/// Three points with alternating `S*` signs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Triple {
    pub points: [f64; 3],
    pub values: [f64; 3],
}

impl Triple {
    /// `S*(x_2) - S*(x_1)` and `S*(x_3) - S*(x_2)`.
    pub fn differences(&self) -> (f64, f64) {
        (
            self.values[1] - self.values[0],
            self.values[2] - self.values[1],
        )
    }
}

/// Searches `[x, y]` and `[y, y + C_N sqrt(y)]`, `y = x + C_N sqrt(x)`, for three
/// increasing points where `S*` alternates in sign with `|S*| >= threshold (Nx)^(1/4)`.
pub fn alternating_triple(f: &EigenForm, x: f64, c_n: f64, threshold: f64) -> Result<Option<Triple>> {
    let y = x + c_n * x.sqrt();
    let end = y + c_n * y.sqrt();
    if end.floor() as u64 > f.bound() {
        return Err(Error::OutOfRange {
            n: end.floor() as u64,
            bound: f.bound(),
        });
    }
    let sums = PartialSums::new(f, end.floor() as u64)?;
    alternating_triple_in(&sums, f.level(), x, c_n, threshold)
}

pub(crate) fn alternating_triple_in(
    sums: &PartialSums,
    level: u64,
    x: f64,
    c_n: f64,
    threshold: f64,
) -> Result<Option<Triple>> {
    let bar = threshold * (level as f64 * x).powf(0.25);
    let y = x + c_n * x.sqrt();
    let first = sums.extrema(x, c_n * x.sqrt())?;
    let second = sums.extrema(y, c_n * y.sqrt())?;

    // (position, value) pairs of each window, in increasing position
    let ordered = |e: &crate::voronoi::Extrema| {
        let a = (e.max_at, e.max_value);
        let b = (e.min_at, e.min_value);
        if a.0 <= b.0 {
            [a, b]
        } else {
            [b, a]
        }
    };
    let w1 = ordered(&first);
    let w2 = ordered(&second);
    let large = |v: f64, sign: f64| v * sign >= bar && v != 0.0;
    let pick = |p: (f64, f64), want: f64, other: [(f64, f64); 2]| -> Option<(f64, f64)> {
        other
            .into_iter()
            .find(|q| large(q.1, want) && (q.0 - p.0).abs() > 0.0)
    };
    let candidates = [
        // both extremes of the first window, then the matching one of the second
        (w1[0], w1[1], pick(w1[1], -w1[1].1.signum(), w2)),
        // an extreme of the first window, then both of the second
        (
            pick(w2[0], -w2[0].1.signum(), w1).unwrap_or((f64::NAN, f64::NAN)),
            w2[0],
            Some(w2[1]),
        ),
    ];
    for (a, b, c) in candidates {
        let Some(c) = c else { continue };
        if a.0.is_nan() {
            continue;
        }
        let s = a.1.signum();
        let ok = large(a.1, s) && large(b.1, -s) && large(c.1, s) && a.0 < b.0 && b.0 < c.0;
        if ok {
            return Ok(Some(Triple {
                points: [a.0, b.0, c.0],
                values: [a.1, b.1, c.1],
            }));
        }
    }
    Ok(None)
}

/// Knobs of the short-interval check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntervalConfig {
    /// Absolute constant `C` in `C_N`.
    pub c: f64,
    pub eps: f64,
    /// Exponent of `Psi(N)` in `C_N`.
    pub psi_exponent: f64,
    /// `c` in the triple threshold `c (Nx)^(1/4)`.
    pub triple_threshold: f64,
    /// Windows with `x` below this are flagged, not failed.
    pub x_floor: f64,
}

impl Default for IntervalConfig {
    fn default() -> Self {
        IntervalConfig {
            c: 3.0,
            eps: 0.1,
            psi_exponent: 3.0,
            triple_threshold: 0.05,
            x_floor: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntervalReport {
    pub x: f64,
    pub h: f64,
    pub plus: u64,
    pub minus: u64,
    /// `(Nx)^(1/4 - eps)`.
    pub threshold: f64,
    pub pass: bool,
    /// `None` when no triple clears the threshold or the table is too short to search.
    pub triple: Option<[f64; 3]>,
    pub below_floor: bool,
}

/// Counts both signs in `(x, x + C_N sqrt(x)]` and compares the smaller count
/// with `(Nx)^(1/4 - eps)`.
pub fn verify_short_interval(f: &EigenForm, x: f64, cfg: &IntervalConfig) -> Result<IntervalReport> {
    let cn = c_n_with_exponent(f.level(), cfg.c, cfg.psi_exponent);
    let h = cn * x.sqrt();
    let counts = window_counts(f, x, h)?;
    let threshold = (f.level() as f64 * x).powf(0.25 - cfg.eps);
    let pass = counts.plus.min(counts.minus) as f64 >= threshold;
    let triple = match alternating_triple(f, x, cn, cfg.triple_threshold) {
        Ok(t) => t.map(|t| t.points),
        Err(Error::OutOfRange { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(IntervalReport {
        x,
        h,
        plus: counts.plus,
        minus: counts.minus,
        threshold,
        pass,
        triple,
        below_floor: x < cfg.x_floor,
    })
}
