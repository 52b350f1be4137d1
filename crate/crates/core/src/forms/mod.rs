//! Primitive forms as exact coefficient tables.
//!
//! An [`EigenForm`] stores the integer Fourier coefficients `a(n)` for
//! `1 <= n <= bound`. Normalised eigenvalues `lambda(n) = a(n) / n^((k-1)/2)`
//! are derived lazily as `f64`; every sign decision goes through the exact
//! integers instead.

mod elliptic;
mod io;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith;
use crate::error::{Error, Result};
use crate::series;

pub use elliptic::Weierstrass;
pub use io::write_coefficients;

/// Where a coefficient table came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormSource {
    Level1,
    Elliptic,
    File,
    /// Built directly from a caller-supplied table.
    Table,
}

#[derive(Clone)]
pub struct EigenForm {
    weight: u32,
    level: u64,
    /// `coeffs[n - 1] = a(n)`.
    coeffs: Vec<BigInt>,
    source: FormSource,
    lambdas: OnceLock<Vec<f64>>,
}

impl fmt::Debug for EigenForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EigenForm")
            .field("weight", &self.weight)
            .field("level", &self.level)
            .field("bound", &self.bound())
            .field("source", &self.source)
            .finish()
    }
}

impl EigenForm {
    /// The level-1 eigenform of weight `k` with coefficients up to `bound`.
    pub fn from_level1(k: i64, bound: u64) -> Result<EigenForm> {
        if bound == 0 {
            return Err(Error::usage("coefficient bound must be positive"));
        }
        let s = series::level1_eigenform(k, bound as usize + 1)?;
        let mut coeffs = s.into_coeffs();
        coeffs.remove(0);
        Ok(EigenForm {
            weight: k as u32,
            level: 1,
            coeffs,
            source: FormSource::Level1,
            lambdas: OnceLock::new(),
        })
    }

    /// The weight-2 newform attached to an elliptic curve of squarefree conductor `level`.
    ///
    /// `a(p)` is counted on the reduction mod `p` for every prime `p <= bound`;
    /// composite indices come from [`hecke_extend`].
    pub fn from_elliptic_curve(curve: &Weierstrass, level: u64, bound: u64) -> Result<EigenForm> {
        check_level(level)?;
        if bound == 0 {
            return Err(Error::usage("coefficient bound must be positive"));
        }
        let primes = curve.prime_coefficients(level, bound)?;
        let coeffs = hecke_extend(&primes, 2, level, bound)?;
        let form = EigenForm {
            weight: 2,
            level,
            coeffs,
            source: FormSource::Elliptic,
            lambdas: OnceLock::new(),
        };
        form.check_level_primes()?;
        Ok(form)
    }

    /// Reads the canonical coefficient file and validates it.
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<EigenForm> {
        io::read_file(path.as_ref())
    }

    /// Wraps an explicit table `table[n - 1] = a(n)` after checking the structural invariants:
    /// squarefree level, `a(1) = 1`, multiplicativity and the level-prime relations.
    pub fn from_table(
        weight: u32,
        level: u64,
        table: Vec<BigInt>,
        source: FormSource,
    ) -> Result<EigenForm> {
        if weight < 2 || weight % 2 == 1 {
            return Err(Error::usage(format!("weight must be even and >= 2, got {weight}")));
        }
        check_level(level)?;
        if table.is_empty() {
            return Err(Error::usage("coefficient table is empty"));
        }
        let form = EigenForm {
            weight,
            level,
            coeffs: table,
            source,
            lambdas: OnceLock::new(),
        };
        form.check_structure()?;
        Ok(form)
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    /// Largest `n` with a stored coefficient.
    pub fn bound(&self) -> u64 {
        self.coeffs.len() as u64
    }

    pub fn source(&self) -> FormSource {
        self.source
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Exact coefficient `a(n)`.
    pub fn a(&self, n: u64) -> Result<&BigInt> {
        if n == 0 || n > self.bound() {
            return Err(Error::OutOfRange {
                n,
                bound: self.bound(),
            });
        }
        Ok(&self.coeffs[n as usize - 1])
    }

    /// Sign of `a(n)` from the exact integer.
    pub fn sign(&self, n: u64) -> Result<Ordering> {
        Ok(self.a(n)?.cmp(&BigInt::zero()))
    }

    /// Normalised eigenvalue `lambda_f(n)`.
    pub fn lambda(&self, n: u64) -> Result<f64> {
        if n == 0 || n > self.bound() {
            return Err(Error::OutOfRange {
                n,
                bound: self.bound(),
            });
        }
        Ok(self.lambdas()[n as usize - 1])
    }

    /// All normalised eigenvalues, `lambdas()[n - 1] = lambda_f(n)`.
    pub fn lambdas(&self) -> &[f64] {
        self.lambdas.get_or_init(|| {
            let half_weight = (self.weight as i32 - 2) / 2;
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let n = (i + 1) as f64;
                    let scale = n.powi(half_weight) * n.sqrt();
                    a.to_f64().unwrap_or(f64::NAN) / scale
                })
                .collect()
        })
    }

    /// Primes dividing the level.
    pub fn level_primes(&self) -> Vec<u64> {
        arith::factorize(self.level).into_iter().map(|(p, _)| p).collect()
    }

    pub fn coprime_to_level(&self, n: u64) -> bool {
        n.gcd(&self.level) == 1
    }

    /// Checks `a(n)^2 <= d(n)^2 n^(k-1)` exactly for `n <= bound` coprime to the level.
    /// Returns the first `n` that fails.
    pub fn verify_deligne(&self, bound: u64) -> Result<Option<u64>> {
        if bound > self.bound() {
            return Err(Error::usage(format!(
                "Deligne check bound {bound} exceeds table bound {}",
                self.bound()
            )));
        }
        let divisor_counts = arith::divisor_counts_up_to(bound);
        let exponent = self.weight - 1;
        for n in 1..=bound {
            if !self.coprime_to_level(n) {
                continue;
            }
            let a = &self.coeffs[n as usize - 1];
            let d = divisor_counts[n as usize] as u64;
            let rhs = BigInt::from(d * d) * Pow::pow(BigInt::from(n), exponent);
            if a * a > rhs {
                return Ok(Some(n));
            }
        }
        Ok(None)
    }

    /// The least prime `p'` not dividing the level with `a(p') < 0`.
    pub fn least_negative_prime(&self) -> Result<u64> {
        for p in arith::primes_up_to(self.bound()) {
            if !self.level.is_multiple_of(p) && self.coeffs[p as usize - 1].is_negative() {
                return Ok(p);
            }
        }
        Err(Error::SearchExhausted { bound: self.bound() })
    }

    /// `epsilon_f(p) = sign a(p)` for a prime `p` dividing the level.
    pub fn epsilon(&self, p: u64) -> Result<i8> {
        if !arith::is_prime(p) || !self.level.is_multiple_of(p) {
            return Err(Error::usage(format!(
                "{p} is not a prime dividing the level {}",
                self.level
            )));
        }
        let a = self.a(p)?;
        let expected = Pow::pow(BigInt::from(p), self.weight - 2);
        if a * a != expected {
            return Err(Error::invariant(
                p,
                format!("a({p})^2 = {} but level primes need p^(k-2) = {expected}", a * a),
            ));
        }
        Ok(if a.is_negative() { -1 } else { 1 })
    }

    fn check_structure(&self) -> Result<()> {
        if !self.coeffs[0].is_one() {
            return Err(Error::invariant(1, "a(1) must equal 1"));
        }
        let spf = arith::smallest_prime_factors(self.bound());
        for n in 2..=self.bound() {
            let p = spf[n as usize] as u64;
            let (pe, m) = split_prime_power(n, p);
            if m == 1 {
                if pe != p && !self.level.is_multiple_of(p) {
                    self.check_hecke_recursion(p, pe)?;
                }
                continue;
            }
            let expected = &self.coeffs[pe as usize - 1] * &self.coeffs[m as usize - 1];
            if self.coeffs[n as usize - 1] != expected {
                return Err(Error::invariant(
                    n,
                    format!("a({n}) != a({pe}) a({m}); table is not multiplicative"),
                ));
            }
        }
        self.check_level_primes()
    }

    /// `a(p^(v+1)) = a(p) a(p^v) - p^(k-1) a(p^(v-1))` at `q = p^(v+1)`.
    fn check_hecke_recursion(&self, p: u64, q: u64) -> Result<()> {
        let a = |n: u64| &self.coeffs[n as usize - 1];
        let expected = a(p) * a(q / p) - Pow::pow(BigInt::from(p), self.weight - 1) * a(q / p / p);
        if a(q) != &expected {
            return Err(Error::invariant(q, format!("a({q}) breaks the Hecke recursion at p = {p}")));
        }
        Ok(())
    }

    /// `a(p)^2 = p^(k-2)` and `a(p^v) = a(p)^v` for every `p | N` in range.
    fn check_level_primes(&self) -> Result<()> {
        for p in self.level_primes() {
            if p > self.bound() {
                continue;
            }
            let ap = &self.coeffs[p as usize - 1];
            if ap * ap != Pow::pow(BigInt::from(p), self.weight - 2) {
                return Err(Error::invariant(
                    p,
                    format!("level prime {p} has a(p) = {ap}, expected +-p^((k-2)/2)"),
                ));
            }
            // The weight-k normalisation makes a(p^v) = a(p)^v exactly.
            let mut pv = p * p;
            let mut expected = ap * ap;
            while pv <= self.bound() {
                if self.coeffs[pv as usize - 1] != expected {
                    return Err(Error::invariant(
                        pv,
                        format!("a({pv}) != a({p})^v for level prime {p}"),
                    ));
                }
                expected *= ap;
                pv *= p;
            }
        }
        Ok(())
    }
}

fn check_level(level: u64) -> Result<()> {
    if !arith::is_squarefree(level) {
        return Err(Error::InvalidLevel(format!("level {level} is not squarefree")));
    }
    Ok(())
}

/// Splits `n = p^e m` with `p` the smallest prime factor; returns `(p^e, m)`.
fn split_prime_power(n: u64, p: u64) -> (u64, u64) {
    let mut m = n;
    let mut pe = 1;
    while m.is_multiple_of(p) {
        m /= p;
        pe *= p;
    }
    (pe, m)
}

/// Extends prime coefficients to the full table `a(1..=bound)`.
///
/// For `p` not dividing the level, `a(p^(v+1)) = a(p) a(p^v) - p^(k-1) a(p^(v-1))`;
/// for `p | N`, `a(p^v) = a(p)^v`. Coprime indices multiply.
pub fn hecke_extend(
    prime_coeffs: &BTreeMap<u64, BigInt>,
    weight: u32,
    level: u64,
    bound: u64,
) -> Result<Vec<BigInt>> {
    if bound == 0 {
        return Err(Error::usage("coefficient bound must be positive"));
    }
    let spf = arith::smallest_prime_factors(bound);
    let mut a: Vec<BigInt> = Vec::with_capacity(bound as usize);
    a.push(BigInt::one());
    for n in 2..=bound {
        let p = spf[n as usize] as u64;
        let (pe, m) = split_prime_power(n, p);
        let value = if m != 1 {
            &a[pe as usize - 1] * &a[m as usize - 1]
        } else if pe == p {
            prime_coeffs
                .get(&p)
                .cloned()
                .ok_or_else(|| Error::usage(format!("missing prime coefficient a({p})")))?
        } else {
            let ap = &a[p as usize - 1];
            let prev = &a[(pe / p) as usize - 1];
            if level.is_multiple_of(p) {
                ap * prev
            } else {
                let prev2 = &a[(pe / p / p) as usize - 1];
                ap * prev - Pow::pow(BigInt::from(p), weight - 1) * prev2
            }
        };
        a.push(value);
    }
    Ok(a)
}
