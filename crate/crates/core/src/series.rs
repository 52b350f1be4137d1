//! Exact truncated power series over arbitrary-precision integers.
//!
//! The level-1 cusp eigenforms of weights 12, 16, 18, 20, 22 and 26 are
//! generated here as products of the discriminant with Eisenstein series.
//! The discriminant itself is built from the sparse Jacobi cube
//! `prod (1 - q^n)^3 = sum (-1)^m (2m + 1) q^(m(m+1)/2)`, so that even
//! a million coefficients need only a handful of dense-by-sparse passes.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith;

use crate::error::{Error, Result};

/// A power series `sum coeffs[i] q^i` known exactly up to (excluding) `q^len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    coeffs: Vec<BigInt>,
}

impl TruncatedSeries {
    /// Wraps an explicit coefficient vector. The truncation length is its length.
    pub fn new(coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::usage("truncation length must be positive"));
        }
        Ok(TruncatedSeries { coeffs })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero(len: usize) -> Result<Self> {
        Self::new(vec![BigInt::zero(); len])
    }

    /// The multiplicative identity `1 + O(q^len)`.
    pub fn one(len: usize) -> Result<Self> {
        let mut s = Self::zero(len)?;
        s.coeffs[0] = BigInt::one();
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeff(&self, i: usize) -> &BigInt {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.coeffs
    }

    /// Cauchy product truncated to the common length.
    pub fn mul(&self, other: &TruncatedSeries) -> Result<TruncatedSeries> {
        if self.len() != other.len() {
            return Err(Error::usage(format!(
                "series length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        if let Some(coeffs) = mul_small(&self.coeffs, &other.coeffs) {
            return Ok(TruncatedSeries { coeffs });
        }
        Ok(TruncatedSeries {
            coeffs: mul_multimodular(&self.coeffs, &other.coeffs),
        })
    }
}

/// Schoolbook product through `i128` when every input fits in `i64`.
/// Returns `None` if an input is too wide or an accumulator would overflow.
fn mul_small(a: &[BigInt], b: &[BigInt]) -> Option<Vec<BigInt>> {
    let a: Vec<i64> = a.iter().map(|c| c.to_i64()).collect::<Option<_>>()?;
    let b: Vec<i64> = b.iter().map(|c| c.to_i64()).collect::<Option<_>>()?;
    let len = a.len();
    let mut out = vec![0i128; len];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b[..len - i].iter().enumerate() {
            let prod = ai as i128 * bj as i128;
            out[i + j] = out[i + j].checked_add(prod)?;
        }
    }
    Some(out.into_iter().map(BigInt::from).collect())
}

/// Reference schoolbook product in `BigInt`.
#[cfg(test)]
fn mul_big(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let len = a.len();
    let mut out = vec![BigInt::zero(); len];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b[..len - i].iter().enumerate() {
            if !bj.is_zero() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

/// Schoolbook product modulo enough 31-bit primes to pin down every output
/// coefficient, then Chinese remaindering into the symmetric range.
///
/// Residue products stay below 2^62, so a `u128` accumulator absorbs a full
/// row without intermediate reduction.
fn mul_multimodular(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let len = a.len();
    let bits = |v: &[BigInt]| v.iter().map(|c| c.bits()).max().unwrap_or(0);
    // |c_n| <= len * max|a| * max|b|; one more bit for the sign
    let needed = bits(a) + bits(b) + (usize::BITS - len.leading_zeros()) as u64 + 2;
    let mut primes = Vec::new();
    let mut modulus = BigInt::one();
    let mut candidate = (1u64 << 31) - 1;
    while modulus.bits() <= needed {
        if arith::is_prime(candidate) {
            primes.push(candidate);
            modulus *= candidate;
        }
        candidate -= 2;
    }

    let residues: Vec<Vec<u64>> = primes
        .par_iter()
        .map(|&p| {
            let big_p = BigInt::from(p);
            let reduce = |v: &[BigInt]| -> Vec<u64> {
                v.iter()
                    .map(|c| c.mod_floor(&big_p).to_u64().expect("residue below p"))
                    .collect()
            };
            let (ra, rb) = (reduce(a), reduce(b));
            let mut out = vec![0u64; len];
            for (n, o) in out.iter_mut().enumerate() {
                let mut acc = 0u128;
                for (x, y) in ra[..=n].iter().zip(rb[..=n].iter().rev()) {
                    acc += *x as u128 * *y as u128;
                }
                *o = (acc % p as u128) as u64;
            }
            out
        })
        .collect();

    // c = sum r_i e_i mod M with e_i = (M / p_i) * ((M / p_i)^-1 mod p_i)
    let basis: Vec<BigInt> = primes
        .iter()
        .map(|&p| {
            let big_p = BigInt::from(p);
            let cofactor = &modulus / &big_p;
            let inverse = cofactor.modpow(&BigInt::from(p - 2), &big_p);
            cofactor * inverse
        })
        .collect();
    let half = &modulus >> 1;
    (0..len)
        .into_par_iter()
        .map(|n| {
            let mut c = BigInt::zero();
            for (r, e) in residues.iter().zip(&basis) {
                c += e * r[n];
            }
            let c = c.mod_floor(&modulus);
            if c > half {
                c - &modulus
            } else {
                c
            }
        })
        .collect()
}

/// Nonzero terms of `prod_{n >= 1} (1 - q^n)^3` below `q^len`, as `(exponent, coefficient)`.
fn jacobi_cube(len: usize) -> Vec<(usize, i64)> {
    let mut terms = Vec::new();
    let mut m = 0usize;
    loop {
        let e = m * (m + 1) / 2;
        if e >= len {
            break;
        }
        let c = (2 * m + 1) as i64;
        terms.push((e, if m.is_multiple_of(2) { c } else { -c }));
        m += 1;
    }
    terms
}

enum Dense {
    Small(Vec<i128>),
    Big(Vec<BigInt>),
}

impl Dense {
    fn mul_sparse(self, sparse: &[(usize, i64)]) -> Dense {
        match self {
            Dense::Small(a) => {
                // Every output coefficient is a signed sum of at most
                // |sparse| products; bound it before trusting i128.
                let weight: u128 = sparse.iter().map(|&(_, c)| c.unsigned_abs() as u128).sum();
                let max = a.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
                match max.checked_mul(weight) {
                    Some(b) if b < (1u128 << 126) => Dense::Small(mul_sparse_i128(&a, sparse)),
                    _ => {
                        let big = a.into_iter().map(BigInt::from).collect::<Vec<_>>();
                        Dense::Big(mul_sparse_big(&big, sparse))
                    }
                }
            }
            Dense::Big(a) => Dense::Big(mul_sparse_big(&a, sparse)),
        }
    }

    fn into_big(self) -> Vec<BigInt> {
        match self {
            Dense::Small(a) => a.into_iter().map(BigInt::from).collect(),
            Dense::Big(a) => a,
        }
    }
}

fn mul_sparse_i128(a: &[i128], sparse: &[(usize, i64)]) -> Vec<i128> {
    let len = a.len();
    let mut out = vec![0i128; len];
    for &(e, c) in sparse {
        let c = c as i128;
        for (o, &x) in out[e..].iter_mut().zip(&a[..len - e]) {
            *o += c * x;
        }
    }
    out
}

fn mul_sparse_big(a: &[BigInt], sparse: &[(usize, i64)]) -> Vec<BigInt> {
    let len = a.len();
    let mut out = vec![BigInt::zero(); len];
    for &(e, c) in sparse {
        for (o, x) in out[e..].iter_mut().zip(&a[..len - e]) {
            *o += x * c;
        }
    }
    out
}

/// The discriminant `q prod_{n >= 1} (1 - q^n)^24` truncated at `q^len`.
pub fn eta_power_24(len: usize) -> Result<TruncatedSeries> {
    if len < 2 {
        return Err(Error::usage("eta_power_24 needs a truncation length of at least 2"));
    }
    let inner_len = len - 1;
    let cube = jacobi_cube(inner_len);
    let mut acc = vec![0i128; inner_len];
    for &(e, c) in &cube {
        acc[e] = c as i128;
    }
    let mut acc = Dense::Small(acc);
    for _ in 1..8 {
        acc = acc.mul_sparse(&cube);
    }
    let mut coeffs = Vec::with_capacity(len);
    coeffs.push(BigInt::zero());
    coeffs.extend(acc.into_big());
    Ok(TruncatedSeries { coeffs })
}

/// `sigma_power(n) = sum_{d | n} d^power` for `1 <= n < len`, index 0 set to 0.
fn divisor_power_sums(len: usize, power: u32) -> Result<Vec<u128>> {
    let mut sigma = vec![0u128; len];
    for d in 1..len {
        let dp = (d as u128)
            .checked_pow(power)
            .ok_or_else(|| Error::usage("Eisenstein truncation length too large"))?;
        let mut m = d;
        while m < len {
            sigma[m] = sigma[m]
                .checked_add(dp)
                .ok_or_else(|| Error::usage("Eisenstein truncation length too large"))?;
            m += d;
        }
    }
    Ok(sigma)
}

/// Normalised Eisenstein series `E_4 = 1 + 240 sum sigma_3(n) q^n` or
/// `E_6 = 1 - 504 sum sigma_5(n) q^n`.
pub fn eisenstein(weight: u32, len: usize) -> Result<TruncatedSeries> {
    let (multiplier, power) = match weight {
        4 => (240i64, 3),
        6 => (-504i64, 5),
        w => {
            return Err(Error::usage(format!(
                "Eisenstein series of weight {w} not supported (only 4 and 6)"
            )))
        }
    };
    if len == 0 {
        return Err(Error::usage("truncation length must be positive"));
    }
    let sigma = divisor_power_sums(len, power)?;
    let mut coeffs = Vec::with_capacity(len);
    coeffs.push(BigInt::one());
    coeffs.extend(sigma[1..].iter().map(|&s| BigInt::from(s) * multiplier));
    Ok(TruncatedSeries { coeffs })
}

/// Exponents `(a, b)` with the weight-`k` eigenform equal to `Delta E4^a E6^b`.
fn eisenstein_exponents(k: i64) -> Option<(u32, u32)> {
    match k {
        12 => Some((0, 0)),
        16 => Some((1, 0)),
        18 => Some((0, 1)),
        20 => Some((2, 0)),
        22 => Some((1, 1)),
        26 => Some((2, 1)),
        _ => None,
    }
}

/// Weights for which the level-1 cusp space is exactly one-dimensional.
pub const LEVEL1_WEIGHTS: [i64; 6] = [12, 16, 18, 20, 22, 26];

/// The unique normalised cusp eigenform of level 1 and weight `k`, truncated at `q^len`.
///
/// Weight 12 uses the sparse discriminant construction; the other weights
/// multiply by Eisenstein series with schoolbook convolution, which is
/// quadratic in `len`.
pub fn level1_eigenform(k: i64, len: usize) -> Result<TruncatedSeries> {
    let (a, b) = eisenstein_exponents(k).ok_or(Error::UnsupportedWeight(k))?;
    let mut f = eta_power_24(len)?;
    if a > 0 {
        let e4 = eisenstein(4, len)?;
        for _ in 0..a {
            f = f.mul(&e4)?;
        }
    }
    if b > 0 {
        f = f.mul(&eisenstein(6, len)?)?;
    }
    Ok(f)
}
