//! Positive density of both eigenvalue signs through B-free numbers.
//!
//! The exclusion set is
//! `B = {p : a(p) = 0} u {p : p | N} u {p'} u {p^2 : p not dividing p'N, a(p) != 0}`
//! where `p'` is the least prime off the level with `a(p') < 0`. Integers
//! divisible by no element of `B` are squarefree, coprime to `p'N` and have
//! nonzero eigenvalue; multiplying such an integer by `p'` flips its sign.
//! Counting both the B-free integers of each sign and their `p'`-multiples
//! bounds each of `N^+(x)`, `N^-(x)` below by `|A n [1, x/p']|`.

use std::cmp::Ordering;
use std::io::Write;

use num_integer::Integer;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith;
use crate::error::{Error, Result};
use crate::forms::EigenForm;

/// Why an element belongs to the exclusion set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ZeroEigenvalue,
    LevelPrime,
    LeastNegativePrime,
    SquaredPrime,
    /// Supplied directly by the caller.
    Given,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BElement {
    pub value: u64,
    pub provenance: Provenance,
}

/// Pairwise coprime exclusion set, sorted increasingly.
#[derive(Clone, Debug, Serialize)]
pub struct BSet {
    elements: Vec<BElement>,
    /// Prime search limit `P` when built from a form; `None` for a bare set.
    prime_limit: Option<u64>,
}

impl BSet {
    /// An explicit exclusion set. Elements must exceed 1 and be pairwise coprime.
    pub fn from_elements(values: &[u64]) -> Result<BSet> {
        let mut values = values.to_vec();
        values.sort_unstable();
        values.dedup();
        if let Some(&v) = values.iter().find(|&&v| v < 2) {
            return Err(Error::usage(format!("exclusion set elements must exceed 1, got {v}")));
        }
        for (i, &a) in values.iter().enumerate() {
            for &b in &values[i + 1..] {
                if a.gcd(&b) != 1 {
                    return Err(Error::usage(format!("elements {a} and {b} are not coprime")));
                }
            }
        }
        Ok(BSet {
            elements: values
                .into_iter()
                .map(|value| BElement {
                    value,
                    provenance: Provenance::Given,
                })
                .collect(),
            prime_limit: None,
        })
    }

    pub fn elements(&self) -> &[BElement] {
        &self.elements
    }

    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        self.elements.iter().map(|e| e.value)
    }

    pub fn contains(&self, b: u64) -> bool {
        self.elements.binary_search_by_key(&b, |e| e.value).is_ok()
    }

    pub fn prime_limit(&self) -> Option<u64> {
        self.prime_limit
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    /// Sum of `1/b` over the stored elements.
    pub fn reciprocal_sum(&self) -> f64 {
        self.elements.iter().map(|e| 1.0 / e.value as f64).sum()
    }

    /// `true` iff some element divides `n` (direct trial division).
    pub fn divides(&self, n: u64) -> bool {
        self.elements.iter().any(|e| n.is_multiple_of(e.value))
    }

    /// Density of the B-free integers: `prod (1 - 1/b)` over the stored elements,
    /// times `prod_{p > P, p not dividing p'N} (1 - p^-2)` when built from a form.
    pub fn density_product(&self) -> f64 {
        let stored: f64 = self
            .elements
            .iter()
            .map(|e| 1.0 - 1.0 / e.value as f64)
            .product();
        let Some(limit) = self.prime_limit else {
            return stored;
        };
        // prod_p (1 - p^-2) = 6 / pi^2; divide out the primes already handled.
        let head: f64 = arith::primes_up_to(limit)
            .into_iter()
            .map(|p| 1.0 - 1.0 / (p as f64 * p as f64))
            .product();
        let mut tail = 6.0 / (std::f64::consts::PI * std::f64::consts::PI) / head;
        for e in &self.elements {
            if e.value > limit
                && matches!(
                    e.provenance,
                    Provenance::LevelPrime | Provenance::LeastNegativePrime | Provenance::ZeroEigenvalue
                )
            {
                let p = e.value as f64;
                tail /= 1.0 - 1.0 / (p * p);
            }
        }
        stored * tail
    }
}

/// Default prime search limit for sieving up to `limit`: every `p^2 <= limit` is covered.
pub fn default_prime_limit(limit: u64) -> u64 {
    limit.isqrt().max(2)
}

/// The exclusion set of `f`. Squared primes stop at `prime_limit`; zero-eigenvalue
/// primes are collected over the whole coefficient table.
pub fn build_bset(f: &EigenForm, prime_limit: u64) -> Result<BSet> {
    if prime_limit > f.bound() {
        return Err(Error::usage(format!(
            "prime limit {prime_limit} exceeds the coefficient bound {}",
            f.bound()
        )));
    }
    let least_negative = f.least_negative_prime()?;
    let level = f.level();
    let mut elements = Vec::new();
    for p in f.level_primes() {
        elements.push(BElement {
            value: p,
            provenance: Provenance::LevelPrime,
        });
    }
    elements.push(BElement {
        value: least_negative,
        provenance: Provenance::LeastNegativePrime,
    });
    // Zero-eigenvalue primes are collected over the whole table, not just up
    // to P: a B-free integer must never have a zero eigenvalue.
    for p in arith::primes_up_to(f.bound()) {
        if level.is_multiple_of(p) || p == least_negative {
            continue;
        }
        if f.a(p)?.is_zero() {
            elements.push(BElement {
                value: p,
                provenance: Provenance::ZeroEigenvalue,
            });
        } else if p <= prime_limit {
            elements.push(BElement {
                value: p * p,
                provenance: Provenance::SquaredPrime,
            });
        }
    }
    elements.sort_unstable_by_key(|e| e.value);
    Ok(BSet {
        elements,
        prime_limit: Some(prime_limit),
    })
}

/// Default number of integers per sieve segment.
pub const DEFAULT_BLOCK: u64 = 1 << 20;

/// Membership bitmap of the B-free integers in `[1, limit]`.
#[derive(Clone, Debug)]
pub struct BFreeSieve {
    limit: u64,
    /// Bit `n` is set iff `n` is B-free; bit 0 is always clear.
    bits: Vec<u64>,
}

impl BFreeSieve {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn contains(&self, n: u64) -> bool {
        n <= self.limit && (self.bits[(n >> 6) as usize] >> (n & 63)) & 1 == 1
    }

    /// `|A n [1, y]|`, with `y` clamped to the sieve limit.
    pub fn count_up_to(&self, y: u64) -> u64 {
        let y = y.min(self.limit);
        let full = (y + 1) / 64;
        let mut count: u64 = self.bits[..full as usize]
            .iter()
            .map(|w| w.count_ones() as u64)
            .sum();
        let rem = (y + 1) % 64;
        if rem > 0 {
            count += (self.bits[full as usize] & ((1u64 << rem) - 1)).count_ones() as u64;
        }
        count
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=self.limit).filter(move |&n| self.contains(n))
    }
}

/// Sieves `[1, limit]` by every element of `bset`.
pub fn sieve_bfree(bset: &BSet, limit: u64) -> BFreeSieve {
    sieve_bfree_blocked(bset, limit, DEFAULT_BLOCK)
}

/// As [`sieve_bfree`] with an explicit segment size (rounded up to a multiple of 64).
pub fn sieve_bfree_blocked(bset: &BSet, limit: u64, block: u64) -> BFreeSieve {
    let block = block.max(64).div_ceil(64) * 64;
    let moduli: Vec<u64> = bset.values().filter(|&b| b <= limit).collect();
    let segments = (limit + 1).div_ceil(block);
    let bits: Vec<u64> = (0..segments)
        .into_par_iter()
        .flat_map_iter(|s| {
            let lo = s * block;
            let hi = (lo + block).min(limit + 1);
            let mut words = vec![!0u64; ((hi - lo) as usize).div_ceil(64)];
            let clear = |words: &mut [u64], n: u64| {
                let i = n - lo;
                words[(i >> 6) as usize] &= !(1 << (i & 63));
            };
            let tail = (hi - lo) % 64;
            if tail != 0 {
                *words.last_mut().unwrap() &= (1u64 << tail) - 1;
            }
            if lo == 0 {
                clear(&mut words, 0);
            }
            for &b in &moduli {
                let mut m = lo.div_ceil(b).max(1) * b;
                while m < hi {
                    clear(&mut words, m);
                    m += b;
                }
            }
            words
        })
        .collect();
    BFreeSieve { limit, bits }
}

/// B-free integers split by the sign of their eigenvalue.
#[derive(Clone, Debug, Default)]
pub struct SignPartition {
    pub limit: u64,
    pub plus: Vec<u64>,
    pub minus: Vec<u64>,
}

impl SignPartition {
    pub fn count_plus(&self, x: u64) -> u64 {
        self.plus.partition_point(|&n| n <= x) as u64
    }

    pub fn count_minus(&self, x: u64) -> u64 {
        self.minus.partition_point(|&n| n <= x) as u64
    }
}

/// Classifies each B-free `n` by the exact sign of `a(n)`; a zero is an invariant violation.
pub fn partition_signs(f: &EigenForm, sieve: &BFreeSieve) -> Result<SignPartition> {
    if sieve.limit() > f.bound() {
        return Err(Error::usage(format!(
            "sieve limit {} exceeds coefficient bound {}",
            sieve.limit(),
            f.bound()
        )));
    }
    let mut out = SignPartition {
        limit: sieve.limit(),
        ..Default::default()
    };
    for n in sieve.iter() {
        match f.sign(n)? {
            Ordering::Greater => out.plus.push(n),
            Ordering::Less => out.minus.push(n),
            Ordering::Equal => {
                return Err(Error::invariant(n, "B-free integer with zero eigenvalue"))
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SignCounts {
    pub plus: u64,
    pub minus: u64,
}

/// `|N^+ n [1, x]|` and `|N^- n [1, x]|` for `N^+- = A^+- u p' A^-+`.
pub fn lower_bound_count(f: &EigenForm, partition: &SignPartition, x: u64) -> Result<SignCounts> {
    if x > partition.limit {
        return Err(Error::usage(format!(
            "x = {x} exceeds the partition limit {}",
            partition.limit
        )));
    }
    let p = f.least_negative_prime()?;
    let scaled = x / p;
    Ok(SignCounts {
        plus: partition.count_plus(x) + partition.count_minus(scaled),
        minus: partition.count_minus(x) + partition.count_plus(scaled),
    })
}

/// Exact counts of `n <= x` coprime to the level with `a(n) > 0` and `a(n) < 0`.
pub fn direct_sign_count(f: &EigenForm, x: u64) -> Result<SignCounts> {
    if x > f.bound() {
        return Err(Error::OutOfRange { n: x, bound: f.bound() });
    }
    let mut counts = SignCounts::default();
    for n in 1..=x {
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

/// CSV rows `n,bfree,sign` for `n <= sieve.limit()`, sign one of `+`, `-`, `0`.
pub fn write_membership_csv<W: Write>(f: &EigenForm, sieve: &BFreeSieve, mut out: W) -> Result<()> {
    writeln!(out, "n,bfree,sign")?;
    for n in 1..=sieve.limit() {
        let sign = match f.sign(n)? {
            Ordering::Greater => '+',
            Ordering::Less => '-',
            Ordering::Equal => '0',
        };
        writeln!(out, "{n},{},{sign}", sieve.contains(n) as u8)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{FormSource, Weierstrass};
    use num_bigint::BigInt;
    use std::f64::consts::PI;

    fn delta(bound: u64) -> EigenForm {
        EigenForm::from_level1(12, bound).unwrap()
    }

    #[test]
    fn bset_of_discriminant() {
        let f = delta(200);
        let b = build_bset(&f, 100).unwrap();
        let mut expected = vec![2u64];
        expected.extend(arith::primes_up_to(100).into_iter().skip(1).map(|p| p * p));
        expected.sort_unstable();
        assert_eq!(b.values().collect::<Vec<_>>(), expected);
        assert_eq!(b.elements()[0].provenance, Provenance::LeastNegativePrime);
        assert!(build_bset(&f, 201).is_err());
    }

    #[test]
    fn bset_of_level_11() {
        let e = Weierstrass::new(0, -1, 1, -10, -20);
        let f = EigenForm::from_elliptic_curve(&e, 11, 100).unwrap();
        let b = build_bset(&f, 50).unwrap();
        assert!(b.contains(11));
        assert!(b.contains(2));
        assert!(!b.contains(121));
        assert!(b.contains(9));
        let prov = |v| b.elements().iter().find(|e| e.value == v).unwrap().provenance;
        assert_eq!(prov(11), Provenance::LevelPrime);
        assert_eq!(prov(2), Provenance::LeastNegativePrime);
    }

    #[test]
    fn zero_eigenvalue_prime_enters_to_first_power() {
        // Weight-2 level-1 table with a(2) = -1, a(5) = 0 and a(p) = 1 otherwise.
        let ap = |p: u64| match p {
            2 => -1i64,
            5 => 0,
            _ => 1,
        };
        let prime_power = |p: u64, e: u32| {
            let (mut prev, mut cur) = (1i64, ap(p));
            for _ in 1..e {
                (prev, cur) = (cur, ap(p) * cur - p as i64 * prev);
            }
            if e == 0 { 1 } else { cur }
        };
        let table: Vec<BigInt> = (1..=30u64)
            .map(|n| BigInt::from(arith::factorize(n).iter().map(|&(p, e)| prime_power(p, e)).product::<i64>()))
            .collect();
        let f = EigenForm::from_table(2, 1, table, FormSource::Table).unwrap();
        let b = build_bset(&f, 30).unwrap();
        assert!(b.contains(5));
        assert!(!b.contains(25));
        let el = b.elements().iter().find(|e| e.value == 5).unwrap();
        assert_eq!(el.provenance, Provenance::ZeroEigenvalue);
    }

    #[test]
    fn explicit_sets() {
        let b = BSet::from_elements(&[2, 9, 25, 49]).unwrap();
        let s = sieve_bfree(&b, 10);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![1, 3, 5, 7]);
        let odd = sieve_bfree(&BSet::from_elements(&[2]).unwrap(), 10);
        assert_eq!(odd.iter().collect::<Vec<_>>(), vec![1, 3, 5, 7, 9]);
        assert!(BSet::from_elements(&[4, 6]).is_err());
        assert!(BSet::from_elements(&[1]).is_err());
    }

    #[test]
    fn density_products() {
        assert_eq!(BSet::from_elements(&[2]).unwrap().density_product(), 0.5);
        assert_eq!(BSet::from_elements(&[]).unwrap().density_product(), 1.0);
        let b = build_bset(&delta(1000), 1000).unwrap();
        assert!((b.density_product() - 4.0 / (PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn sieve_matches_trial_division() {
        let f = delta(10_000);
        let b = build_bset(&f, 1000).unwrap();
        for block in [64, 1000, DEFAULT_BLOCK] {
            let s = sieve_bfree_blocked(&b, 10_000, block);
            for n in 1..=10_000 {
                assert_eq!(s.contains(n), !b.divides(n), "n = {n}, block = {block}");
            }
            assert_eq!(s.count_up_to(10_000), s.iter().count() as u64);
            assert_eq!(s.count_up_to(63), (1..=63).filter(|&n| !b.divides(n)).count() as u64);
        }
    }

    #[test]
    fn members_are_squarefree_and_coprime() {
        let e = Weierstrass::new(0, -1, 1, -10, -20);
        let f = EigenForm::from_elliptic_curve(&e, 11, 5000).unwrap();
        let b = build_bset(&f, 70).unwrap();
        let s = sieve_bfree(&b, 5000);
        let p = f.least_negative_prime().unwrap();
        for n in s.iter() {
            assert!(arith::is_squarefree(n), "{n}");
            assert_eq!(n.gcd(&(p * 11)), 1);
            assert!(!f.a(n).unwrap().is_zero());
        }
        // 199 and 569 lie above P but have a(p) = 0
        assert!(b.contains(199) && b.contains(569));
    }

    #[test]
    fn partition_of_discriminant() {
        let f = delta(100);
        let s = sieve_bfree(&build_bset(&f, 10).unwrap(), 100);
        let part = partition_signs(&f, &s).unwrap();
        assert!(part.plus.contains(&1));
        assert!(part.plus.contains(&3));
        assert!(part.plus.contains(&5));
        assert!(part.minus.contains(&7));
        assert_eq!(part.plus.len() + part.minus.len(), s.iter().count());
    }

    #[test]
    fn zero_inside_a_is_reported() {
        // a(3) = 0 but an artificial set that does not exclude 3
        let table: Vec<BigInt> = [1, -1, 0].iter().map(|&v| BigInt::from(v)).collect();
        let f = EigenForm::from_table(2, 1, table, FormSource::Table).unwrap();
        let s = sieve_bfree(&BSet::from_elements(&[2]).unwrap(), 3);
        assert!(matches!(
            partition_signs(&f, &s),
            Err(Error::Invariant { n: 3, .. })
        ));
    }

    #[test]
    fn lower_bounds_dominated_by_direct_counts() {
        let f = delta(5000);
        let s = sieve_bfree(&build_bset(&f, 71).unwrap(), 5000);
        let part = partition_signs(&f, &s).unwrap();
        for x in [1, 2, 10, 100, 999, 1000, 5000] {
            let lb = lower_bound_count(&f, &part, x).unwrap();
            let floor = s.count_up_to(x / 2);
            assert!(lb.plus >= floor && lb.minus >= floor, "x = {x}");
            let direct = direct_sign_count(&f, x).unwrap();
            assert!(direct.plus >= lb.plus && direct.minus >= lb.minus, "x = {x}");
        }
        assert!(lower_bound_count(&f, &part, 5001).is_err());
    }

    #[test]
    fn direct_counts() {
        let f = delta(10);
        assert_eq!(direct_sign_count(&f, 10).unwrap(), SignCounts { plus: 4, minus: 6 });
        assert_eq!(direct_sign_count(&f, 1).unwrap(), SignCounts { plus: 1, minus: 0 });
        let e = Weierstrass::new(0, -1, 1, -10, -20);
        let g = EigenForm::from_elliptic_curve(&e, 11, 30).unwrap();
        let c10 = direct_sign_count(&g, 10).unwrap();
        let c11 = direct_sign_count(&g, 11).unwrap();
        assert_eq!(c10, c11);
    }

    #[test]
    fn csv_rows() {
        let f = delta(10);
        let s = sieve_bfree(&BSet::from_elements(&[2, 9]).unwrap(), 4);
        let mut out = Vec::new();
        write_membership_csv(&f, &s, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "n,bfree,sign\n1,1,+\n2,0,-\n3,1,+\n4,0,-\n");
    }
}
