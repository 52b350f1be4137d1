//! Traces of Frobenius for Weierstrass curves by direct point counting.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use rayon::prelude::*;

use crate::arith;
use crate::error::{Error, Result};

/// `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Weierstrass {
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
}

/// Below this the reduced curve is counted over all `(x, y)` pairs.
const BRUTE_FORCE_LIMIT: u64 = 5;

/// Independent difference chains in the character sum.
const LANES: usize = 8;

impl Weierstrass {
    pub fn new(a1: i64, a2: i64, a3: i64, a4: i64, a6: i64) -> Self {
        Weierstrass { a1, a2, a3, a4, a6 }
    }

    fn b_invariants(&self) -> [BigInt; 4] {
        let [a1, a2, a3, a4, a6] = [self.a1, self.a2, self.a3, self.a4, self.a6].map(BigInt::from);
        let b2 = &a1 * &a1 + 4 * &a2;
        let b4 = 2 * &a4 + &a1 * &a3;
        let b6 = &a3 * &a3 + 4 * &a6;
        let b8 = &a1 * &a1 * &a6 + 4 * &a2 * &a6 - &a1 * &a3 * &a4 + &a2 * &a3 * &a3 - &a4 * &a4;
        [b2, b4, b6, b8]
    }

    pub fn discriminant(&self) -> BigInt {
        let [b2, b4, b6, b8] = self.b_invariants();
        -(&b2 * &b2 * &b8) - 8 * &b4 * &b4 * &b4 - 27 * &b6 * &b6 + 9 * &b2 * &b4 * &b6
    }

    /// Number of projective points on the reduction mod `p`, singular point included.
    pub fn count_points(&self, p: u64) -> u64 {
        if p < BRUTE_FORCE_LIMIT {
            self.count_points_brute(p)
        } else {
            (p as i64 + 1 + self.character_sum(p)) as u64
        }
    }

    /// `p + 1 - #E(F_p)`. On a singular reduction this is +1 for a split node,
    /// -1 for a non-split node and 0 for a cusp.
    pub fn trace_of_frobenius(&self, p: u64) -> i64 {
        p as i64 + 1 - self.count_points(p) as i64
    }

    /// Exhaustive count over `F_p x F_p`, plus the point at infinity.
    pub fn count_points_brute(&self, p: u64) -> u64 {
        let r = |v: i64| v.rem_euclid(p as i64) as u64;
        let [a1, a2, a3, a4, a6] = [self.a1, self.a2, self.a3, self.a4, self.a6].map(r);
        let mut count = 1;
        for x in 0..p {
            let rhs = (x * x % p * x + a2 * x % p * x + a4 * x + a6) % p;
            for y in 0..p {
                let lhs = (y * y + a1 * x % p * y + a3 * y) % p;
                if lhs == rhs {
                    count += 1;
                }
            }
        }
        count
    }

    /// `sum_x chi(D(x))` for odd `p`, where completing the square gives
    /// `(2y + a1 x + a3)^2 = D(x) = 4x^3 + b2 x^2 + 2 b4 x + b6`.
    fn character_sum(&self, p: u64) -> i64 {
        debug_assert!(p % 2 == 1 && p < (1 << 31));
        let [b2, b4, b6, _] = self.b_invariants();
        let pb = BigInt::from(p);
        let red = |v: &BigInt| -> u64 {
            let m = v.mod_floor(&pb);
            m.try_into().expect("residue fits in u64")
        };
        let c2 = red(&b2);
        let c1 = red(&(2 * b4));
        let c0 = red(&b6);
        let eval = |x: u64| (((4 * x % p * x % p * x) % p) + c2 * x % p * x + c1 * x + c0) % p;

        let p32 = p as u32;
        let sub = |a: u32, b: u32| if a >= b { a - b } else { a + p32 - b };
        // Branch-free: when a + b < p the wrapped difference is larger.
        let add = |a: u32, b: u32| {
            let s = a.wrapping_add(b);
            s.min(s.wrapping_sub(p32))
        };
        let residues = quadratic_residues(p32);
        let mut qr = 0u64;
        let mut zeros = 0u64;
        let mut tally = |v: u32| {
            qr += residues[v as usize] as u64;
            zeros += (v == 0) as u64;
        };

        // LANES interleaved progressions x = c + LANES j, each stepped by
        // forward differences (the third is constant). Independent lanes keep
        // the dependent add chains from serialising the loop.
        let rounds = p / LANES as u64;
        let mut d = [[0u32; LANES]; 4];
        #[allow(clippy::needless_range_loop)]
        for c in 0..LANES {
            let v: Vec<u32> = (0..4)
                .map(|j| eval((c as u64 + LANES as u64 * j) % p) as u32)
                .collect();
            d[0][c] = v[0];
            d[1][c] = sub(v[1], v[0]);
            d[2][c] = sub(add(v[2], v[0]), add(v[1], v[1]));
            d[3][c] = sub(
                add(v[3], add(v[1], add(v[1], v[1]))),
                add(v[0], add(v[2], add(v[2], v[2]))),
            );
        }
        let [mut d0, mut d1, mut d2, d3] = d;
        for _ in 0..rounds {
            for &v in &d0 {
                tally(v);
            }
            for c in 0..LANES {
                d0[c] = add(d0[c], d1[c]);
                d1[c] = add(d1[c], d2[c]);
                d2[c] = add(d2[c], d3[c]);
            }
        }
        for x in rounds * LANES as u64..p {
            tally(eval(x) as u32);
        }
        let nonresidues = p - zeros - qr;
        qr as i64 - nonresidues as i64
    }

    /// `a(p)` for every prime `p <= bound`.
    ///
    /// Primes of good reduction must not divide `level`; primes dividing `level`
    /// must have multiplicative reduction, giving `a(p) = +-1`.
    pub fn prime_coefficients(&self, level: u64, bound: u64) -> Result<BTreeMap<u64, BigInt>> {
        if bound >= 1 << 31 {
            return Err(Error::usage("point counting is limited to primes below 2^31"));
        }
        let disc = self.discriminant();
        if disc.is_zero() {
            return Err(Error::usage("singular Weierstrass equation"));
        }
        for (p, _) in arith::factorize(level) {
            if (&disc % p).is_zero() {
                continue;
            }
            return Err(Error::InvalidLevel(format!(
                "{p} divides the level but the curve has good reduction there"
            )));
        }
        let primes = arith::primes_up_to(bound);
        let traces: Vec<(u64, i64)> = primes
            .par_iter()
            .map(|&p| (p, self.trace_of_frobenius(p)))
            .collect();
        let mut out = BTreeMap::new();
        for (p, ap) in traces {
            let bad = (&disc % p).is_zero();
            if level.is_multiple_of(p) {
                if ap == 0 {
                    return Err(Error::InvalidLevel(format!(
                        "additive reduction at {p}: a({p}) = 0 is impossible for a squarefree conductor"
                    )));
                }
            } else if bad {
                return Err(Error::InvalidLevel(format!(
                    "the curve has bad reduction at {p}, which does not divide the level {level}"
                )));
            }
            out.insert(p, BigInt::from(ap));
        }
        Ok(out)
    }
}

/// Indicator bytes of the nonzero squares mod `p`; bytes beat a bitset here.
fn quadratic_residues(p: u32) -> Vec<u8> {
    let mut bits = vec![0u8; p as usize];
    let mut s = 0u32;
    for y in 1..=(p - 1) / 2 {
        // (y)^2 = (y - 1)^2 + 2y - 1
        s += 2 * y - 1;
        if s >= p {
            s -= p;
        }
        bits[s as usize] = 1;
    }
    bits
}
