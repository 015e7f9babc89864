//! Counting pairs whose difference lies in a dilate of a multiplicative
//! group: the rank-one count `X_p(B, n)` and the `Γ`-difference count.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{is_prime_u128, PrimeTuple};
use crate::bounds::{log2_upper, rational};
use crate::error::{Error, Result};
use crate::intsets::IntSet;

pub const WITNESS_CAP: usize = 10_000;
/// Smallest `|B|` at which the difference-count bound is asserted.
pub const DEFAULT_FLOOR: usize = 64;

/// `(b_1, b_2, v)` with `b_1 - b_2 = n·p^v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    #[serde(with = "crate::json::big")]
    pub b1: BigInt,
    #[serde(with = "crate::json::big")]
    pub b2: BigInt,
    pub v: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilateCountReport {
    pub count: u64,
    /// `1 + 4|B| log2|B|` with the logarithm rounded up.
    #[serde(with = "crate::json::frac")]
    pub bound: BigRational,
    #[serde(with = "crate::json::real")]
    pub bound_real: f64,
    /// `count ≤ 1 + 4|B| log2|B|`, decided exactly.
    pub ok: bool,
    pub witnesses: Vec<Witness>,
    pub truncated: bool,
}

/// `v` with `m = p^v`, if `m` is a power of `p`.
fn power_of(mut m: BigInt, p: &BigInt) -> Option<u32> {
    let mut v = 0;
    while !m.is_one() {
        let (q, r) = m.div_rem(p);
        if !r.is_zero() {
            return None;
        }
        m = q;
        v += 1;
    }
    Some(v)
}

fn power_of_u128(mut m: u128, p: u128) -> Option<u32> {
    let mut v = 0;
    while m != 1 {
        if m % p != 0 {
            return None;
        }
        m /= p;
        v += 1;
    }
    Some(v)
}

/// `2^{c-1} ≤ b^{4b}`, i.e. `c ≤ 1 + 4b log2 b`.
fn rank_one_holds(count: u64, b: u64) -> bool {
    if count <= 1 {
        return true;
    }
    let lhs_bits = count - 1;
    let floor_log = 63 - b.leading_zeros() as u64;
    if lhs_bits <= 4 * b * floor_log {
        return true;
    }
    if lhs_bits > 4 * b * (floor_log + 1) {
        return false;
    }
    let rhs = num_traits::pow(BigUint::from(b), (4 * b) as usize);
    (BigUint::one() << lhs_bits) <= rhs
}

/// `X_p(B, n) = {(b_1, b_2) ∈ B × B : b_1 - b_2 ∈ n·{1, p, p^2, ...}}`.
///
/// The count never exceeds `1 + 4|B| log2|B|`.
pub fn xp_count(b: &IntSet, p: u128, n: &BigInt) -> Result<DilateCountReport> {
    if b.len() < 2 {
        return Err(Error::BadInput("need at least two elements".into()));
    }
    if n.is_zero() {
        return Err(Error::BadInput("n must be nonzero".into()));
    }
    if b.iter().any(|x| !x.is_positive()) {
        return Err(Error::BadInput("elements must be positive".into()));
    }
    if !is_prime_u128(p) {
        return Err(Error::NotPrime(p.to_string()));
    }
    let elems = b.as_slice();
    let small: Option<(Vec<i128>, i128)> = elems
        .iter()
        .map(|x| x.to_i64().map(i128::from))
        .collect::<Option<Vec<_>>>()
        .zip(n.to_i64().map(i128::from));
    let pb = BigInt::from(p);
    let rows: Vec<Vec<Witness>> = (0..elems.len())
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for j in 0..elems.len() {
                if i == j {
                    continue;
                }
                let v = match &small {
                    Some((xs, nn)) => {
                        let d = xs[i] - xs[j];
                        if d % nn != 0 || d / nn <= 0 {
                            None
                        } else {
                            power_of_u128((d / nn) as u128, p)
                        }
                    }
                    None => {
                        let (q, r) = (&elems[i] - &elems[j]).div_rem(n);
                        if !r.is_zero() || !q.is_positive() {
                            None
                        } else {
                            power_of(q, &pb)
                        }
                    }
                };
                if let Some(v) = v {
                    row.push(Witness { b1: elems[i].clone(), b2: elems[j].clone(), v });
                }
            }
            row
        })
        .collect();
    let count: u64 = rows.iter().map(|r| r.len() as u64).sum();
    let truncated = count as usize > WITNESS_CAP;
    let witnesses: Vec<Witness> = rows.into_iter().flatten().take(WITNESS_CAP).collect();
    let size = b.len() as u64;
    let bound = rational(1) + rational(4 * size) * log2_upper(&BigUint::from(size));
    Ok(DilateCountReport {
        count,
        bound_real: 1.0 + 4.0 * size as f64 * (size as f64).log2(),
        bound,
        ok: rank_one_holds(count, size),
        witnesses,
        truncated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaPairReport {
    pub count: u64,
    /// `|B| exp((ln|B|)^{1-ε})`, natural logarithm.
    #[serde(with = "crate::json::real")]
    pub bound: f64,
    #[serde(with = "crate::json::real")]
    pub ratio: f64,
    /// `r ≤ (ln|B|)^{1-6ε}`.
    pub precond_ok: bool,
    pub floor: usize,
    pub within_bound: bool,
    /// `Some(within_bound)` only when the hypotheses hold and `|B| ≥ floor`.
    pub ok: Option<bool>,
}

/// Ordered pairs with `(b_1 - b_2)/u ∈ ±⟨P⟩`.
pub fn gamma_pair_count(
    b: &IntSet,
    primes: &PrimeTuple,
    u: &BigRational,
    eps: f64,
    floor: usize,
) -> Result<GammaPairReport> {
    if b.len() < 2 {
        return Err(Error::BadInput("need at least two elements".into()));
    }
    if u.is_zero() {
        return Err(Error::BadInput("u must be nonzero".into()));
    }
    if !(eps > 0.0 && eps < 1.0 / 6.0) {
        return Err(Error::BadInput(format!("eps = {eps} must lie in (0, 1/6)")));
    }
    // (d·den)/num is a signed P-unit iff the P-free parts of |d|·den and |num| agree
    let den = u.denom().magnitude().clone();
    let target = primes.strip(u.numer().magnitude());
    let elems = b.as_slice();
    let small: Option<(Vec<i128>, u128, u128)> = elems
        .iter()
        .map(|x| x.to_i64().map(i128::from))
        .collect::<Option<Vec<_>>>()
        .zip(den.to_u64().map(u128::from))
        .zip(target.to_u128())
        .map(|((xs, d), t)| (xs, d, t));
    let strip_u128 = |mut m: u128| {
        for &p in primes.as_slice() {
            while m % p == 0 {
                m /= p;
            }
        }
        m
    };
    let count: u64 = (0..elems.len())
        .into_par_iter()
        .map(|i| {
            (0..elems.len())
                .filter(|&j| j != i)
                .filter(|&j| match &small {
                    Some((xs, d, t)) => match (xs[i] - xs[j]).unsigned_abs().checked_mul(*d) {
                        Some(m) => strip_u128(m) == *t,
                        None => primes.strip(&(BigUint::from((xs[i] - xs[j]).unsigned_abs()) * &den)) == target,
                    },
                    None => primes.strip(&((&elems[i] - &elems[j]).magnitude() * &den)) == target,
                })
                .count() as u64
        })
        .sum();
    let n = b.len() as f64;
    let ln = n.ln();
    let bound = n * ln.powf(1.0 - eps).exp();
    let precond_ok = primes.len() as f64 <= ln.powf(1.0 - 6.0 * eps);
    let within_bound = (count as f64) <= bound;
    Ok(GammaPairReport {
        count,
        bound,
        ratio: count as f64 / bound,
        precond_ok,
        floor,
        within_bound,
        ok: (precond_ok && b.len() >= floor).then_some(within_bound),
    })
}
