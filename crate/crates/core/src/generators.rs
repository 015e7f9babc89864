//! Deterministic constructions of the standard example families.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{self, is_prime_u128};
use crate::error::{Error, Result};
use crate::intsets::{self, IntSet};

/// Largest `N` accepted by [`primes_upto`].
pub const SIEVE_LIMIT: u64 = 1 << 28;
/// Parameter spaces up to this size may be enumerated outright.
const ENUMERATE_LIMIT: u128 = 1 << 22;

fn bad(msg: impl Into<String>) -> Error {
    Error::BadParameter(msg.into())
}

/// `{1, ..., N}`.
pub fn interval(n: u64) -> Result<IntSet> {
    if n == 0 {
        return Err(bad("interval length must be positive"));
    }
    Ok((1..=n).map(BigInt::from).collect())
}

/// `{a + d·i : 1 ≤ i ≤ N}`.
pub fn arith_prog(a: &BigInt, d: &BigInt, n: u64) -> Result<IntSet> {
    if d.is_zero() {
        return Err(bad("common difference must be nonzero"));
    }
    if n == 0 {
        return Err(bad("progression length must be positive"));
    }
    Ok((1..=n).map(|i| a + d * BigInt::from(i)).collect())
}

/// `{c·r^m : 0 ≤ m < M}`.
pub fn geom_prog(c: &BigInt, r: &BigInt, m: u32) -> Result<IntSet> {
    if c.is_zero() {
        return Err(bad("leading term must be nonzero"));
    }
    if r < &BigInt::from(2) {
        return Err(bad("ratio must be at least 2"));
    }
    if m == 0 {
        return Err(bad("progression length must be positive"));
    }
    let mut out = Vec::with_capacity(m as usize);
    let mut x = c.clone();
    for _ in 0..m {
        out.push(x.clone());
        x *= r;
    }
    Ok(out.into_iter().collect())
}

/// The primes `≤ N`.
pub fn primes_upto(n: u64) -> Result<IntSet> {
    if n == 0 {
        return Err(bad("bound must be positive"));
    }
    if n > SIEVE_LIMIT {
        return Err(bad(format!("sieve bound {n} exceeds {SIEVE_LIMIT}")));
    }
    Ok(IntSet::from_sorted_i128(sieve(n).into_iter().map(i128::from).collect()))
}

fn sieve(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i.saturating_mul(i);
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// `{p, p^2, ..., p^N}`.
pub fn prime_powers(p: u128, n: u32) -> Result<IntSet> {
    if !is_prime_u128(p) {
        return Err(Error::NotPrime(p.to_string()));
    }
    if n == 0 {
        return Err(bad("number of powers must be positive"));
    }
    geom_prog(&BigInt::from(p), &BigInt::from(p), n)
}

/// `Γ = {p^m : 0 ≤ m < M}` times `B = {a + d·i : 1 ≤ i ≤ N}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BWParams {
    pub gamma_size: u32,
    #[serde(with = "crate::json::big")]
    pub p: u128,
    #[serde(with = "crate::json::big")]
    pub a: BigInt,
    #[serde(with = "crate::json::big")]
    pub d: BigInt,
    pub base_size: u64,
}

impl BWParams {
    /// `Γ = {1, p, ..., p^{n-1}}` and `B = {1, ..., 2n^2}`.
    pub fn square(n: u32, p: u128) -> Self {
        BWParams {
            gamma_size: n,
            p,
            a: BigInt::zero(),
            d: BigInt::one(),
            base_size: 2 * n as u64 * n as u64,
        }
    }

    pub fn gamma(&self) -> Result<IntSet> {
        geom_prog(&BigInt::one(), &BigInt::from(self.p), self.gamma_size)
    }

    pub fn base(&self) -> Result<IntSet> {
        arith_prog(&self.a, &self.d, self.base_size)
    }

    fn check(&self) -> Result<()> {
        if self.gamma_size == 0 || self.base_size == 0 {
            return Err(bad("M and N must be positive"));
        }
        if !is_prime_u128(self.p) {
            return Err(Error::NotPrime(self.p.to_string()));
        }
        Ok(())
    }
}

/// `Γ·B` with `p` larger than every `|b|`, so that all products are distinct.
pub fn balog_wooley(params: &BWParams) -> Result<IntSet> {
    params.check()?;
    let base = params.base()?;
    cross(params, &base)
}

/// The approximate Balog-Wooley set `Γ·B` with `B` the first `N` primes,
/// so every element has at most two prime factors. `a` and `d` are ignored.
pub fn prime_balog_wooley(params: &BWParams) -> Result<IntSet> {
    params.check()?;
    let n = params.base_size as usize;
    let mut bound = 64u64;
    let primes = loop {
        let ps = sieve(bound);
        if ps.len() >= n {
            break ps;
        }
        if bound > SIEVE_LIMIT / 2 {
            return Err(bad(format!("base of {n} primes exceeds the sieve limit")));
        }
        bound *= 2;
    };
    let base = IntSet::from_sorted_i128(primes[..n].iter().map(|&q| i128::from(q)).collect());
    cross(params, &base)
}

fn cross(params: &BWParams, base: &IntSet) -> Result<IntSet> {
    let p = BigInt::from(params.p);
    if base.contains_zero() {
        return Err(bad("base contains 0"));
    }
    if base.iter().any(|b| b.abs() >= p) {
        return Err(bad(format!("generator {} must exceed every |b|", params.p)));
    }
    let gamma = params.gamma()?;
    let a = intsets::product_set(&gamma, base);
    let expected = gamma.len() * base.len();
    if a.len() != expected {
        return Err(Error::CollisionDetected { expected, got: a.len() });
    }
    Ok(a)
}

/// A Balog-Wooley set whose base has a `fraction` of its elements deleted or
/// moved to fresh values in `[1, p)`.
pub fn perturbed_balog_wooley(params: &BWParams, fraction: f64, seed: u64) -> Result<IntSet> {
    params.check()?;
    if !(0.0..=1.0).contains(&fraction) {
        return Err(bad("perturbation fraction must lie in [0, 1]"));
    }
    let base = params.base()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = base.len();
    let touched = ((fraction * n as f64).round() as usize).min(n);
    let picks = rand::seq::index::sample(&mut rng, n, touched).into_vec();
    let mut elems: BTreeSet<BigInt> = base.iter().cloned().collect();
    let top = params.p.min(i64::MAX as u128) as i64;
    for i in picks {
        let b = &base.as_slice()[i];
        elems.remove(b);
        if rng.gen_bool(0.5) && top > 1 {
            // at most a few retries: the base occupies a small part of [1, p)
            for _ in 0..64 {
                let c = BigInt::from(rng.gen_range(1..top));
                if !elems.contains(&c) && !base.contains(&c) {
                    elems.insert(c);
                    break;
                }
            }
        }
    }
    if elems.is_empty() {
        elems.insert(base.as_slice()[0].clone());
    }
    let perturbed: IntSet = elems.into_iter().collect();
    cross(params, &perturbed)
}

fn binomial(n: u128, k: u128) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// `count` distinct products of at most `k` distinct primes from `pool`,
/// each raised to an exponent in `1..=max_exponent`.
pub fn random_k_almost_prime(
    count: usize,
    k: u32,
    pool: &[u128],
    max_exponent: u32,
    seed: u64,
) -> Result<IntSet> {
    if count == 0 || k == 0 || max_exponent == 0 {
        return Err(bad("count, k and max exponent must be positive"));
    }
    let pool: Vec<u128> = pool.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if pool.is_empty() {
        return Err(bad("prime pool is empty"));
    }
    if let Some(&q) = pool.iter().find(|&&q| !is_prime_u128(q)) {
        return Err(Error::NotPrime(q.to_string()));
    }
    let m = pool.len() as u128;
    let top = (k as u128).min(m);
    let e = max_exponent as u128;
    // |strata[j-1]| = C(m, j) e^j
    let strata: Vec<u128> = (1..=top)
        .map(|j| binomial(m, j).saturating_mul(e.saturating_pow(j as u32)))
        .collect();
    let space = strata.iter().fold(0u128, |a, &s| a.saturating_add(s));
    if (count as u128) > space {
        return Err(Error::PoolExhausted { requested: count, available: space.to_string() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if space <= ENUMERATE_LIMIT && 2 * count as u128 >= space {
        let mut all = Vec::with_capacity(space as usize);
        enumerate(&pool, top as usize, max_exponent, 0, BigInt::one(), 0, &mut all);
        all.sort_unstable();
        let chosen = rand::seq::index::sample(&mut rng, all.len(), count);
        return Ok(chosen.into_iter().map(|i| all[i].clone()).collect());
    }
    let weights: Vec<f64> = strata.iter().map(|&s| s as f64).collect();
    let pick_size = WeightedIndex::new(&weights).map_err(|e| bad(e.to_string()))?;
    let mut out = BTreeSet::new();
    while out.len() < count {
        let j = pick_size.sample(&mut rng) + 1;
        let mut x = BigInt::one();
        for i in rand::seq::index::sample(&mut rng, pool.len(), j) {
            let exp = rng.gen_range(1..=max_exponent);
            x *= num_traits::pow(BigInt::from(pool[i]), exp as usize);
        }
        out.insert(x);
    }
    Ok(out.into_iter().collect())
}

fn enumerate(
    pool: &[u128],
    k: usize,
    max_exponent: u32,
    start: usize,
    acc: BigInt,
    used: usize,
    out: &mut Vec<BigInt>,
) {
    if used > 0 {
        out.push(acc.clone());
    }
    if used == k {
        return;
    }
    for i in start..pool.len() {
        let p = BigInt::from(pool[i]);
        let mut x = acc.clone();
        for _ in 0..max_exponent {
            x *= &p;
            enumerate(pool, k, max_exponent, i + 1, x.clone(), used + 1, out);
        }
    }
}

/// `max_b ω(b)` over a set, used to bound `ω` on generated products.
pub fn max_omega(a: &IntSet) -> Result<u32> {
    a.iter().map(arith::omega).try_fold(0, |m, w| Ok(m.max(w?)))
}
