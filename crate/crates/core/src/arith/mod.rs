//! Exact integer arithmetic: factorization, valuations, `ω`, membership in
//! the multiplicative group `⟨P⟩` generated by a prime tuple, and the
//! S-unit reference bound.

mod factor;

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub use factor::{is_prime_u128, small_primes, TRIAL_LIMIT};

/// A nonzero integer together with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredInt {
    value: BigInt,
    sign: i8,
    factors: Vec<(u128, u32)>,
}

impl FactoredInt {
    pub fn value(&self) -> &BigInt {
        &self.value
    }

    /// `+1` or `-1`.
    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// `(prime, exponent)` pairs, primes strictly increasing.
    pub fn factors(&self) -> &[(u128, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u128> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    pub fn valuation(&self, p: u128) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }

    /// `sign · Π p^e`.
    pub fn reconstruct(&self) -> BigInt {
        let mut acc = BigInt::from(self.sign);
        for &(p, e) in &self.factors {
            acc *= BigInt::from(p).pow(e);
        }
        acc
    }

    /// The factorization with every prime of `primes` removed.
    pub fn without(&self, primes: &[u128]) -> FactoredInt {
        let factors: Vec<_> = self
            .factors
            .iter()
            .copied()
            .filter(|(p, _)| !primes.contains(p))
            .collect();
        let mut out = FactoredInt { value: BigInt::zero(), sign: self.sign, factors };
        out.value = out.reconstruct();
        out
    }
}

/// Configurable factorization front end.
///
/// Inputs up to `bound` in absolute value are always factored completely.
/// Larger inputs succeed only if trial division reduces them to a cofactor
/// that is 1, prime, or itself within the bound.
#[derive(Debug, Clone)]
pub struct Factorizer {
    bound: BigUint,
}

impl Default for Factorizer {
    fn default() -> Self {
        Factorizer { bound: BigUint::one() << 96u32 }
    }
}

impl Factorizer {
    /// Bounds above 2^126 are clamped to the range of the `u128` back end.
    pub fn with_bound(bound: BigUint) -> Self {
        let cap = BigUint::one() << 126u32;
        Factorizer { bound: bound.min(cap) }
    }

    pub fn bound(&self) -> &BigUint {
        &self.bound
    }

    pub fn factorize(&self, n: &BigInt) -> Result<FactoredInt> {
        if n.is_zero() {
            return Err(Error::ZeroInput);
        }
        let sign = if n.sign() == Sign::Minus { -1 } else { 1 };
        let mut factors = Vec::new();
        let mut m = n.magnitude().clone();

        // Trial division in big-integer arithmetic until the cofactor fits u128.
        if m.to_u128().is_none() {
            for &p in small_primes() {
                let q = BigUint::from(p);
                if &q * &q > m {
                    break;
                }
                let mut e = 0;
                loop {
                    let (quot, rem) = m.div_rem(&q);
                    if !rem.is_zero() {
                        break;
                    }
                    m = quot;
                    e += 1;
                }
                if e > 0 {
                    factor::push_factor(&mut factors, p as u128, e);
                    if m.to_u128().is_some() {
                        break;
                    }
                }
            }
        }
        let Some(rest) = m.to_u128() else {
            return Err(Error::FactorizationTooHard(n.to_string()));
        };
        let rest = factor::trial_divide(rest, &mut factors);
        if factor::trial_complete(rest) {
            if rest > 1 {
                factor::push_factor(&mut factors, rest, 1);
            }
        } else {
            let within = BigUint::from(rest) <= self.bound;
            let finished = if within && rest < factor::MONTGOMERY_LIMIT {
                factor::split_large(rest, &mut factors)
            } else if rest < factor::MONTGOMERY_LIMIT && is_prime_u128(rest) {
                factor::push_factor(&mut factors, rest, 1);
                true
            } else {
                false
            };
            if !finished {
                return Err(Error::FactorizationTooHard(n.to_string()));
            }
        }
        factors.sort_unstable();
        Ok(FactoredInt { value: n.clone(), sign, factors })
    }
}

/// Factors `n` with the default bound of 2^96.
pub fn factorize(n: &BigInt) -> Result<FactoredInt> {
    Factorizer::default().factorize(n)
}

/// Number of distinct primes dividing `n`.
pub fn omega(n: &BigInt) -> Result<u32> {
    Ok(factorize(n)?.omega())
}

pub fn is_prime(p: &BigInt) -> bool {
    match p.to_u128() {
        Some(v) if v < factor::MONTGOMERY_LIMIT => is_prime_u128(v),
        _ => false,
    }
}

fn require_prime(p: u128) -> Result<()> {
    if p >= factor::MONTGOMERY_LIMIT || !is_prime_u128(p) {
        return Err(Error::NotPrime(p.to_string()));
    }
    Ok(())
}

/// The `p`-adic valuation `v_p(n)`, computed by repeated exact division.
pub fn valuation(n: &BigInt, p: u128) -> Result<u32> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    require_prime(p)?;
    if let Some(mut m) = n.magnitude().to_u128() {
        let mut v = 0;
        while m % p == 0 {
            m /= p;
            v += 1;
        }
        return Ok(v);
    }
    let q = BigUint::from(p);
    let mut m = n.magnitude().clone();
    let mut v = 0;
    loop {
        let (quot, rem) = m.div_rem(&q);
        if !rem.is_zero() {
            return Ok(v);
        }
        m = quot;
        v += 1;
    }
}

/// An ordered tuple of distinct primes `(p_1, ..., p_r)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PrimeTuple(Vec<u128>);

impl PrimeTuple {
    /// Primes must already be strictly increasing.
    pub fn new(primes: Vec<u128>) -> Result<Self> {
        if let Some(w) = primes.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::BadParameter(format!(
                "prime tuple must be strictly increasing, found {} before {}",
                w[0], w[1]
            )));
        }
        for &p in &primes {
            require_prime(p)?;
        }
        Ok(PrimeTuple(primes))
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut primes: Vec<u128>) -> Result<Self> {
        primes.sort_unstable();
        primes.dedup();
        Self::new(primes)
    }

    pub fn empty() -> Self {
        PrimeTuple(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u128] {
        &self.0
    }

    pub fn contains(&self, p: u128) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    /// Divides every prime of the tuple out of `n`.
    pub fn strip(&self, n: &BigUint) -> BigUint {
        if let Some(mut m) = n.to_u128() {
            for &p in &self.0 {
                while m != 0 && m % p == 0 {
                    m /= p;
                }
            }
            return BigUint::from(m);
        }
        let mut m = n.clone();
        for &p in &self.0 {
            let q = BigUint::from(p);
            loop {
                let (quot, rem) = m.div_rem(&q);
                if !rem.is_zero() || m.is_zero() {
                    break;
                }
                m = quot;
            }
        }
        m
    }

    /// `(v_{p_1}(n), ..., v_{p_r}(n))` together with the part of `n` coprime
    /// to the tuple (sign preserved).
    pub fn split(&self, n: &BigInt) -> Result<(Vec<u32>, BigInt)> {
        if n.is_zero() {
            return Err(Error::ZeroElement);
        }
        let mut exps = Vec::with_capacity(self.0.len());
        if let Some(mut m) = n.to_i128() {
            for &p in &self.0 {
                let mut e = 0;
                // p < 2^127 so the cast is lossless
                let q = p as i128;
                while m % q == 0 {
                    m /= q;
                    e += 1;
                }
                exps.push(e);
            }
            return Ok((exps, BigInt::from(m)));
        }
        let mut m = n.clone();
        for &p in &self.0 {
            let q = BigInt::from(p);
            let mut e = 0;
            loop {
                let (quot, rem) = m.div_rem(&q);
                if !rem.is_zero() {
                    break;
                }
                m = quot;
                e += 1;
            }
            exps.push(e);
        }
        Ok((exps, m))
    }
}

impl fmt::Display for PrimeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Which object generated by a prime tuple a membership test refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupMode {
    /// `⟨P⟩`: positive rationals whose numerator and denominator are P-smooth.
    Group,
    /// `⟨P⟩₊`: positive P-smooth integers.
    Semigroup,
    /// `±⟨P⟩`: `⟨P⟩` with `-1` adjoined.
    SignedGroup,
}

pub fn group_membership(x: &BigRational, primes: &PrimeTuple, mode: GroupMode) -> Result<bool> {
    if x.is_zero() {
        return Err(Error::ZeroInput);
    }
    let positive = x.is_positive();
    let smooth = |n: &BigInt| primes.strip(n.magnitude()).is_one();
    let ok = match mode {
        GroupMode::Group => positive && smooth(x.numer()) && smooth(x.denom()),
        GroupMode::Semigroup => positive && x.is_integer() && smooth(x.numer()),
        GroupMode::SignedGroup => smooth(x.numer()) && smooth(x.denom()),
    };
    Ok(ok)
}

/// `p^v = p_1^{v_1} ··· p_r^{v_r}` for an integer exponent vector.
pub fn monomial(primes: &PrimeTuple, exponents: &[i64]) -> Result<BigRational> {
    if primes.len() != exponents.len() {
        return Err(Error::DimensionMismatch { expected: primes.len(), got: exponents.len() });
    }
    let mut numer = BigInt::one();
    let mut denom = BigInt::one();
    for (&p, &e) in primes.as_slice().iter().zip(exponents) {
        let power = BigInt::from(p).pow(e.unsigned_abs());
        if e >= 0 {
            numer *= power;
        } else {
            denom *= power;
        }
    }
    Ok(BigRational::new(numer, denom))
}

/// `(8l)^{4l^2 + lr + 1}`, the S-unit equation solution-count bound.
pub fn sunit_reference_bound(l: u32, r: u32) -> Result<BigUint> {
    if l == 0 {
        return Err(Error::BadParameter("l must be at least 1".into()));
    }
    let (l64, r64) = (l as u64, r as u64);
    let exponent = 4 * l64 * l64 + l64 * r64 + 1;
    Ok(Pow::pow(BigUint::from(8 * l64), exponent))
}
