//! Rational approximations used by the exact bound checks.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

const GRID: i64 = 1_000_000_000;

/// An upper approximation of `log2(n)` as an exact rational.
///
/// Exact for powers of two; otherwise the floating-point value is pushed up
/// by `1e-9` and rounded up to a multiple of `1e-9`.
pub fn log2_upper(n: &BigUint) -> BigRational {
    assert!(!n.is_zero(), "log2 of zero");
    let bits = n.bits();
    if n.count_ones() == 1 {
        return BigRational::from_integer(BigInt::from(bits - 1));
    }
    let approx = log2_f64(n);
    let scaled = ((approx + 1e-9) * GRID as f64).ceil() as i64;
    BigRational::new(BigInt::from(scaled), BigInt::from(GRID))
}

pub fn log2_f64(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().unwrap_or(f64::INFINITY).log2()
    } else {
        let shift = bits - 64;
        (n >> shift).to_f64().unwrap_or(f64::INFINITY).log2() + shift as f64
    }
}

pub fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn rational(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
