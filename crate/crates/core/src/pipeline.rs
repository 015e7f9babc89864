//! End-to-end sum-product experiment on one set.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::bounds::{rational, to_f64};
use crate::error::{Error, Result};
use crate::intsets::{self, IntSet};
use crate::structure::{self, StructureReport};

pub const DEFAULT_EPS: f64 = 0.1;

/// `|A+A|`, `|A·A|` and `ln max(|A+A|, |A·A|) / ln|A|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumProductReport {
    pub size: usize,
    pub sumset_size: usize,
    pub prodset_size: usize,
    /// Absent for `|A| = 1`.
    #[serde(with = "crate::json::opt_real")]
    pub max_growth_exponent: Option<f64>,
}

pub fn sum_product_report(a: &IntSet) -> Result<SumProductReport> {
    if a.is_empty() {
        return Err(Error::BadInput("empty set".into()));
    }
    let sumset_size = intsets::sumset(a, a).len();
    let prodset_size = intsets::product_set(a, a).len();
    Ok(SumProductReport {
        size: a.len(),
        sumset_size,
        prodset_size,
        max_growth_exponent: log_ratio(sumset_size.max(prodset_size) as f64, a.len()),
    })
}

fn log_ratio(x: f64, n: usize) -> Option<f64> {
    (n > 1).then(|| x.ln() / (n as f64).ln())
}

/// How the input was reduced to a set of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sanitized {
    pub input_size: usize,
    pub dropped_zero: bool,
    /// The negative part was larger and was replaced by its negation.
    pub negated: bool,
    pub discarded: usize,
}

/// Drops 0 and keeps the larger of `A ∩ N` and `-(A ∩ Z_{<0})`, preferring
/// the positive part on ties.
pub fn sanitize(a: &IntSet) -> Result<(IntSet, Sanitized)> {
    let pos: IntSet = a.iter().filter(|x| x.is_positive()).cloned().collect();
    let neg: IntSet = a.iter().filter(|x| x.is_negative()).map(|x| -x).collect();
    let negated = neg.len() > pos.len();
    let kept = if negated { neg } else { pos };
    if kept.is_empty() {
        return Err(Error::EmptyAfterSanitize);
    }
    let info = Sanitized {
        input_size: a.len(),
        dropped_zero: a.contains_zero(),
        negated,
        discarded: a.len() - kept.len(),
    };
    Ok((kept, info))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub sanitized: Sanitized,
    pub size: usize,
    pub k_max: u32,
    pub k: u32,
    #[serde(with = "crate::json::real")]
    pub eps: f64,
    #[serde(rename = "K", with = "crate::json::frac")]
    pub doubling: BigRational,
    pub structure: StructureReport,
    /// `E_+(Ã, Ã)`.
    #[serde(with = "crate::json::big")]
    pub eplus: BigUint,
    /// `|A·A| + |Ã|^4 / E_+(Ã, Ã)`.
    #[serde(rename = "S", with = "crate::json::frac")]
    pub s: BigRational,
    /// `ln S / ln|A|`.
    #[serde(with = "crate::json::opt_real")]
    pub exponent: Option<f64>,
    /// `-ln(S / |A|^{5/3}) / (ln|A|)^{1-ε}` when `S < |A|^{5/3}`.
    #[serde(with = "crate::json::opt_real")]
    pub empirical_c: Option<f64>,
    pub sum_product: SumProductReport,
    /// `(ln|A|)^{1-6ε} ≥ k`; a warning only.
    pub hypothesis_ok: bool,
    /// `S ≥ |A·A|`.
    pub s_dominates_product: bool,
    /// `|Ã|^4 ≤ E_+(Ã)·|Ã+Ã|·|Ã|`.
    pub cauchy_schwarz_ok: bool,
    /// `|Ã+Ã|·|Ã| ≤ |A+A|·|A|`.
    pub sumset_monotone_ok: bool,
    pub invariants_ok: bool,
}

/// Runs the structure theorem on `A` and evaluates the sum-product
/// quantity `S`. When `k` is `None` it is taken to be `max ω(a)`.
pub fn run_pipeline(a: &IntSet, k: Option<u32>, eps: f64) -> Result<PipelineReport> {
    if !(eps > 0.0 && eps < 1.0 / 6.0) {
        return Err(Error::BadParameter(format!("eps = {eps} must lie in (0, 1/6)")));
    }
    let (a, sanitized) = sanitize(a)?;
    let factored = structure::factor_all(&a)?;
    let k_max = factored.iter().map(|f| f.omega()).max().unwrap_or(0);
    let k = match k {
        Some(0) => return Err(Error::BadParameter("k must be positive".into())),
        Some(k) => k,
        None => k_max.max(1),
    };
    let structure = structure::regular_structure(&a, k)?;
    let n = a.len();
    let sum_product = sum_product_report(&a)?;
    let doubling = BigRational::new(sum_product.prodset_size.into(), n.into());

    let tilde = structure.coset.source();
    let eplus = intsets::additive_energy(tilde, tilde);
    if eplus.is_zero() {
        return Err(Error::InvariantViolation("empty structured subset".into()));
    }
    let t4 = num_traits::pow(BigUint::from(tilde.len()), 4);
    let s = rational(sum_product.prodset_size)
        + BigRational::new(BigInt::from(t4.clone()), BigInt::from(eplus.clone()));
    let s_real = to_f64(&s);
    let ln_n = (n as f64).ln();
    let exponent = log_ratio(s_real, n);
    let target = (n as f64).powf(5.0 / 3.0);
    let empirical_c =
        (n > 1 && s_real < target).then(|| -(s_real / target).ln() / ln_n.powf(1.0 - eps));
    let hypothesis_ok = n > 1 && ln_n.powf(1.0 - 6.0 * eps) >= k as f64;

    let tilde_sum = intsets::sumset(tilde, tilde).len();
    let s_dominates_product = s >= rational(sum_product.prodset_size);
    let cauchy_schwarz_ok = t4 <= &eplus * BigUint::from(tilde_sum) * BigUint::from(tilde.len());
    let sumset_monotone_ok =
        (tilde_sum as u128) * (tilde.len() as u128) <= (sum_product.sumset_size as u128) * n as u128;
    let invariants_ok =
        structure.all_ok() && s_dominates_product && cauchy_schwarz_ok && sumset_monotone_ok;
    Ok(PipelineReport {
        sanitized,
        size: n,
        k_max,
        k,
        eps,
        doubling,
        structure,
        eplus,
        s,
        exponent,
        empirical_c,
        sum_product,
        hypothesis_ok,
        s_dominates_product,
        cauchy_schwarz_ok,
        sumset_monotone_ok,
        invariants_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn set(v: &[i64]) -> IntSet {
        IntSet::from_i64s(v)
    }

    #[test]
    fn sum_product_examples() {
        let r = sum_product_report(&generators::interval(100).unwrap()).unwrap();
        assert_eq!(r.sumset_size, 199);
        let gp = generators::prime_powers(2, 10).unwrap();
        let r = sum_product_report(&gp).unwrap();
        assert_eq!(r.sumset_size, 10 * 11 / 2);
        assert_eq!(r.prodset_size, 19);
        let r = sum_product_report(&set(&[1])).unwrap();
        assert_eq!((r.sumset_size, r.prodset_size), (1, 1));
        assert_eq!(r.max_growth_exponent, None);
    }

    #[test]
    fn sanitize_rules() {
        let (a, info) = sanitize(&set(&[-5, -3, -2, 0, 7])).unwrap();
        assert_eq!(a, set(&[2, 3, 5]));
        assert!(info.negated && info.dropped_zero);
        assert_eq!(info.discarded, 2);
        let (a, info) = sanitize(&set(&[-1, 1])).unwrap();
        assert_eq!(a, set(&[1]));
        assert!(!info.negated);
        assert_eq!(sanitize(&set(&[0])), Err(Error::EmptyAfterSanitize));
    }

    #[test]
    fn powers_of_two() {
        let a = generators::prime_powers(2, 32).unwrap();
        let r = run_pipeline(&a, Some(1), DEFAULT_EPS).unwrap();
        assert_eq!(r.sum_product.prodset_size, 63);
        assert_eq!(r.eplus, BigUint::from(2016u32));
        let expected = rational(63) + BigRational::new(BigInt::from(32u64.pow(4)), 2016.into());
        assert_eq!(r.s, expected);
        assert!(r.invariants_ok);
    }

    #[test]
    fn primes_take_the_half_pairs_branch() {
        let a = generators::primes_upto(200).unwrap();
        let r = run_pipeline(&a, Some(1), DEFAULT_EPS).unwrap();
        assert_eq!(r.structure.tilde_size, a.len());
        assert!(r.invariants_ok);
        assert!(r.s >= rational(r.sum_product.prodset_size));
    }

    #[test]
    fn singleton() {
        let r = run_pipeline(&set(&[1]), None, DEFAULT_EPS).unwrap();
        assert_eq!(r.s, rational(2));
        assert_eq!(r.k, 1);
        assert_eq!(r.exponent, None);
        assert!(!r.hypothesis_ok);
    }

    #[test]
    fn brute_force_small_sets() {
        for a in [set(&[2, 3, 4, 6, 8, 9, 12]), set(&[1, 2, 3, 5, 7, 10, 11, 12])] {
            let r = run_pipeline(&a, None, DEFAULT_EPS).unwrap();
            let t = r.structure.coset.source().to_i64s().unwrap();
            let mut e = 0u64;
            for &x in &t {
                for &y in &t {
                    for &z in &t {
                        for &w in &t {
                            e += (x + y == z + w) as u64;
                        }
                    }
                }
            }
            assert_eq!(r.eplus, BigUint::from(e));
            assert!(r.invariants_ok);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(run_pipeline(&set(&[6, 7]), Some(1), 0.1), Err(Error::OmegaTooLarge { .. })));
        assert_eq!(run_pipeline(&set(&[0]), None, 0.1), Err(Error::EmptyAfterSanitize));
        assert!(run_pipeline(&set(&[2]), None, 0.3).is_err());
    }
}
