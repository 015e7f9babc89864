//! Finite sets of integers and exact additive/multiplicative statistics.
//!
//! All pair counts are over ordered pairs. Representation counting is
//! `O(|A||B|)`: a dense counter when the sums span a short range, a hash map
//! keyed on `i128` when every element fits in `i64`, and a hash map keyed on
//! big integers otherwise.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::arith;
use crate::error::{Error, Result};

/// Rows of the outer loop handed to each worker.
const CHUNK: usize = 64;
const PARALLEL_PAIRS: usize = 1 << 16;
const DENSE_LIMIT: i128 = 1 << 26;

/// A sorted, duplicate-free finite set of integers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntSet {
    elems: Vec<BigInt>,
}

impl IntSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from a list that must not contain duplicates.
    pub fn try_from_vec(mut elems: Vec<BigInt>) -> Result<Self> {
        elems.sort_unstable();
        if let Some(w) = elems.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::BadInput(format!("duplicate element {}", w[0])));
        }
        Ok(IntSet { elems })
    }

    pub fn from_i64s(values: &[i64]) -> Self {
        values.iter().map(|&v| BigInt::from(v)).collect()
    }

    pub(crate) fn from_sorted_i128(values: Vec<i128>) -> Self {
        IntSet { elems: values.into_iter().map(BigInt::from).collect() }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BigInt> {
        self.elems.iter()
    }

    pub fn as_slice(&self) -> &[BigInt] {
        &self.elems
    }

    pub fn contains(&self, x: &BigInt) -> bool {
        self.elems.binary_search(x).is_ok()
    }

    pub fn min(&self) -> Option<&BigInt> {
        self.elems.first()
    }

    pub fn max(&self) -> Option<&BigInt> {
        self.elems.last()
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&BigInt::zero())
    }

    pub fn union(&self, other: &IntSet) -> IntSet {
        self.iter().chain(other.iter()).cloned().collect()
    }

    pub fn is_subset(&self, other: &IntSet) -> bool {
        self.iter().all(|x| other.contains(x))
    }

    /// The elements as `i64`, if they all fit.
    pub fn to_i64s(&self) -> Option<Vec<i64>> {
        let (lo, hi) = (self.min()?, self.max()?);
        lo.to_i64()?;
        hi.to_i64()?;
        Some(self.elems.iter().map(|x| x.to_i64().unwrap()).collect())
    }

    fn small(&self) -> Option<Vec<i64>> {
        if self.is_empty() {
            return Some(Vec::new());
        }
        self.to_i64s()
    }

    /// True if the set is an arithmetic progression (sets of size ≤ 2 are).
    pub fn is_arithmetic_progression(&self) -> bool {
        if self.len() <= 2 {
            return true;
        }
        let d = &self.elems[1] - &self.elems[0];
        self.elems.windows(2).all(|w| &w[1] - &w[0] == d)
    }
}

impl FromIterator<BigInt> for IntSet {
    fn from_iter<I: IntoIterator<Item = BigInt>>(iter: I) -> Self {
        let mut elems: Vec<BigInt> = iter.into_iter().collect();
        elems.sort_unstable();
        elems.dedup();
        IntSet { elems }
    }
}

impl<'a> IntoIterator for &'a IntSet {
    type Item = &'a BigInt;
    type IntoIter = std::slice::Iter<'a, BigInt>;

    fn into_iter(self) -> Self::IntoIter {
        self.elems.iter()
    }
}

impl Serialize for IntSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.elems.iter().map(|x| x.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Add,
    Mul,
}

impl Op {
    #[inline]
    fn small(self, a: i64, b: i64) -> i128 {
        match self {
            Op::Add => a as i128 + b as i128,
            Op::Mul => a as i128 * b as i128,
        }
    }

    fn big(self, a: &BigInt, b: &BigInt) -> BigInt {
        match self {
            Op::Add => a + b,
            Op::Mul => a * b,
        }
    }
}

fn combine(a: &IntSet, b: &IntSet, op: Op) -> IntSet {
    if a.is_empty() || b.is_empty() {
        return IntSet::new();
    }
    if let (Some(xs), Some(ys)) = (a.small(), b.small()) {
        let mut out: Vec<i128> = if xs.len() * ys.len() < PARALLEL_PAIRS {
            xs.iter().flat_map(|&x| ys.iter().map(move |&y| op.small(x, y))).collect()
        } else {
            xs.par_iter().flat_map_iter(|&x| ys.iter().map(move |&y| op.small(x, y))).collect()
        };
        out.par_sort_unstable();
        out.dedup();
        return IntSet::from_sorted_i128(out);
    }
    let mut out: Vec<BigInt> = a
        .elems
        .par_iter()
        .flat_map_iter(|x| b.elems.iter().map(move |y| op.big(x, y)))
        .collect();
    out.par_sort_unstable();
    out.dedup();
    IntSet { elems: out }
}

/// `A + B`.
pub fn sumset(a: &IntSet, b: &IntSet) -> IntSet {
    combine(a, b, Op::Add)
}

/// `A · B`.
pub fn product_set(a: &IntSet, b: &IntSet) -> IntSet {
    combine(a, b, Op::Mul)
}

/// `t + A`.
pub fn translate(a: &IntSet, t: &BigInt) -> IntSet {
    IntSet { elems: a.elems.iter().map(|x| x + t).collect() }
}

/// `d · A` for a nonzero rational `d`; every image must be an integer.
pub fn dilate(a: &IntSet, d: &BigRational) -> Result<IntSet> {
    if d.is_zero() {
        return Err(Error::BadParameter("dilation factor must be nonzero".into()));
    }
    let mut elems = Vec::with_capacity(a.len());
    for x in a {
        let y = d * BigRational::from_integer(x.clone());
        if !y.is_integer() {
            return Err(Error::NonIntegerResult(y.to_string()));
        }
        elems.push(y.to_integer());
    }
    if d.is_negative() {
        elems.reverse();
    }
    Ok(IntSet { elems })
}

/// Representation function `r(s) = #{(a, b) ∈ A × B : a ∘ b = s}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepCounts {
    counts: BTreeMap<BigInt, u64>,
    total: u64,
}

impl RepCounts {
    pub fn get(&self, s: &BigInt) -> u64 {
        self.counts.get(s).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BigInt, u64)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// `Σ r(s)^2`.
    pub fn energy(&self) -> BigUint {
        let sum: u128 = self.counts.values().map(|&c| c as u128 * c as u128).sum();
        BigUint::from(sum)
    }
}

enum Counts {
    Dense { offset: i128, counts: Vec<u64> },
    Small(HashMap<i128, u64>),
    Big(HashMap<BigInt, u64>),
}

impl Counts {
    fn sum_of_squares(&self) -> BigUint {
        let sq = |c: &u64| *c as u128 * *c as u128;
        let total: u128 = match self {
            Counts::Dense { counts, .. } => counts.iter().map(sq).sum(),
            Counts::Small(m) => m.values().map(sq).sum(),
            Counts::Big(m) => m.values().map(sq).sum(),
        };
        BigUint::from(total)
    }

    fn into_rep_counts(self) -> RepCounts {
        let counts: BTreeMap<BigInt, u64> = match self {
            Counts::Dense { offset, counts } => counts
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .map(|(i, c)| (BigInt::from(offset + i as i128), c))
                .collect(),
            Counts::Small(m) => m.into_iter().map(|(k, c)| (BigInt::from(k), c)).collect(),
            Counts::Big(m) => m.into_iter().collect(),
        };
        let total = counts.values().sum();
        RepCounts { counts, total }
    }
}

fn merge_maps<K: std::hash::Hash + Eq>(
    mut left: HashMap<K, u64>,
    right: HashMap<K, u64>,
) -> HashMap<K, u64> {
    let (mut big, small) = if left.len() >= right.len() {
        (std::mem::take(&mut left), right)
    } else {
        (right, std::mem::take(&mut left))
    };
    for (k, c) in small {
        *big.entry(k).or_insert(0) += c;
    }
    big
}

fn count_representations(a: &IntSet, b: &IntSet, op: Op) -> Counts {
    if let (Some(xs), Some(ys)) = (a.small(), b.small()) {
        if xs.is_empty() || ys.is_empty() {
            return Counts::Small(HashMap::new());
        }
        if op == Op::Add {
            let lo = xs[0] as i128 + ys[0] as i128;
            let hi = *xs.last().unwrap() as i128 + *ys.last().unwrap() as i128;
            let span = hi - lo + 1;
            let pairs = (xs.len() * ys.len()) as i128;
            if span <= DENSE_LIMIT && span <= 16 * pairs.max(1 << 16) {
                let mut counts = vec![0u64; span as usize];
                for &x in &xs {
                    let base = (x as i128 - xs[0] as i128) as usize;
                    for &y in &ys {
                        // y - ys[0] >= 0 since ys is sorted
                        counts[base + (y as i128 - ys[0] as i128) as usize] += 1;
                    }
                }
                return Counts::Dense { offset: lo, counts };
            }
        }
        let build = |rows: &[i64]| {
            let mut m = HashMap::with_capacity(rows.len() * ys.len());
            for &x in rows {
                for &y in &ys {
                    *m.entry(op.small(x, y)).or_insert(0u64) += 1;
                }
            }
            m
        };
        let map = if xs.len() * ys.len() < PARALLEL_PAIRS {
            build(&xs)
        } else {
            xs.par_chunks(CHUNK).map(build).reduce(HashMap::new, merge_maps)
        };
        return Counts::Small(map);
    }
    let build = |rows: &[BigInt]| {
        let mut m = HashMap::new();
        for x in rows {
            for y in &b.elems {
                *m.entry(op.big(x, y)).or_insert(0u64) += 1;
            }
        }
        m
    };
    Counts::Big(a.elems.par_chunks(CHUNK).map(build).reduce(HashMap::new, merge_maps))
}

pub fn sum_representations(a: &IntSet, b: &IntSet) -> RepCounts {
    count_representations(a, b, Op::Add).into_rep_counts()
}

pub fn product_representations(a: &IntSet, b: &IntSet) -> RepCounts {
    count_representations(a, b, Op::Mul).into_rep_counts()
}

/// `E₊(A, B) = #{a₁ + b₁ = a₂ + b₂}` over ordered quadruples.
pub fn additive_energy(a: &IntSet, b: &IntSet) -> BigUint {
    count_representations(a, b, Op::Add).sum_of_squares()
}

/// `E×(A, B) = #{a₁ b₁ = a₂ b₂}` over ordered quadruples.
pub fn multiplicative_energy(a: &IntSet, b: &IntSet) -> BigUint {
    count_representations(a, b, Op::Mul).sum_of_squares()
}

fn reject_zero(sets: &[&IntSet]) -> Result<()> {
    if sets.iter().any(|s| s.contains_zero()) {
        return Err(Error::ZeroElement);
    }
    Ok(())
}

/// Magnitudes as `u128`, if the set fits.
fn magnitudes(a: &IntSet) -> Option<Vec<u128>> {
    a.elems.iter().map(|x| x.magnitude().to_u128()).collect()
}

/// `#{(a, b) ∈ A × B : gcd(a, b) = 1}`.
pub fn coprime_pairs(a: &IntSet, b: &IntSet) -> Result<BigUint> {
    reject_zero(&[a, b])?;
    let count: u64 = match (magnitudes(a), magnitudes(b)) {
        (Some(xs), Some(ys)) => {
            let row = |&x: &u128| ys.iter().filter(|&&y| x.gcd(&y) == 1).count() as u64;
            if xs.len() * ys.len() < PARALLEL_PAIRS {
                xs.iter().map(row).sum()
            } else {
                xs.par_iter().map(row).sum()
            }
        }
        _ => a
            .elems
            .par_iter()
            .map(|x| b.elems.iter().filter(|y| x.gcd(y).is_one()).count() as u64)
            .sum(),
    };
    Ok(BigUint::from(count))
}

/// Outcome of counting coprime factorizations `q = ab`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoprimeFactorizationCount {
    pub count: u64,
    /// `2^{k+l}` with `k`, `l` the largest `ω` over `A` and `B`.
    #[serde(with = "crate::json::big")]
    pub bound: BigUint,
    pub ok: bool,
}

/// Counts `(a, b) ∈ A × B` with `ab = q` and `gcd(a, b) = 1`.
pub fn coprime_factorization_count(
    q: &BigInt,
    a: &IntSet,
    b: &IntSet,
) -> Result<CoprimeFactorizationCount> {
    if q.is_zero() {
        return Err(Error::ZeroInput);
    }
    reject_zero(&[a, b])?;
    let max_omega = |s: &IntSet| -> Result<u32> {
        s.iter().map(arith::omega).try_fold(0, |m, w| Ok(m.max(w?)))
    };
    let k = max_omega(a)?;
    let l = max_omega(b)?;
    let mut count = 0u64;
    for x in a {
        let (quot, rem) = q.div_rem(x);
        if rem.is_zero() && b.contains(&quot) && x.gcd(&quot).is_one() {
            count += 1;
        }
    }
    let bound = BigUint::one() << (k + l);
    let ok = BigUint::from(count) <= bound;
    Ok(CoprimeFactorizationCount { count, bound, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[i64]) -> IntSet {
        IntSet::from_i64s(v)
    }

    fn brute_energy(a: &[i64], b: &[i64], mul: bool) -> u64 {
        let f = |x: i64, y: i64| if mul { x as i128 * y as i128 } else { (x + y) as i128 };
        let mut n = 0;
        for &a1 in a {
            for &b1 in b {
                for &a2 in a {
                    for &b2 in b {
                        if f(a1, b1) == f(a2, b2) {
                            n += 1;
                        }
                    }
                }
            }
        }
        n
    }

    #[test]
    fn sumset_examples() {
        assert_eq!(sumset(&set(&[1, 2, 3]), &set(&[1, 2, 3])), set(&[2, 3, 4, 5, 6]));
        assert_eq!(sumset(&set(&[1, 2, 4]), &set(&[1, 2, 4])), set(&[2, 3, 4, 5, 6, 8]));
        assert_eq!(sumset(&set(&[]), &set(&[1])), set(&[]));
    }

    #[test]
    fn product_set_examples() {
        assert_eq!(product_set(&set(&[1, 2, 3]), &set(&[1, 2, 3])), set(&[1, 2, 3, 4, 6, 9]));
        assert_eq!(product_set(&set(&[2]), &set(&[5])), set(&[10]));
        let powers = set(&[2, 4, 8, 16]);
        let pp = product_set(&powers, &powers);
        assert_eq!(pp, set(&[4, 8, 16, 32, 64, 128, 256]));
        assert_eq!(pp.len(), 2 * powers.len() - 1);
    }

    #[test]
    fn big_elements_take_the_slow_path() {
        let big = BigInt::from(1u8) << 80u32;
        let a: IntSet = [big.clone(), big.clone() + 1].into_iter().collect();
        assert_eq!(sumset(&a, &a).len(), 3);
        assert_eq!(additive_energy(&a, &a), BigUint::from(6u32));
        assert_eq!(multiplicative_energy(&a, &a), BigUint::from(6u32));
    }

    #[test]
    fn translate_and_dilate() {
        assert_eq!(translate(&set(&[1, 2]), &BigInt::from(5)), set(&[6, 7]));
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        assert_eq!(dilate(&set(&[2, 4]), &half).unwrap(), set(&[1, 2]));
        assert!(matches!(dilate(&set(&[1, 2]), &half), Err(Error::NonIntegerResult(_))));
        let neg = BigRational::from_integer(BigInt::from(-3));
        assert_eq!(dilate(&set(&[1, 2]), &neg).unwrap(), set(&[-6, -3]));
    }

    #[test]
    fn energy_examples() {
        let a = set(&[1, 2, 3]);
        assert_eq!(additive_energy(&a, &a), BigUint::from(19u32));
        assert_eq!(additive_energy(&set(&[1]), &set(&[1])), BigUint::from(1u32));
        let g = set(&[1, 2, 4]);
        assert_eq!(multiplicative_energy(&g, &g), BigUint::from(19u32));
        assert_eq!(multiplicative_energy(&set(&[2]), &set(&[3])), BigUint::from(1u32));
        let g7 = set(&[7, 14, 28]);
        assert_eq!(multiplicative_energy(&g7, &g7), BigUint::from(19u32));
    }

    #[test]
    fn interval_energy_closed_form() {
        for n in 1..=12i64 {
            let v: Vec<i64> = (1..=n).collect();
            let e = brute_energy(&v, &v, false);
            assert_eq!(e as i64, (2 * n * n * n + n) / 3);
            let s = set(&v);
            assert_eq!(additive_energy(&s, &s), BigUint::from(e));
        }
    }

    #[test]
    fn rep_counts_total() {
        let a = set(&[1, 2, 3, 10]);
        let b = set(&[-4, 0, 5]);
        let r = sum_representations(&a, &b);
        assert_eq!(r.total(), 12);
        assert_eq!(r.energy(), additive_energy(&a, &b));
        assert!(r.iter().all(|(_, c)| c >= 1));
        let m = product_representations(&a, &set(&[2, 3]));
        assert_eq!(m.get(&BigInt::from(6)), 2);
    }

    #[test]
    fn coprime_pair_examples() {
        assert_eq!(coprime_pairs(&set(&[2, 3]), &set(&[2, 3])).unwrap(), BigUint::from(2u32));
        assert_eq!(coprime_pairs(&set(&[4, 8]), &set(&[2, 6])).unwrap(), BigUint::from(0u32));
        assert_eq!(coprime_pairs(&set(&[1]), &set(&[1])).unwrap(), BigUint::from(1u32));
        assert_eq!(coprime_pairs(&set(&[0, 1]), &set(&[1])), Err(Error::ZeroElement));
    }

    #[test]
    fn coprime_factorization_examples() {
        let divs = set(&[1, 2, 3, 5, 6, 10, 15, 30]);
        let r = coprime_factorization_count(&BigInt::from(30), &divs, &divs).unwrap();
        assert_eq!(r.count, 8);
        assert_eq!(r.bound, BigUint::from(64u32));
        assert!(r.ok);
        let r = coprime_factorization_count(&BigInt::from(7), &set(&[2]), &set(&[3])).unwrap();
        assert_eq!(r.count, 0);
        assert!(r.ok);
        assert_eq!(
            coprime_factorization_count(&BigInt::from(7), &set(&[0]), &set(&[3])),
            Err(Error::ZeroElement)
        );
    }

    #[test]
    fn duplicates_rejected() {
        let v = vec![BigInt::from(1), BigInt::from(1)];
        assert!(IntSet::try_from_vec(v).is_err());
    }

    fn small_set() -> impl Strategy<Value = Vec<i64>> {
        proptest::collection::btree_set(-40i64..40, 0..10).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn energy_matches_quadruple_oracle(a in small_set(), b in small_set()) {
            let (sa, sb) = (set(&a), set(&b));
            prop_assert_eq!(additive_energy(&sa, &sb), BigUint::from(brute_energy(&a, &b, false)));
            prop_assert_eq!(multiplicative_energy(&sa, &sb), BigUint::from(brute_energy(&a, &b, true)));
        }

        #[test]
        fn energy_bounds_and_cauchy_schwarz(a in small_set()) {
            prop_assume!(!a.is_empty());
            let s = set(&a);
            let n = BigUint::from(s.len());
            let e = additive_energy(&s, &s);
            prop_assert!(e >= &n * &n);
            prop_assert!(e <= &n * &n * &n);
            let ss = BigUint::from(sumset(&s, &s).len());
            prop_assert!(ss * &e >= n.pow(4));
        }

        #[test]
        fn translation_and_dilation_invariance(a in small_set(), b in small_set(), t in -100i64..100, d in 1i64..9) {
            let (sa, sb) = (set(&a), set(&b));
            let t = BigInt::from(t);
            let d = BigRational::from_integer(BigInt::from(if t.is_negative() { -d } else { d }));
            let e = additive_energy(&sa, &sb);
            prop_assert_eq!(additive_energy(&translate(&sa, &t), &translate(&sb, &t)), e.clone());
            let (da, db) = (dilate(&sa, &d).unwrap(), dilate(&sb, &d).unwrap());
            prop_assert_eq!(additive_energy(&da, &db), e);
            prop_assert_eq!(multiplicative_energy(&da, &db), multiplicative_energy(&sa, &sb));
        }

        #[test]
        fn sumset_lower_bound_and_ap_equality(a in small_set()) {
            prop_assume!(!a.is_empty());
            let s = set(&a);
            let ss = sumset(&s, &s).len();
            prop_assert!(ss >= 2 * s.len() - 1);
            prop_assert_eq!(ss == 2 * s.len() - 1, s.is_arithmetic_progression());
        }
    }
}
