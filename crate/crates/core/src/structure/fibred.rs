use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::arith::PrimeTuple;
use crate::error::{Error, Result};
use crate::intsets::{self, IntSet};

/// `A = ⋃_v p^v · B_v` with every base coprime to the primes of `P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibredDecomposition {
    primes: PrimeTuple,
    fibres: BTreeMap<Vec<u32>, IntSet>,
    source: IntSet,
}

/// `p_1^{v_1} ⋯ p_r^{v_r}`.
pub(crate) fn prime_power(primes: &PrimeTuple, v: &[u32]) -> BigInt {
    primes
        .as_slice()
        .iter()
        .zip(v)
        .fold(BigInt::one(), |acc, (&p, &e)| acc * num_traits::pow(BigInt::from(p), e as usize))
}

impl FibredDecomposition {
    /// Assembles a decomposition and checks its invariants.
    pub fn new(
        primes: PrimeTuple,
        fibres: BTreeMap<Vec<u32>, IntSet>,
        source: IntSet,
    ) -> Result<Self> {
        let d = FibredDecomposition { primes, fibres, source };
        d.validate().map_err(|e| match e {
            Error::InvariantViolation(m) => Error::InconsistentState(m),
            other => other,
        })?;
        Ok(d)
    }

    pub fn primes(&self) -> &PrimeTuple {
        &self.primes
    }

    pub fn fibres(&self) -> &BTreeMap<Vec<u32>, IntSet> {
        &self.fibres
    }

    pub fn source(&self) -> &IntSet {
        &self.source
    }

    pub fn fibre_count(&self) -> usize {
        self.fibres.len()
    }

    pub fn max_fibre_size(&self) -> usize {
        self.fibres.values().map(IntSet::len).max().unwrap_or(0)
    }

    /// `p^v · B_v`, empty when `v` is not a fibre.
    pub fn piece(&self, v: &[u32]) -> IntSet {
        match self.fibres.get(v) {
            Some(b) => {
                let scale = prime_power(&self.primes, v);
                b.iter().map(|x| x * &scale).collect()
            }
            None => IntSet::new(),
        }
    }

    /// Checks coprimality of bases and exact disjoint reconstruction.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvariantViolation(m));
        let r = self.primes.len();
        let mut total = 0usize;
        let mut rebuilt = Vec::with_capacity(self.source.len());
        for (v, bases) in &self.fibres {
            if v.len() != r {
                return Err(Error::DimensionMismatch { expected: r, got: v.len() });
            }
            if bases.is_empty() {
                return bad(format!("empty fibre at {v:?}"));
            }
            for b in bases {
                let (exps, _) = self.primes.split(b)?;
                if exps.iter().any(|&e| e > 0) {
                    return bad(format!("base {b} shares a prime with {}", self.primes));
                }
            }
            total += bases.len();
            rebuilt.extend(self.piece(v).as_slice().iter().cloned());
        }
        if total != self.source.len() {
            return bad(format!("fibre sizes sum to {total}, source has {}", self.source.len()));
        }
        let rebuilt_len = rebuilt.len();
        let union: IntSet = rebuilt.into_iter().collect();
        if union.len() != rebuilt_len {
            return bad("pieces overlap".into());
        }
        if union != self.source {
            return bad("pieces do not reconstruct the source".into());
        }
        Ok(())
    }
}

impl Serialize for FibredDecomposition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Fibre<'a> {
            exponents: &'a [u32],
            bases: &'a IntSet,
        }
        #[derive(Serialize)]
        struct View<'a> {
            primes: &'a PrimeTuple,
            fibres: Vec<Fibre<'a>>,
            size: usize,
        }
        View {
            primes: &self.primes,
            fibres: self
                .fibres
                .iter()
                .map(|(v, b)| Fibre { exponents: v, bases: b })
                .collect(),
            size: self.source.len(),
        }
        .serialize(s)
    }
}

/// Partitions `A` by the valuation vector at the primes of `P`.
pub fn fibred_decompose(a: &IntSet, primes: &PrimeTuple) -> Result<FibredDecomposition> {
    if a.contains_zero() {
        return Err(Error::ZeroElement);
    }
    let split: Vec<(Vec<u32>, BigInt)> =
        a.as_slice().par_iter().map(|x| primes.split(x)).collect::<Result<_>>()?;
    let mut groups: BTreeMap<Vec<u32>, Vec<BigInt>> = BTreeMap::new();
    for (v, b) in split {
        groups.entry(v).or_default().push(b);
    }
    let fibres = groups.into_iter().map(|(v, bs)| (v, bs.into_iter().collect())).collect();
    let d = FibredDecomposition { primes: primes.clone(), fibres, source: a.clone() };
    d.validate()?;
    Ok(d)
}

/// A fibred decomposition over the heavy primes of `A`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FibredStructure {
    pub decomposition: FibredDecomposition,
    pub bad_pairs: u64,
    /// Ordered pairs of elements whose bases are coprime.
    pub coprime_pairs: u64,
    pub rank_ok: bool,
    pub coprime_ok: bool,
}

impl FibredStructure {
    pub fn verify(&self) -> Result<()> {
        if !self.rank_ok {
            return Err(Error::InvariantViolation("more than 2k^2 heavy primes".into()));
        }
        if !self.coprime_ok {
            return Err(Error::InvariantViolation(format!(
                "only {} coprime base pairs",
                self.coprime_pairs
            )));
        }
        Ok(())
    }
}

/// Decomposes `A` over its heavy primes: at most `2k^2` primes, and at
/// least half of all ordered pairs have coprime bases.
pub fn fibred_structure(a: &IntSet, k: u32) -> Result<FibredStructure> {
    if k == 0 {
        return Err(Error::BadParameter("k must be positive".into()));
    }
    let factored = super::factor_with_omega(a, k)?;
    let g = super::graph::support_graph_of(&factored, &PrimeTuple::empty());
    let pruned = super::heavy_prune(&g, k)?;
    let heavy: Vec<u128> = pruned.heavy.iter().map(|&y| g.right()[y]).collect();
    let primes = PrimeTuple::new(heavy)?;
    let decomposition = fibred_decompose(a, &primes)?;

    let bases: Vec<BigInt> = factored
        .iter()
        .map(|f| primes.split(f.value()).map(|(_, b)| b))
        .collect::<Result<_>>()?;
    let coprime = coprime_pair_count(&bases);
    let n = a.len() as u64;
    let k2 = k as u64 * k as u64;
    let out = FibredStructure {
        rank_ok: primes.len() as u64 <= 2 * k2,
        coprime_ok: 2 * coprime >= n * n,
        decomposition,
        bad_pairs: pruned.bad_pairs,
        coprime_pairs: coprime,
    };
    Ok(out)
}

/// Ordered pairs `(i, j)` with `gcd(x_i, x_j) = 1`, diagonal included.
fn coprime_pair_count(xs: &[BigInt]) -> u64 {
    let small: Option<Vec<u128>> = xs.iter().map(|x| x.magnitude().to_u128()).collect();
    match small {
        Some(ms) => ms
            .par_iter()
            .map(|x| ms.iter().filter(|y| x.gcd(y) == 1).count() as u64)
            .sum(),
        None => xs
            .par_iter()
            .map(|x| xs.iter().filter(|y| x.gcd(y).is_one()).count() as u64)
            .sum(),
    }
}

fn isqrt_exact(n: &BigUint) -> (BigUint, bool) {
    let r = n.sqrt();
    let exact = &r * &r == *n;
    (r, exact)
}

/// Compares `E_+(A)^{1/2}` with `Σ_v E_+(B_v)^{1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangRatio {
    #[serde(with = "crate::json::big")]
    pub energy: BigUint,
    /// `⌊E_+(A)^{1/2}⌋`.
    #[serde(with = "crate::json::big")]
    pub lhs: BigUint,
    pub lhs_exact: bool,
    /// `Σ_v ⌊E_+(B_v)^{1/2}⌋`.
    #[serde(with = "crate::json::big")]
    pub rhs: BigUint,
    pub rhs_exact: bool,
    /// `lhs / rhs` on the floored roots.
    #[serde(with = "crate::json::frac")]
    pub ratio: BigRational,
    #[serde(with = "crate::json::real")]
    pub ratio_real: f64,
    /// `E_+(A) / (|A|^2 max_v |B_v|)`.
    #[serde(with = "crate::json::frac")]
    pub crude_ratio: BigRational,
    /// `3^r`.
    #[serde(with = "crate::json::big")]
    pub threshold: BigUint,
    /// `ratio_real ≤ 3^r`.
    pub within_threshold: bool,
}

pub fn chang_ratio(d: &FibredDecomposition) -> Result<ChangRatio> {
    if d.fibres.is_empty() {
        return Err(Error::EmptyDecomposition);
    }
    let a = &d.source;
    let energy = intsets::additive_energy(a, a);
    let (lhs, lhs_exact) = isqrt_exact(&energy);
    let roots: Vec<(f64, BigUint, bool)> = d
        .fibres
        .values()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|b| {
            let e = intsets::additive_energy(b, b);
            let (r, exact) = isqrt_exact(&e);
            (crate::bounds::to_f64(&BigRational::from_integer(e.into())).sqrt(), r, exact)
        })
        .collect();
    let rhs: BigUint = roots.iter().map(|(_, r, _)| r).sum();
    let rhs_exact = roots.iter().all(|(_, _, e)| *e);
    let rhs_real: f64 = roots.iter().map(|(x, _, _)| x).sum();
    let ratio = BigRational::new(lhs.clone().into(), rhs.clone().into());
    let energy_real = crate::bounds::to_f64(&BigRational::from_integer(energy.clone().into()));
    let ratio_real = energy_real.sqrt() / rhs_real;
    let n = BigUint::from(a.len());
    let crude_ratio = BigRational::new(
        energy.clone().into(),
        (&n * &n * BigUint::from(d.max_fibre_size())).into(),
    );
    let threshold = num_traits::pow(BigUint::from(3u32), d.primes.len());
    let within_threshold =
        ratio_real <= threshold.to_f64().unwrap_or(f64::INFINITY) * (1.0 + 1e-12);
    Ok(ChangRatio {
        energy,
        lhs,
        lhs_exact,
        rhs,
        rhs_exact,
        ratio,
        ratio_real,
        crude_ratio,
        threshold,
        within_threshold,
    })
}

/// One inequality of the product-set witness chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoggedInequality {
    pub name: &'static str,
    #[serde(with = "crate::json::frac")]
    pub lhs: BigRational,
    #[serde(with = "crate::json::frac")]
    pub rhs: BigRational,
    /// `lhs ≥ rhs`.
    pub holds: bool,
}

impl LoggedInequality {
    fn new(name: &'static str, lhs: BigRational, rhs: BigRational) -> Self {
        let holds = lhs >= rhs;
        LoggedInequality { name, lhs, rhs, holds }
    }
}

/// A fibre `v_1` whose small-fibre coprime pairs force `|A·A| ≫ |A||B_{v_1}|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThreeHalvesWitness {
    pub v1: Vec<u32>,
    /// `A' = ⋃_{|B_v| ≤ |B_{v_1}|} p^v B_v`.
    pub a_prime: IntSet,
    #[serde(with = "crate::json::big")]
    pub product_set_size: BigUint,
    /// `|A||B_{v_1}| / 4^{k+1}`.
    #[serde(with = "crate::json::frac")]
    pub product_lower: BigRational,
    pub inequalities: Vec<LoggedInequality>,
    pub ok: bool,
}

pub fn three_halves_witness(d: &FibredDecomposition, k: u32) -> Result<ThreeHalvesWitness> {
    if k == 0 {
        return Err(Error::BadParameter("k must be positive".into()));
    }
    if d.fibres.is_empty() {
        return Err(Error::EmptyDecomposition);
    }
    let keys: Vec<&Vec<u32>> = d.fibres.keys().collect();
    let sets: Vec<&IntSet> = d.fibres.values().collect();
    let m = keys.len();
    let coprime: Vec<Vec<u64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| {
                    intsets::coprime_pairs(sets[i], sets[j])
                        .map(|c| c.to_u64().expect("pair count fits u64"))
                })
                .collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<_>>()?;

    let n = d.source.len() as u64;
    let chosen = (0..m).find_map(|i| {
        let own = sets[i].len();
        let s: u64 =
            (0..m).filter(|&j| sets[j].len() <= own).map(|j| coprime[i][j]).sum();
        (4 * s as u128 >= n as u128 * own as u128).then_some((i, s))
    });
    let (i, s) = chosen.ok_or(Error::NoWitness)?;
    let own = sets[i].len();
    let small: Vec<usize> = (0..m).filter(|&j| sets[j].len() <= own).collect();

    let a_prime: IntSet = small
        .iter()
        .flat_map(|&j| d.piece(keys[j]).as_slice().to_vec())
        .collect();
    let piece = d.piece(keys[i]);
    let piece_times = intsets::product_set(&piece, &a_prime).len();
    let fibre_products: usize =
        small.iter().map(|&j| intsets::product_set(sets[i], sets[j]).len()).sum();
    let product_set_size = BigUint::from(intsets::product_set(&d.source, &d.source).len());

    let q = |x: u128| BigRational::from_integer(BigInt::from(x));
    let four_k = BigRational::from_integer(num_traits::pow(BigInt::from(4), k as usize));
    let na = n as u128 * own as u128;
    let product_lower = q(na) / (&four_k * BigRational::from_integer(4.into()));
    let inequalities = vec![
        LoggedInequality::new("witness", q(4 * s as u128), q(na)),
        LoggedInequality::new("a_prime_size", q(4 * a_prime.len() as u128), q(n as u128)),
        LoggedInequality::new(
            "fibre_products",
            &four_k * q(fibre_products as u128),
            q(s as u128),
        ),
        LoggedInequality::new("graded_disjointness", q(piece_times as u128), q(fibre_products as u128)),
        LoggedInequality::new(
            "product_set",
            BigRational::from_integer(product_set_size.clone().into()),
            product_lower.clone(),
        ),
    ];
    let ok = inequalities.iter().all(|c| c.holds);
    Ok(ThreeHalvesWitness {
        v1: keys[i].clone(),
        a_prime,
        product_set_size,
        product_lower,
        inequalities,
        ok,
    })
}
