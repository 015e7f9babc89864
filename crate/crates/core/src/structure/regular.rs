use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use super::fibred::FibredDecomposition;
use crate::arith::{FactoredInt, PrimeTuple};
use crate::bounds::{factorial, log2_upper, rational};
use crate::error::{Error, Result};
use crate::intsets::{self, IntSet};

/// `Ã = ⋃_{b ∈ B} b · Γ_b` with `Γ_b` monomials in the primes of `P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetDecomposition {
    primes: PrimeTuple,
    gamma: BTreeMap<BigInt, IntSet>,
    level: u64,
    source: IntSet,
}

impl CosetDecomposition {
    pub fn primes(&self) -> &PrimeTuple {
        &self.primes
    }

    pub fn gamma(&self) -> &BTreeMap<BigInt, IntSet> {
        &self.gamma
    }

    pub fn base(&self) -> IntSet {
        self.gamma.keys().cloned().collect()
    }

    /// The dyadic level `L`.
    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn source(&self) -> &IntSet {
        &self.source
    }

    /// `L ≤ |Γ_b| ≤ 2L` for every base.
    pub fn band_ok(&self) -> bool {
        self.gamma.values().all(|g| {
            let n = g.len() as u64;
            self.level <= n && n <= 2 * self.level
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvariantViolation(m));
        let mut pieces = Vec::with_capacity(self.source.len());
        for (b, g) in &self.gamma {
            let (exps, _) = self.primes.split(b)?;
            if exps.iter().any(|&e| e > 0) {
                return bad(format!("base {b} shares a prime with {}", self.primes));
            }
            for x in g {
                if x.sign() != num_bigint::Sign::Plus || !self.primes.split(x)?.1.is_one() {
                    return bad(format!("{x} is not a monomial in {}", self.primes));
                }
                pieces.push(b * x);
            }
        }
        let n = pieces.len();
        let union: IntSet = pieces.into_iter().collect();
        if union.len() != n {
            return bad("cosets overlap".into());
        }
        if union != self.source {
            return bad("cosets do not reconstruct the source".into());
        }
        Ok(())
    }

    /// The same set as `⋃_v p^v · B_v` with `B_v = {b : p^v ∈ Γ_b}`.
    pub fn to_fibred(&self) -> Result<FibredDecomposition> {
        let mut groups: BTreeMap<Vec<u32>, Vec<BigInt>> = BTreeMap::new();
        for (b, g) in &self.gamma {
            for x in g {
                let (v, _) = self.primes.split(x)?;
                groups.entry(v).or_default().push(b.clone());
            }
        }
        let fibres = groups.into_iter().map(|(v, bs)| (v, bs.into_iter().collect())).collect();
        FibredDecomposition::new(self.primes.clone(), fibres, self.source.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Base {
    factors: FactoredInt,
    gamma: Vec<BigInt>,
}

/// The set `A_j` after `j` iterations, in coset form over the chosen primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationState {
    k: u32,
    chosen: Vec<u128>,
    bases: BTreeMap<BigInt, Base>,
    level: u64,
}

impl IterationState {
    /// `A_0 = A` with every element its own base and `Γ_a = {1}`.
    pub fn initial(a: &IntSet, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::BadParameter("k must be positive".into()));
        }
        if a.is_empty() {
            return Err(Error::BadInput("empty set".into()));
        }
        let factored = super::factor_with_omega(a, k)?;
        let bases = factored
            .into_iter()
            .map(|f| (f.value().clone(), Base { factors: f, gamma: vec![BigInt::one()] }))
            .collect();
        Ok(IterationState { k, chosen: Vec::new(), bases, level: 1 })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Primes chosen so far, in order.
    pub fn chosen(&self) -> &[u128] {
        &self.chosen
    }

    pub fn j(&self) -> usize {
        self.chosen.len()
    }

    pub fn base_count(&self) -> usize {
        self.bases.len()
    }

    pub fn size(&self) -> usize {
        self.bases.values().map(|b| b.gamma.len()).sum()
    }

    pub fn elements(&self) -> IntSet {
        self.bases
            .iter()
            .flat_map(|(b, base)| base.gamma.iter().map(move |g| b * g))
            .collect()
    }

    pub fn coset(&self) -> Result<CosetDecomposition> {
        let primes = PrimeTuple::from_unsorted(self.chosen.clone())?;
        let gamma = self
            .bases
            .iter()
            .map(|(b, base)| (b.clone(), base.gamma.iter().cloned().collect()))
            .collect();
        Ok(CosetDecomposition { primes, gamma, level: self.level, source: self.elements() })
    }

    fn check(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InconsistentState(m));
        for (b, base) in &self.bases {
            if base.factors.value() != b {
                return fail(format!("cached factorization does not match base {b}"));
            }
            if self.chosen.iter().any(|&p| base.factors.valuation(p) > 0) {
                return fail(format!("base {b} is divisible by a chosen prime"));
            }
            if base.gamma.is_empty() {
                return fail(format!("empty fibre over base {b}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalBranch {
    SmallBase,
    HalfPairs,
}

/// Outcome of one refinement step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Terminal {
        branch: TerminalBranch,
        /// Ordered pairs whose gcd involves only chosen primes.
        good_pairs: u64,
    },
    Continue(Continuation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Continuation {
    pub prime: u128,
    /// `|N_A(p)|`.
    pub neighbourhood: u64,
    pub good_pairs: u64,
    pub dyadic_exponent: u32,
    pub state: IterationState,
    /// `|Ã| · 2(k-j) · log2|A| ≥ |A|`.
    pub size_bound_ok: bool,
}

/// Ordered pairs `(a, a')` of `A_j` with `gcd(b, b') = 1` for their bases.
fn good_pairs(state: &IterationState) -> u64 {
    let entries: Vec<(&BigInt, u64)> =
        state.bases.iter().map(|(b, base)| (b, base.gamma.len() as u64)).collect();
    let small: Option<Vec<(u128, u64)>> =
        entries.iter().map(|(b, n)| b.magnitude().to_u128().map(|m| (m, *n))).collect();
    match small {
        Some(xs) => xs
            .par_iter()
            .map(|(x, nx)| {
                nx * xs.iter().filter(|(y, _)| x.gcd(y) == 1).map(|(_, ny)| ny).sum::<u64>()
            })
            .sum(),
        None => entries
            .par_iter()
            .map(|(x, nx)| {
                nx * entries
                    .iter()
                    .filter(|(y, _)| x.gcd(y).is_one())
                    .map(|(_, ny)| ny)
                    .sum::<u64>()
            })
            .sum(),
    }
}

/// One step of the refinement: stop if the bases are few or mostly coprime,
/// otherwise factor out the most popular prime and pigeonhole fibre sizes.
pub fn iteration_step(state: &IterationState) -> Result<Step> {
    state.check()?;
    let k = state.k as u64;
    let n = state.size() as u64;
    if state.base_count() as u64 <= 2 * k {
        return Ok(Step::Terminal { branch: TerminalBranch::SmallBase, good_pairs: good_pairs(state) });
    }
    let good = good_pairs(state);
    if 2 * good as u128 >= n as u128 * n as u128 {
        return Ok(Step::Terminal { branch: TerminalBranch::HalfPairs, good_pairs: good });
    }
    let j = state.j() as u64;
    if j >= k {
        return Err(Error::InconsistentState(format!("no termination after {j} of {k} steps")));
    }

    let mut degree: BTreeMap<u128, u64> = BTreeMap::new();
    for base in state.bases.values() {
        for p in base.factors.primes() {
            *degree.entry(p).or_default() += base.gamma.len() as u64;
        }
    }
    let (prime, neighbourhood) = degree
        .iter()
        .fold(None, |best: Option<(u128, u64)>, (&p, &d)| match best {
            Some((_, bd)) if bd >= d => best,
            _ => Some((p, d)),
        })
        .ok_or_else(|| Error::InconsistentState("bases have no prime factors".into()))?;

    let mut merged: BTreeMap<BigInt, (FactoredInt, Vec<BigInt>)> = BTreeMap::new();
    for (b, base) in &state.bases {
        let e = base.factors.valuation(prime);
        if e == 0 {
            continue;
        }
        let shift = num_traits::pow(BigInt::from(prime), e as usize);
        let reduced = base.factors.without(&[prime]);
        let (quot, rem) = b.div_rem(&shift);
        if !num_traits::Zero::is_zero(&rem) || &quot != reduced.value() {
            return Err(Error::InvariantViolation(format!("bad regrouping of base {b}")));
        }
        let entry = merged.entry(quot).or_insert_with(|| (reduced, Vec::new()));
        entry.1.extend(base.gamma.iter().map(|g| g * &shift));
    }

    // pigeonhole on floor(log2 |Γ̃_b'|)
    let level_of = |len: usize| usize::BITS - 1 - len.leading_zeros();
    let mut per_level: BTreeMap<u32, u128> = BTreeMap::new();
    for (_, g) in merged.values() {
        *per_level.entry(level_of(g.len())).or_default() += 1;
    }
    let (dyadic_exponent, _) = per_level
        .iter()
        .map(|(&l, &count)| (l, count << l))
        .fold(None, |best: Option<(u32, u128)>, (l, score)| match best {
            Some((_, bs)) if bs >= score => best,
            _ => Some((l, score)),
        })
        .expect("neighbourhood is nonempty");

    let bases: BTreeMap<BigInt, Base> = merged
        .into_iter()
        .filter(|(_, (_, g))| level_of(g.len()) == dyadic_exponent)
        .map(|(b, (factors, mut gamma))| {
            gamma.sort_unstable();
            (b, Base { factors, gamma })
        })
        .collect();
    let mut chosen = state.chosen.clone();
    chosen.push(prime);
    let next = IterationState { k: state.k, chosen, bases, level: 1u64 << dyadic_exponent };

    let lhs = rational(next.size() as u64 * 2 * (k - j)) * log2_upper(&BigUint::from(n));
    let size_bound_ok = n < 2 || lhs >= rational(n);
    Ok(Step::Continue(Continuation {
        prime,
        neighbourhood,
        good_pairs: good,
        dyadic_exponent,
        state: next,
        size_bound_ok,
    }))
}

/// One line of the iteration trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub j: usize,
    pub size: usize,
    pub bases: usize,
    pub good_pairs: u64,
    #[serde(with = "crate::json::opt_big")]
    pub prime: Option<u128>,
    pub neighbourhood: Option<u64>,
    pub dyadic_exponent: Option<u32>,
    pub next_size: Option<usize>,
    pub size_bound_ok: Option<bool>,
    pub terminal: Option<TerminalBranch>,
}

/// The conclusion of the regular structure theorem for one set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub k: u32,
    pub source_size: usize,
    pub primes: PrimeTuple,
    #[serde(with = "crate::json::big_vec")]
    pub chosen_order: Vec<u128>,
    pub rank: usize,
    pub tilde_size: usize,
    pub base_size: usize,
    pub fibre_count: usize,
    pub level: u64,
    pub product_set_size: usize,
    /// `|A·A| / |A|` on the original set.
    #[serde(rename = "K", with = "crate::json::frac")]
    pub doubling: BigRational,
    /// `|A| / (2^k k! (log2|A|)^k)`.
    #[serde(with = "crate::json::frac")]
    pub size_bound: BigRational,
    pub size_bound_ok: bool,
    /// `4^{k+2} K |A| / |Ã|`.
    #[serde(with = "crate::json::frac")]
    pub base_bound: BigRational,
    pub base_small: bool,
    pub base_product: bool,
    pub base_bound_ok: bool,
    pub band_ok: bool,
    pub rank_ok: bool,
    pub reconstruction_ok: bool,
    pub steps_ok: bool,
    pub degenerate: bool,
    pub terminal: TerminalBranch,
    pub trace: Vec<TraceEntry>,
    #[serde(skip)]
    pub coset: CosetDecomposition,
    #[serde(skip)]
    pub fibred: FibredDecomposition,
}

impl StructureReport {
    pub fn all_ok(&self) -> bool {
        self.size_bound_ok
            && self.base_bound_ok
            && self.band_ok
            && self.rank_ok
            && self.reconstruction_ok
            && self.steps_ok
    }

    pub fn verify(&self) -> Result<()> {
        let checks = [
            ("size bound", self.size_bound_ok),
            ("base bound", self.base_bound_ok),
            ("dyadic band", self.band_ok),
            ("rank", self.rank_ok),
            ("reconstruction", self.reconstruction_ok),
            ("per-step size bound", self.steps_ok),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(Error::InvariantViolation(format!("{name} failed"))),
            None => Ok(()),
        }
    }
}

/// Runs the refinement to termination and checks the resulting bounds.
///
/// A singleton set is accepted; every bound then holds trivially and the
/// report is flagged `degenerate`.
pub fn regular_structure(a: &IntSet, k: u32) -> Result<StructureReport> {
    let mut state = IterationState::initial(a, k)?;
    let mut trace = Vec::new();
    let terminal = loop {
        let j = state.j();
        let size = state.size();
        let bases = state.base_count();
        match iteration_step(&state)? {
            Step::Terminal { branch, good_pairs } => {
                trace.push(TraceEntry {
                    j,
                    size,
                    bases,
                    good_pairs,
                    prime: None,
                    neighbourhood: None,
                    dyadic_exponent: None,
                    next_size: None,
                    size_bound_ok: None,
                    terminal: Some(branch),
                });
                break branch;
            }
            Step::Continue(c) => {
                trace.push(TraceEntry {
                    j,
                    size,
                    bases,
                    good_pairs: c.good_pairs,
                    prime: Some(c.prime),
                    neighbourhood: Some(c.neighbourhood),
                    dyadic_exponent: Some(c.dyadic_exponent),
                    next_size: Some(c.state.size()),
                    size_bound_ok: Some(c.size_bound_ok),
                    terminal: None,
                });
                state = c.state;
            }
        }
    };

    let coset = state.coset()?;
    let fibred = coset.to_fibred()?;
    let tilde = coset.source().clone();
    let reconstruction_ok = coset.validate().is_ok()
        && fibred.validate().is_ok()
        && fibred.source() == &tilde
        && tilde.is_subset(a);

    let n = a.len();
    let product_set_size = intsets::product_set(a, a).len();
    let doubling = BigRational::new(product_set_size.into(), n.into());
    let size_bound = if n >= 2 {
        let log = log2_upper(&BigUint::from(n));
        let denom = rational(BigInt::from(1u32) << k)
            * rational(factorial(k))
            * num_traits::pow(log, k as usize);
        rational(n) / denom
    } else {
        rational(1)
    };
    let size_bound_ok = rational(tilde.len()) >= size_bound;
    let base_size = coset.gamma().len();
    let four = rational(num_traits::pow(BigInt::from(4), k as usize + 2));
    let base_bound = four * &doubling * rational(n) / rational(tilde.len());
    let base_small = base_size as u64 <= 2 * k as u64;
    let base_product = rational(base_size) <= base_bound;
    let steps_ok = trace.iter().all(|t| t.size_bound_ok != Some(false));
    let chosen_order = state.chosen().to_vec();
    Ok(StructureReport {
        k,
        source_size: n,
        primes: coset.primes().clone(),
        rank: chosen_order.len(),
        rank_ok: chosen_order.len() <= k as usize,
        chosen_order,
        tilde_size: tilde.len(),
        base_size,
        fibre_count: fibred.fibre_count(),
        level: coset.level(),
        product_set_size,
        doubling,
        size_bound,
        size_bound_ok,
        base_bound,
        base_small,
        base_product,
        base_bound_ok: base_small || base_product,
        band_ok: coset.band_ok(),
        reconstruction_ok,
        steps_ok,
        degenerate: n < 2,
        terminal,
        trace,
        coset,
        fibred,
    })
}
