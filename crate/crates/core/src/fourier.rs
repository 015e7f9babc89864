//! Trigonometric polynomials on `R/Z`, p-adic scale partitions of the
//! frequencies, square functions and sign multipliers.
//!
//! `L^q` norms are Riemann sums over a uniform grid `t_j = j/N` evaluated
//! with an inverse FFT. For even `q` and `N > q·F` the sum is exact up to
//! rounding, since `|f|^q` is then a trigonometric polynomial whose nonzero
//! frequencies are not multiples of `N`. Grid sums are accumulated in fixed
//! chunks and the chunk totals added in index order, so results do not
//! depend on the thread count.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Serialize, Serializer};

use crate::arith::{is_prime_u128, PrimeTuple};
use crate::error::{Error, Result};
use crate::intsets::{self, IntSet};
use crate::structure::FibredDecomposition;

/// Grid size for odd or fractional exponents, before scaling by `F`.
pub const DEFAULT_GRID: usize = 4096;
/// Largest number of classes whose sign patterns are enumerated outright.
pub const EXHAUSTIVE_CLASSES: usize = 16;
pub const DEFAULT_TRIALS: usize = 256;
const MAX_GRID: usize = 1 << 26;
const SUM_CHUNK: usize = 4096;
const PARALLEL_GRID: usize = 1 << 15;
/// Gray-code updates between full recomputations of the grid.
const REFRESH: u64 = 256;

/// `f(t) = Σ ĉ(n) e(nt)` with finitely many nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPoly {
    coeffs: BTreeMap<i64, Complex64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Sums repeated frequencies and drops zero coefficients.
    pub fn from_coeffs(coeffs: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut map: BTreeMap<i64, Complex64> = BTreeMap::new();
        for (n, c) in coeffs {
            *map.entry(n).or_default() += c;
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        TrigPoly { coeffs: map }
    }

    /// The indicator polynomial `Σ_{a ∈ A} e(at)`.
    pub fn from_set(a: &IntSet) -> Result<Self> {
        let coeffs = a
            .iter()
            .map(|x| {
                x.to_i64()
                    .map(|n| (n, Complex64::new(1.0, 0.0)))
                    .ok_or_else(|| Error::BadInput(format!("frequency {x} does not fit in i64")))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(TrigPoly { coeffs })
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Complex64> {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `F = max |n|` over the support, 0 for the zero polynomial.
    pub fn max_freq(&self) -> u64 {
        self.coeffs.keys().map(|n| n.unsigned_abs()).max().unwrap_or(0)
    }

    /// `Σ |ĉ(n)|^2`.
    pub fn coeff_l2_squared(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&n, &c)| c * Complex64::from_polar(1.0, std::f64::consts::TAU * n as f64 * t))
            .sum()
    }

    /// `f(j/N)` for `j = 0, ..., N-1`.
    pub fn grid(&self, n: usize) -> Vec<Complex64> {
        grids(&[self], n).pop().expect("one grid")
    }
}

/// Values of several polynomials on the same grid, sharing one FFT plan.
fn grids(polys: &[&TrigPoly], n: usize) -> Vec<Vec<Complex64>> {
    let plan = FftPlanner::<f64>::new().plan_fft_inverse(n);
    polys
        .iter()
        .map(|f| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for (&k, &c) in &f.coeffs {
                buf[k.rem_euclid(n as i64) as usize] += c;
            }
            plan.process(&mut buf);
            buf
        })
        .collect()
}

fn pow_sq(sq: f64, q: f64) -> f64 {
    if q.fract() == 0.0 && (q as i64) % 2 == 0 {
        sq.powi((q as i64 / 2) as i32)
    } else {
        sq.powf(q / 2.0)
    }
}

/// `(1/N) Σ_j h(j)` in fixed chunks.
fn grid_mean(n: usize, h: impl Fn(usize) -> f64 + Sync) -> f64 {
    let chunks = n.div_ceil(SUM_CHUNK);
    let chunk_sum = |c: usize| -> f64 {
        let lo = c * SUM_CHUNK;
        let hi = (lo + SUM_CHUNK).min(n);
        (lo..hi).map(&h).sum()
    };
    let partial: Vec<f64> = if n >= PARALLEL_GRID {
        (0..chunks).into_par_iter().map(chunk_sum).collect()
    } else {
        (0..chunks).map(chunk_sum).collect()
    };
    partial.iter().sum::<f64>() / n as f64
}

fn power_mean(values: &[Complex64], q: f64) -> f64 {
    grid_mean(values.len(), |j| pow_sq(values[j].norm_sqr(), q))
}

fn check_exponent(q: f64) -> Result<()> {
    if !q.is_finite() || q < 1.0 {
        return Err(Error::BadExponent(q.to_string()));
    }
    Ok(())
}

fn is_even(q: f64) -> bool {
    q.fract() == 0.0 && (q as i64) % 2 == 0
}

fn choose_grid(degree: u64, q: f64, requested: Option<usize>) -> Result<usize> {
    let n = match requested {
        Some(0) => return Err(Error::BadParameter("grid must be positive".into())),
        Some(n) => n,
        None if is_even(q) => (degree as usize + 1).next_power_of_two(),
        None => DEFAULT_GRID.max(8 * degree as usize).next_power_of_two(),
    };
    if n > MAX_GRID {
        return Err(Error::BadParameter(format!("grid of {n} points exceeds {MAX_GRID}")));
    }
    Ok(n)
}

/// A grid-evaluated norm together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    #[serde(with = "crate::json::real")]
    pub q: f64,
    #[serde(with = "crate::json::real")]
    pub value: f64,
    /// The grid mean of `|·|^q`, i.e. `value^q`.
    #[serde(with = "crate::json::real")]
    pub power: f64,
    pub grid: usize,
    pub exact: bool,
}

/// `‖f‖_q = (∫ |f|^q)^{1/q}`.
pub fn lq_norm(f: &TrigPoly, q: f64, grid: Option<usize>) -> Result<NormReport> {
    check_exponent(q)?;
    let degree = (q.ceil() as u64).saturating_mul(f.max_freq());
    let n = choose_grid(degree, q, grid)?;
    let power = power_mean(&f.grid(n), q);
    Ok(NormReport {
        q,
        value: power.powf(1.0 / q),
        power,
        grid: n,
        exact: is_even(q) && n as u64 > degree,
    })
}

/// The class of a frequency: `None` for 0, otherwise its valuations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScaleKey {
    Zero,
    Scale(Vec<u32>),
}

impl fmt::Display for ScaleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleKey::Zero => write!(f, "zero"),
            ScaleKey::Scale(v) => {
                write!(f, "(")?;
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl Serialize for ScaleKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Frequencies grouped by their valuations at a list of primes.
///
/// A refinement concatenates the prime lists, so its key is the pair of
/// keys. Frequency 0 always forms its own class.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ScalePartition {
    #[serde(with = "crate::json::big_vec")]
    primes: Vec<u128>,
}

impl ScalePartition {
    /// All nonzero frequencies in one class.
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn padic(p: u128) -> Result<Self> {
        if !is_prime_u128(p) {
            return Err(Error::NotPrime(p.to_string()));
        }
        Ok(ScalePartition { primes: vec![p] })
    }

    pub fn from_primes(primes: &PrimeTuple) -> Self {
        ScalePartition { primes: primes.as_slice().to_vec() }
    }

    pub fn refine(&self, other: &ScalePartition) -> ScalePartition {
        let mut primes = self.primes.clone();
        primes.extend_from_slice(&other.primes);
        ScalePartition { primes }
    }

    pub fn primes(&self) -> &[u128] {
        &self.primes
    }

    pub fn key(&self, n: i64) -> ScaleKey {
        if n == 0 {
            return ScaleKey::Zero;
        }
        let m = n.unsigned_abs() as u128;
        ScaleKey::Scale(
            self.primes
                .iter()
                .map(|&p| {
                    let (mut m, mut e) = (m, 0);
                    while m % p == 0 {
                        m /= p;
                        e += 1;
                    }
                    e
                })
                .collect(),
        )
    }

    /// `f = Σ_P f_P` split by class; only occupied classes appear.
    pub fn classes(&self, f: &TrigPoly) -> BTreeMap<ScaleKey, TrigPoly> {
        let mut out: BTreeMap<ScaleKey, TrigPoly> = BTreeMap::new();
        for (&n, &c) in &f.coeffs {
            out.entry(self.key(n)).or_default().coeffs.insert(n, c);
        }
        out
    }
}

/// `p`-adic scales: `n` and `n'` share a class iff `v_p(n) = v_p(n')`.
pub fn padic_partition(p: u128) -> Result<ScalePartition> {
    ScalePartition::padic(p)
}

pub fn refine(a: &ScalePartition, b: &ScalePartition) -> ScalePartition {
    a.refine(b)
}

/// `(S_P f)(t) = (Σ_P |f_P(t)|^2)^{1/2}`.
pub fn square_function(f: &TrigPoly, partition: &ScalePartition, t: f64) -> f64 {
    partition
        .classes(f)
        .values()
        .map(|g| g.eval(t).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `‖S_P f‖_q` on a grid of more than `2qF` points.
pub fn sq_norm(
    f: &TrigPoly,
    partition: &ScalePartition,
    q: f64,
    grid: Option<usize>,
) -> Result<NormReport> {
    check_exponent(q)?;
    let degree = 2 * (q.ceil() as u64).saturating_mul(f.max_freq());
    let n = choose_grid(degree, q, grid)?;
    let classes = partition.classes(f);
    let polys: Vec<&TrigPoly> = classes.values().collect();
    let values = grids(&polys, n);
    let power = grid_mean(n, |j| {
        let s: f64 = values.iter().map(|g| g[j].norm_sqr()).sum();
        pow_sq(s, q)
    });
    Ok(NormReport {
        q,
        value: power.powf(1.0 / q),
        power,
        grid: n,
        exact: is_even(q) && n as u64 > degree,
    })
}

/// `f_ε = Σ ε(n) ĉ(n) e(nt)` with `ε` constant on classes.
pub fn sign_multiplier(
    f: &TrigPoly,
    partition: &ScalePartition,
    eps: &BTreeMap<ScaleKey, i8>,
) -> Result<TrigPoly> {
    let mut coeffs = BTreeMap::new();
    for (&n, &c) in &f.coeffs {
        let key = partition.key(n);
        let sign = *eps.get(&key).ok_or_else(|| Error::MissingKey(key.to_string()))?;
        if sign != 1 && sign != -1 {
            return Err(Error::BadParameter(format!("sign {sign} for class {key}")));
        }
        coeffs.insert(n, c * sign as f64);
    }
    Ok(TrigPoly { coeffs })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassSign {
    pub class: ScaleKey,
    pub sign: i8,
}

/// Norm ratios of `f` against its square function and its sign multipliers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurkholderStudy {
    #[serde(with = "crate::json::real")]
    pub q: f64,
    pub classes: usize,
    pub exhaustive: bool,
    pub patterns: u64,
    pub norm: NormReport,
    pub square_norm: NormReport,
    /// `‖f‖_q / ‖S_P f‖_q`.
    #[serde(with = "crate::json::real")]
    pub ratio_square_fn: f64,
    /// `max_ε ‖f‖_q / ‖f_ε‖_q`.
    #[serde(with = "crate::json::real")]
    pub max_ratio_multiplier: f64,
    pub witness: Vec<ClassSign>,
}

/// Compares `‖f‖_q` with `‖S_P f‖_q` and with `‖f_ε‖_q`.
///
/// Sign patterns are enumerated outright up to a global flip, which leaves
/// every norm unchanged, when at most [`EXHAUSTIVE_CLASSES`] classes are
/// occupied; otherwise `trials` patterns are drawn from `seed`.
pub fn burkholder_ratio_study(
    f: &TrigPoly,
    partition: &ScalePartition,
    q: f64,
    trials: usize,
    seed: u64,
) -> Result<BurkholderStudy> {
    check_exponent(q)?;
    let degree = (q.ceil() as u64).saturating_mul(f.max_freq());
    let n = choose_grid(degree, q, None)?;
    let square_norm = sq_norm(f, partition, q, None)?;
    let classes = partition.classes(f);
    let keys: Vec<ScaleKey> = classes.keys().cloned().collect();
    let polys: Vec<&TrigPoly> = classes.values().collect();
    let class_grids = grids(&polys, n);
    let m = keys.len();

    let combine = |signs: &[i8]| -> Vec<Complex64> {
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        for (grid, &s) in class_grids.iter().zip(signs) {
            for (x, y) in g.iter_mut().zip(grid) {
                *x += *y * s as f64;
            }
        }
        g
    };
    let plus = vec![1i8; m];
    let base_power = power_mean(&combine(&plus), q);
    let norm = NormReport {
        q,
        value: base_power.powf(1.0 / q),
        power: base_power,
        grid: n,
        exact: is_even(q) && n as u64 > degree,
    };

    let mut best = (1.0f64, plus.clone());
    let mut consider = |power: f64, signs: &[i8]| {
        let ratio = (base_power / power).powf(1.0 / q);
        if ratio > best.0 {
            best = (ratio, signs.to_vec());
        }
    };
    let exhaustive = m <= EXHAUSTIVE_CLASSES;
    let patterns: u64;
    if m <= 1 {
        patterns = 1;
    } else if exhaustive {
        // Gray code over the signs of classes 1..m, class 0 fixed to +1
        let total = 1u64 << (m - 1);
        let mut signs = plus.clone();
        let mut g = combine(&signs);
        for i in 1..total {
            let c = i.trailing_zeros() as usize + 1;
            signs[c] = -signs[c];
            if i % REFRESH == 0 {
                g = combine(&signs);
            } else {
                let w = 2.0 * signs[c] as f64;
                for (x, y) in g.iter_mut().zip(&class_grids[c]) {
                    *x += *y * w;
                }
            }
            consider(power_mean(&g, q), &signs);
        }
        patterns = total;
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..trials {
            let signs: Vec<i8> = (0..m).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            consider(power_mean(&combine(&signs), q), &signs);
        }
        patterns = trials as u64;
    }
    let (max_ratio_multiplier, witness_signs) = if f.is_zero() { (f64::NAN, plus) } else { best };
    let witness = keys
        .into_iter()
        .zip(witness_signs)
        .map(|(class, sign)| ClassSign { class, sign })
        .collect();
    Ok(BurkholderStudy {
        q,
        classes: m,
        exhaustive,
        patterns,
        norm,
        square_norm,
        ratio_square_fn: norm.value / square_norm.value,
        max_ratio_multiplier,
        witness,
    })
}

/// `E_+(A)` against the sum of energies between all pairs of pieces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyDecomposition {
    pub rank: usize,
    pub fibres: usize,
    #[serde(with = "crate::json::big")]
    pub lhs: BigUint,
    #[serde(with = "crate::json::big")]
    pub rhs: BigUint,
    /// `(lhs/rhs)^{1/r}` when `lhs > rhs`, else 1.
    #[serde(with = "crate::json::real")]
    pub empirical_c: f64,
}

pub fn energy_decomposition_check(d: &FibredDecomposition) -> Result<EnergyDecomposition> {
    if d.fibres().is_empty() {
        return Err(Error::EmptyDecomposition);
    }
    let a = d.source();
    let lhs = intsets::additive_energy(a, a);
    let pieces: Vec<IntSet> = d.fibres().keys().map(|v| d.piece(v)).collect();
    let rhs: BigUint = pieces
        .par_iter()
        .map(|x| pieces.iter().map(|y| intsets::additive_energy(x, y)).sum::<BigUint>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let r = d.primes().len();
    let empirical_c = if lhs > rhs && r > 0 {
        let ratio = crate::bounds::to_f64(&num_rational::BigRational::new(
            lhs.clone().into(),
            rhs.clone().into(),
        ));
        ratio.powf(1.0 / r as f64)
    } else {
        1.0
    };
    Ok(EnergyDecomposition { rank: r, fibres: pieces.len(), lhs, rhs, empirical_c })
}
