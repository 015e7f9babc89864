//! Factorization back end: a shared prime sieve for trial division, plus
//! Miller-Rabin and Pollard-Brent rho over `u128` in Montgomery form.

use std::sync::OnceLock;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Trial division runs over every prime up to this limit.
pub const TRIAL_LIMIT: u32 = 1_000_000;

/// Montgomery arithmetic below needs `n < 2^127`.
pub(crate) const MONTGOMERY_LIMIT: u128 = 1 << 127;

const RHO_SEED: u64 = 0x5eed_f1be_71ab;
const RHO_ATTEMPTS: usize = 12;
const RHO_MAX_STEPS: u64 = 1 << 26;

static SMALL_PRIMES: OnceLock<Vec<u32>> = OnceLock::new();

/// All primes up to [`TRIAL_LIMIT`], built once and shared.
pub fn small_primes() -> &'static [u32] {
    SMALL_PRIMES.get_or_init(|| sieve(TRIAL_LIMIT))
}

pub(crate) fn sieve(limit: u32) -> Vec<u32> {
    let limit = limit as usize;
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        primes.push(i as u32);
        let mut j = i * i;
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

#[inline]
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & MASK);
    let (b1, b0) = (b >> 64, b & MASK);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
    let lo = (p00 & MASK) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

/// Montgomery context for an odd modulus below 2^127, with R = 2^128.
struct Montgomery {
    n: u128,
    neg_inv: u128,
    r2: u128,
}

impl Montgomery {
    fn new(n: u128) -> Self {
        debug_assert!(n % 2 == 1 && n < MONTGOMERY_LIMIT);
        let mut inv = n;
        for _ in 0..7 {
            inv = inv.wrapping_mul(2u128.wrapping_sub(n.wrapping_mul(inv)));
        }
        let mut r = (u128::MAX % n + 1) % n;
        for _ in 0..128 {
            r = (r << 1) % n;
        }
        Montgomery { n, neg_inv: inv.wrapping_neg(), r2: r }
    }

    #[inline]
    fn redc(&self, hi: u128, lo: u128) -> u128 {
        let m = lo.wrapping_mul(self.neg_inv);
        let (mh, _) = mul_wide(m, self.n);
        let carry = (lo != 0) as u128;
        let t = hi + mh + carry;
        if t >= self.n {
            t - self.n
        } else {
            t
        }
    }

    #[inline]
    fn mul(&self, a: u128, b: u128) -> u128 {
        let (hi, lo) = mul_wide(a, b);
        self.redc(hi, lo)
    }

    fn to_mont(&self, a: u128) -> u128 {
        self.mul(a % self.n, self.r2)
    }

    fn from_mont(&self, a: u128) -> u128 {
        self.redc(0, a)
    }

    fn pow(&self, base: u128, mut e: u128) -> u128 {
        let mut result = self.to_mont(1);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        result
    }
}

const MR_BASES: [u128; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

/// Primality for `n < 2^127`.
///
/// Exact by trial division up to 10^12; Miller-Rabin with the first 13
/// prime bases is deterministic below 3.3·10^24, and 20 bases are used above.
pub fn is_prime_u128(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for &p in small_primes().iter().take(64) {
        let p = p as u128;
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let limit = TRIAL_LIMIT as u128;
    if n <= limit * limit {
        return small_primes()
            .iter()
            .map(|&p| p as u128)
            .take_while(|p| p * p <= n)
            .all(|p| n % p != 0);
    }
    assert!(n < MONTGOMERY_LIMIT, "primality test limited to n < 2^127");
    miller_rabin(n)
}

fn miller_rabin(n: u128) -> bool {
    let mont = Montgomery::new(n);
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    let one = mont.to_mont(1);
    let minus_one = mont.to_mont(n - 1);
    let bases = if n < 3_317_044_064_679_887_385_961_981 { 13 } else { MR_BASES.len() };
    'witness: for &a in &MR_BASES[..bases] {
        let mut x = mont.pow(mont.to_mont(a), d);
        if x == one || x == minus_one {
            continue;
        }
        for _ in 1..s {
            x = mont.mul(x, x);
            if x == minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Finds a nontrivial factor of an odd composite `n < 2^127`.
fn pollard_brent(n: u128, rng: &mut ChaCha8Rng) -> Option<u128> {
    let mont = Montgomery::new(n);
    for _ in 0..RHO_ATTEMPTS {
        let c = mont.to_mont(rng.gen_range(1..n));
        let mut y = mont.to_mont(rng.gen_range(0..n));
        let step = |v: u128| {
            let s = mont.mul(v, v) + c;
            if s >= n {
                s - n
            } else {
                s
            }
        };
        const BATCH: u64 = 128;
        let mut r: u64 = 1;
        let mut q = mont.to_mont(1);
        let mut g = 1u128;
        let mut x = y;
        let mut ys = y;
        let mut steps = 0u64;
        while g == 1 && steps < RHO_MAX_STEPS {
            x = y;
            for _ in 0..r {
                y = step(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = step(y);
                    q = mont.mul(q, x.abs_diff(y));
                }
                g = mont.from_mont(q).gcd(&n);
                k += BATCH;
            }
            steps += r;
            r *= 2;
        }
        if g == n {
            loop {
                ys = step(ys);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g > 1 && g < n {
            return Some(g);
        }
    }
    None
}

/// Completes the factorization of `n` once trial division has removed every
/// prime up to [`TRIAL_LIMIT`]. Returns `false` if rho gives up.
pub(crate) fn split_large(n: u128, out: &mut Vec<(u128, u32)>) -> bool {
    if n == 1 {
        return true;
    }
    if is_prime_u128(n) {
        push_factor(out, n, 1);
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(RHO_SEED ^ (n as u64));
    let Some(d) = pollard_brent(n, &mut rng) else {
        return false;
    };
    let mut rest = n / d;
    let mut e = 1;
    while rest % d == 0 {
        rest /= d;
        e += 1;
    }
    let mut inner = Vec::new();
    if !split_large(d, &mut inner) {
        return false;
    }
    for (p, k) in inner {
        push_factor(out, p, k * e);
    }
    split_large(rest, out)
}

pub(crate) fn push_factor(out: &mut Vec<(u128, u32)>, p: u128, e: u32) {
    match out.iter_mut().find(|(q, _)| *q == p) {
        Some(entry) => entry.1 += e,
        None => out.push((p, e)),
    }
}

/// Trial division of `n` by the shared sieve. Returns the cofactor left
/// after every prime `p` with `p^2 <= cofactor` has been tried.
pub(crate) fn trial_divide(mut n: u128, out: &mut Vec<(u128, u32)>) -> u128 {
    for &p in small_primes() {
        let p = p as u128;
        if p * p > n {
            break;
        }
        if n < u64::MAX as u128 {
            let (mut m, q) = (n as u64, p as u64);
            if m % q == 0 {
                let mut e = 0;
                while m % q == 0 {
                    m /= q;
                    e += 1;
                }
                push_factor(out, p, e);
                n = m as u128;
            }
        } else if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            push_factor(out, p, e);
        }
    }
    n
}

/// True when trial division alone has proven `cofactor` to be 1 or prime.
pub(crate) fn trial_complete(cofactor: u128) -> bool {
    let limit = TRIAL_LIMIT as u128;
    cofactor < limit * limit
}
