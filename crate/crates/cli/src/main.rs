//! `fiberlab`: run sum-product experiments on integer sets from the shell.
//!
//! Every subcommand builds one JSON report. It goes to `--output` when
//! given, to stdout with `--json`, and otherwise a short `key: value`
//! summary of its scalar fields is printed. Exit status is 0 on success,
//! 1 when a checked bound or invariant fails, and 2 for bad input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fiberlab", version, about = "Sum-product experiments for integers with few prime factors")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Set file: one integer per line, `#` starts a comment.
    #[arg(long, short, global = true, visible_alias = "set")]
    pub input: Option<PathBuf>,
    /// Where to write the report (or the set, for `gen`).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Print the full JSON report on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Accept repeated values in the input file.
    #[arg(long, global = true)]
    pub dedupe: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a set and write it in set-file format.
    #[command(subcommand)]
    Gen(GenFamily),
    /// Additive and multiplicative energy of the input set.
    Energy,
    /// Sizes of A+A and A·A.
    Growth,
    /// Fibred decomposition over given primes, or over the heavy primes for `--k`.
    Decompose {
        /// Comma-separated primes.
        #[arg(long, value_delimiter = ',', conflicts_with = "k")]
        primes: Option<Vec<u128>>,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Regular coset structure of the input set.
    Structure {
        /// Bound on ω(a); defaults to the maximum over the set.
        #[arg(long)]
        k: Option<u32>,
    },
    /// Pairs with b1 - b2 = n·p^v.
    Xp {
        #[arg(long)]
        prime: u128,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        n: num_bigint::BigInt,
    },
    /// Pairs with (b1 - b2)/u a signed unit over the primes.
    GammaPairs {
        #[arg(long, value_delimiter = ',')]
        primes: Vec<u128>,
        /// Nonzero rational such as `3` or `-5/2`.
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        u: num_rational::BigRational,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = fiberlab::dilate::DEFAULT_FLOOR)]
        floor: usize,
    },
    /// Norms, square functions and sign multipliers of the indicator polynomial.
    FourierCheck {
        #[arg(long, value_delimiter = ',', default_value = "2")]
        primes: Vec<u128>,
        #[arg(long, default_value_t = 4)]
        q: u32,
        #[arg(long, default_value_t = fiberlab::fourier::DEFAULT_TRIALS)]
        trials: usize,
    },
    /// Structure theorem followed by the sum-product quantity.
    Pipeline {
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = fiberlab::pipeline::DEFAULT_EPS)]
        eps: f64,
    },
    /// Reference bound on the number of S-unit equation solutions.
    SunitBound {
        #[arg(long)]
        l: u32,
        #[arg(long)]
        r: u32,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenFamily {
    /// {1, ..., n}
    Interval {
        #[arg(long)]
        n: u64,
    },
    /// {a + d·i : 1 ≤ i ≤ n}
    Ap {
        #[arg(long, allow_hyphen_values = true)]
        a: num_bigint::BigInt,
        #[arg(long, allow_hyphen_values = true)]
        d: num_bigint::BigInt,
        #[arg(long)]
        n: u64,
    },
    /// {c·r^m : 0 ≤ m < count}
    Gp {
        #[arg(long, allow_hyphen_values = true)]
        c: num_bigint::BigInt,
        #[arg(long)]
        r: num_bigint::BigInt,
        #[arg(long)]
        count: u32,
    },
    /// Primes up to n.
    Primes {
        #[arg(long)]
        n: u64,
    },
    /// {p, p^2, ..., p^n}
    PrimePowers {
        #[arg(long)]
        p: u128,
        #[arg(long)]
        n: u32,
    },
    /// {1, p, ..., p^{n-1}} · {1, ..., 2n^2}, optionally perturbed.
    Bw {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: u128,
        /// Base length N; defaults to 2n^2.
        #[arg(long)]
        base_size: Option<u64>,
        /// Use the first N primes as the base instead of {1..N}.
        #[arg(long, conflicts_with = "perturb")]
        prime_base: bool,
        /// Fraction of base elements to delete or move.
        #[arg(long)]
        perturb: Option<f64>,
    },
    /// Random products of at most k primes from a pool.
    AlmostPrime {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        k: u32,
        /// Comma-separated prime pool.
        #[arg(long, value_delimiter = ',', required_unless_present = "pool_upto")]
        pool: Option<Vec<u128>>,
        /// Use all primes up to this bound as the pool.
        #[arg(long)]
        pool_upto: Option<u64>,
        #[arg(long, default_value_t = 1)]
        max_exponent: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(commands::Status::Ok) => ExitCode::SUCCESS,
        Ok(commands::Status::CheckFailed) => {
            eprintln!("error: a checked bound or invariant failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_bug() { 1 } else { 2 })
        }
    }
}
