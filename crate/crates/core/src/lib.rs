//! Exact computational toolkit for the sum-product problem over integers
//! with few prime factors.
//!
//! The crate is organised bottom-up:
//!
//! - [`arith`]: factorization, valuations, `ω`, S-unit group membership.
//! - [`intsets`]: finite integer sets, sumsets, product sets, energies.
//! - [`structure`]: prime-support graphs, fibred and coset decompositions,
//!   and the iterated regular structure theorem.
//! - [`generators`]: progressions, Balog-Wooley sets, random almost-primes.
//! - [`fourier`]: trigonometric polynomials, p-adic scale partitions and
//!   square functions.
//! - [`dilate`]: difference counts along a rank-one or low-rank group.
//! - [`pipeline`] and [`io`]: the end-to-end experiment and its file formats.

pub mod arith;
pub mod bounds;
pub mod dilate;
pub mod error;
pub mod fourier;
pub mod generators;
pub mod intsets;
pub mod io;
pub mod json;
pub mod pipeline;
pub mod structure;

pub use error::{Error, Result};
pub use intsets::IntSet;
