//! Structural decompositions of sets whose elements have few prime factors.
//!
//! - [`graph`]: the element/prime incidence graph and heavy-prime pruning.
//! - [`fibred`]: decompositions `A = ⋃ p^v · B_v` by valuation vectors, with
//!   the Chang energy ratio and the product-set witness built on them.
//! - [`regular`]: the iterated coset decomposition `Ã = ⋃ b · Γ_b` with all
//!   `|Γ_b|` in one dyadic band.

pub mod fibred;
pub mod graph;
pub mod regular;

pub use fibred::{
    chang_ratio, fibred_decompose, fibred_structure, three_halves_witness, ChangRatio,
    FibredDecomposition, FibredStructure, ThreeHalvesWitness,
};
pub use graph::{heavy_prune, prime_support_graph, BipartiteGraph, HeavyPrune};
pub use regular::{
    iteration_step, regular_structure, CosetDecomposition, IterationState, Step,
    StructureReport, TerminalBranch,
};

use rayon::prelude::*;

use crate::arith::{self, FactoredInt};
use crate::error::{Error, Result};
use crate::intsets::IntSet;

/// Factors every element, rejecting 0.
pub(crate) fn factor_all(a: &IntSet) -> Result<Vec<FactoredInt>> {
    if a.contains_zero() {
        return Err(Error::ZeroElement);
    }
    a.as_slice().par_iter().map(arith::factorize).collect()
}

/// Factors every element and checks `ω(a) ≤ k`.
pub(crate) fn factor_with_omega(a: &IntSet, k: u32) -> Result<Vec<FactoredInt>> {
    let factored = factor_all(a)?;
    let offending: Vec<String> = factored
        .iter()
        .filter(|f| f.omega() > k)
        .map(|f| f.value().to_string())
        .collect();
    if !offending.is_empty() {
        return Err(Error::OmegaTooLarge { k, elements: offending });
    }
    Ok(factored)
}
