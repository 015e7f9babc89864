use std::collections::BTreeSet;

use num_bigint::BigInt;
use serde::Serialize;

use crate::arith::{FactoredInt, PrimeTuple};
use crate::error::{Error, Result};
use crate::intsets::IntSet;

/// A bipartite graph `G ⊆ X × Y` stored as sorted neighbour lists of `X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph<L, R> {
    left: Vec<L>,
    right: Vec<R>,
    adj: Vec<Vec<usize>>,
}

impl<L, R> BipartiteGraph<L, R> {
    pub fn new(left: Vec<L>, right: Vec<R>, mut adj: Vec<Vec<usize>>) -> Result<Self> {
        if adj.len() != left.len() {
            return Err(Error::DimensionMismatch { expected: left.len(), got: adj.len() });
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            if list.last().is_some_and(|&y| y >= right.len()) {
                return Err(Error::BadInput("neighbour index out of range".into()));
            }
        }
        Ok(BipartiteGraph { left, right, adj })
    }

    pub fn left(&self) -> &[L] {
        &self.left
    }

    pub fn right(&self) -> &[R] {
        &self.right
    }

    /// `N_Y(x)` as indices into [`Self::right`].
    pub fn neighbours(&self, x: usize) -> &[usize] {
        &self.adj[x]
    }

    pub fn left_degree(&self, x: usize) -> usize {
        self.adj[x].len()
    }

    /// `|N_X(y)|` for every right vertex.
    pub fn right_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.right.len()];
        for list in &self.adj {
            for &y in list {
                deg[y] += 1;
            }
        }
        deg
    }

    /// `N_X(y)` for every right vertex, each sorted.
    pub fn right_neighbourhoods(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.right.len()];
        for (x, list) in self.adj.iter().enumerate() {
            for &y in list {
                out[y].push(x);
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }
}

/// The incidence graph between the elements of `A` and the primes dividing
/// them, with the primes of `exclude` removed from the right side.
pub fn prime_support_graph(a: &IntSet, exclude: &PrimeTuple) -> Result<BipartiteGraph<BigInt, u128>> {
    let factored = super::factor_all(a)?;
    Ok(support_graph_of(&factored, exclude))
}

pub(crate) fn support_graph_of(
    factored: &[FactoredInt],
    exclude: &PrimeTuple,
) -> BipartiteGraph<BigInt, u128> {
    let right: Vec<u128> = factored
        .iter()
        .flat_map(|f| f.primes())
        .filter(|&p| !exclude.contains(p))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let adj = factored
        .iter()
        .map(|f| {
            f.primes()
                .filter_map(|p| right.binary_search(&p).ok())
                .collect::<Vec<_>>()
        })
        .collect();
    let left = factored.iter().map(|f| f.value().clone()).collect();
    BipartiteGraph { left, right, adj }
}

/// Result of pruning the heavy right vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeavyPrune {
    /// Indices `y` with `|N_X(y)| ≥ |X| / 2k`.
    pub heavy: Vec<usize>,
    /// Ordered pairs `(x, x')`, diagonal included, whose common
    /// neighbourhood leaves the heavy set.
    pub bad_pairs: u64,
    pub heavy_bound_ok: bool,
    pub bad_pairs_ok: bool,
}

/// Keeps the right vertices of degree at least `|X|/2k`.
///
/// If every left degree is at most `k`, at most `2k^2` vertices are kept and
/// at most `|X|^2/2` ordered pairs have a common neighbour outside them.
/// Both guarantees are recorded in the result.
pub fn heavy_prune<L, R>(g: &BipartiteGraph<L, R>, k: u32) -> Result<HeavyPrune> {
    if k == 0 {
        return Err(Error::BadParameter("k must be positive".into()));
    }
    if let Some(x) = (0..g.left.len()).find(|&x| g.left_degree(x) > k as usize) {
        return Err(Error::DegreeTooHigh { vertex: x, degree: g.left_degree(x), k });
    }
    let n = g.left.len() as u64;
    let twice_k = 2 * k as u64;
    let degrees = g.right_degrees();
    // degree-0 vertices touch no pair and are never kept
    let is_heavy: Vec<bool> =
        degrees.iter().map(|&d| d > 0 && twice_k * d as u64 >= n).collect();
    let heavy: Vec<usize> = (0..degrees.len()).filter(|&y| is_heavy[y]).collect();

    let by_right = g.right_neighbourhoods();
    let mut stamp = vec![usize::MAX; g.left.len()];
    let mut bad_pairs = 0u64;
    for x in 0..g.left.len() {
        for &y in g.neighbours(x) {
            if is_heavy[y] {
                continue;
            }
            for &x2 in &by_right[y] {
                if stamp[x2] != x {
                    stamp[x2] = x;
                    bad_pairs += 1;
                }
            }
        }
    }
    let k2 = k as u64 * k as u64;
    Ok(HeavyPrune {
        heavy_bound_ok: heavy.len() as u64 <= 2 * k2,
        bad_pairs_ok: 2 * bad_pairs <= n * n,
        heavy,
        bad_pairs,
    })
}

impl HeavyPrune {
    pub fn verify(&self) -> Result<()> {
        if !self.heavy_bound_ok {
            return Err(Error::InvariantViolation(format!(
                "heavy set of size {} exceeds 2k^2",
                self.heavy.len()
            )));
        }
        if !self.bad_pairs_ok {
            return Err(Error::InvariantViolation(format!(
                "{} bad pairs exceed |X|^2/2",
                self.bad_pairs
            )));
        }
        Ok(())
    }
}
