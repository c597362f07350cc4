//! Collision trees, pseudo-trajectories and Monte Carlo evaluation of the
//! Duhamel series for the one-particle correlation function.
//!
//! Particles of a pseudo-trajectory with `n` roots are indexed `0..n` for the
//! roots (the tagged particles at the final time `t`) and `n + i` for the
//! fresh particle added at the `i`-th branching time `t_{i+1}` (0-based `i`).

mod duhamel;
mod pseudo;

pub use duhamel::{mc_f1_estimate, mc_moment_estimate, DuhamelEstimate, DuhamelOptions, TermEstimate};
pub use pseudo::{
    build_pseudo, build_pseudo_limit, classify_pair_clustering, detect_recollisions, tree_weight, ContactEvent,
    ContactKind, Insertion, PseudoTrajectory, RecollisionReport, Segment, TreeParams, DEFAULT_CROSSING_TOL,
};

use num_bigint::BigUint;
use rand::Rng;

use crate::error::{Error, Result};

/// Collision tree with `n` roots: `parents[i]` is the particle the fresh
/// particle `n + i` attaches to, one of the roots or an earlier fresh particle.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CollisionTree {
    pub n: usize,
    pub parents: Vec<usize>,
}

impl CollisionTree {
    pub fn new(n: usize, parents: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("a collision tree needs at least one root".into()));
        }
        for (i, &a) in parents.iter().enumerate() {
            if a >= n + i {
                return Err(Error::InvalidParam(format!("branch {i} attaches to {a}, only {} particles exist", n + i)));
            }
        }
        Ok(CollisionTree { n, parents })
    }

    /// Number of branching points.
    pub fn m(&self) -> usize {
        self.parents.len()
    }

    /// Uniform draw from the `n (n+1) ... (n+m-1)` trees.
    pub fn sample<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        CollisionTree { n, parents: (0..m).map(|i| rng.random_range(0..n + i)).collect() }
    }
}

/// `n (n+1) ... (n+m-1)`.
pub fn count_trees(n: usize, m: usize) -> BigUint {
    (n..n + m).fold(BigUint::from(1u32), |acc, k| acc * BigUint::from(k))
}

/// All trees with `n` roots and `m` branchings, in lexicographic order.
pub fn enumerate_trees(n: usize, m: usize) -> Vec<CollisionTree> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m);
    fn rec(n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<CollisionTree>) {
        if cur.len() == m {
            out.push(CollisionTree { n, parents: cur.clone() });
            return;
        }
        for a in 0..n + cur.len() {
            cur.push(a);
            rec(n, m, cur, out);
            cur.pop();
        }
    }
    if n > 0 {
        rec(n, m, &mut cur, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn counts_match_enumeration() {
        for n in 1..=3 {
            for m in 0..=5 {
                let all = enumerate_trees(n, m);
                let distinct: HashSet<_> = all.iter().collect();
                assert_eq!(distinct.len(), all.len());
                assert_eq!(BigUint::from(all.len()), count_trees(n, m), "n={n} m={m}");
                assert!(all.iter().all(|t| CollisionTree::new(t.n, t.parents.clone()).is_ok()));
            }
        }
        assert_eq!(count_trees(2, 3), BigUint::from(24u32));
        assert_eq!(count_trees(4, 0), BigUint::from(1u32));
    }

    #[test]
    fn single_root_count_is_factorial() {
        let mut fact = BigUint::from(1u32);
        for m in 1..=30usize {
            fact *= BigUint::from(m);
            assert_eq!(count_trees(1, m), fact);
        }
        assert!(count_trees(1, 25) > BigUint::from(u64::MAX));
    }

    #[test]
    fn invalid_labels_rejected() {
        assert!(CollisionTree::new(1, vec![0, 2]).is_err());
        assert!(CollisionTree::new(0, vec![]).is_err());
    }
}
