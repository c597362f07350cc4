use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hs_dynamics::SystemState;
use crate::stats::{summarize, KahanSum};

use super::partitions::{mobius_weight, set_partitions};
use super::test_function::TestFunction;

/// Highest correlation order handled by the estimators.
pub const MAX_ORDER: usize = 4;

/// Mean of per-replica values with its spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let s = summarize(xs);
        Estimate { mean: s.mean, variance: s.variance, se: s.se, samples: s.n }
    }
}

/// Sum over ordered tuples of distinct particles of `prod_k values[k][i_k]`,
/// where `values[k][i]` is `h_k` at particle `i`.
///
/// Uses inclusion–exclusion over set partitions of the slots: the sum over all
/// tuples restricted to a partition's coincidences factorizes into power sums,
/// and Möbius inversion on the partition lattice isolates the distinct tuples.
pub fn distinct_tuple_sum(values: &[&[f64]]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 1.0;
    }
    let len = values[0].len();
    let mut total = KahanSum::new();
    for part in set_partitions(n) {
        let mut term = 1.0;
        for block in &part {
            let mut s = KahanSum::new();
            for i in 0..len {
                let mut p = 1.0;
                for &k in block {
                    p *= values[k][i];
                }
                s.add(p);
            }
            term *= mobius_weight(block.len()) * s.value();
        }
        total.add(term);
    }
    total.value()
}

fn evaluate(state: &SystemState, h: &TestFunction) -> Vec<f64> {
    state.particles.iter().map(|p| h.eval(&p.position, &p.velocity)).collect()
}

/// Estimate of `∫ F_n prod_k h_k`: average over replicas of
/// `mu^{-n} Σ_{distinct ordered tuples} prod_k h_k(z_{i_k})`.
pub fn moment_estimate(states: &[SystemState], hs: &[TestFunction], mu: f64) -> Result<Estimate> {
    let n = hs.len();
    if n > MAX_ORDER {
        return Err(Error::Unsupported(format!("correlation order {n} > {MAX_ORDER}")));
    }
    let per: Vec<f64> = states
        .iter()
        .map(|s| {
            let vals: Vec<Vec<f64>> = hs.iter().map(|h| evaluate(s, h)).collect();
            let refs: Vec<&[f64]> = vals.iter().map(|v| v.as_slice()).collect();
            distinct_tuple_sum(&refs) / mu.powi(n as i32)
        })
        .collect();
    Ok(Estimate::from_samples(&per))
}

/// Canonical (sorted) key of a multiset of family indices.
pub fn key(indices: &[usize]) -> Vec<usize> {
    let mut k = indices.to_vec();
    k.sort_unstable();
    k
}

/// Sorted index multisets of size `n` drawn from `0..k`.
pub fn multisets(k: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for j in start..k {
            cur.push(j);
            rec(j, k, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, n, &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEntry {
    pub value: f64,
    pub variance: f64,
    pub samples: usize,
}

/// Estimates of `∫ F_n h_{k_1} ... h_{k_n}` keyed by the sorted index multiset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentTable {
    pub mu: f64,
    pub entries: BTreeMap<Vec<usize>, MomentEntry>,
}

/// Rescaled cumulants `f_n` keyed like [`MomentTable`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CumulantTable {
    pub mu: f64,
    pub entries: BTreeMap<Vec<usize>, f64>,
}

impl MomentTable {
    /// Fills every multiset of family indices up to `max_order` from an ensemble.
    pub fn estimate(states: &[SystemState], family: &[TestFunction], max_order: usize, mu: f64) -> Result<Self> {
        if max_order > MAX_ORDER {
            return Err(Error::Unsupported(format!("correlation order {max_order} > {MAX_ORDER}")));
        }
        let evals: Vec<Vec<Vec<f64>>> = states
            .iter()
            .map(|s| family.iter().map(|h| evaluate(s, h)).collect())
            .collect();
        let mut entries = BTreeMap::new();
        for n in 1..=max_order {
            for ks in multisets(family.len(), n) {
                let per: Vec<f64> = evals
                    .iter()
                    .map(|ev| {
                        let refs: Vec<&[f64]> = ks.iter().map(|&k| ev[k].as_slice()).collect();
                        distinct_tuple_sum(&refs) / mu.powi(n as i32)
                    })
                    .collect();
                let e = Estimate::from_samples(&per);
                entries.insert(ks, MomentEntry { value: e.mean, variance: e.variance, samples: e.samples });
            }
        }
        Ok(MomentTable { mu, entries })
    }

    pub fn value(&self, indices: &[usize]) -> Result<f64> {
        self.entries
            .get(&key(indices))
            .map(|e| e.value)
            .ok_or_else(|| Error::MissingEntry(format!("moment {indices:?}")))
    }

    pub fn insert(&mut self, indices: &[usize], value: f64) {
        self.entries.insert(key(indices), MomentEntry { value, variance: f64::NAN, samples: 0 });
    }
}

impl CumulantTable {
    pub fn value(&self, indices: &[usize]) -> Result<f64> {
        self.entries
            .get(&key(indices))
            .copied()
            .ok_or_else(|| Error::MissingEntry(format!("cumulant {indices:?}")))
    }
}

fn block_key(ks: &[usize], block: &[usize]) -> Vec<usize> {
    key(&block.iter().map(|&b| ks[b]).collect::<Vec<_>>())
}

/// `f_n = mu^{n-1} Σ_σ (-1)^{s-1} (s-1)! prod_i F_{|σ_i|}` for every entry.
pub fn cumulants_from_moments(m: &MomentTable) -> Result<CumulantTable> {
    let mut entries = BTreeMap::new();
    for ks in m.entries.keys() {
        let n = ks.len();
        if n > MAX_ORDER {
            return Err(Error::Unsupported(format!("correlation order {n} > {MAX_ORDER}")));
        }
        let mut acc = KahanSum::new();
        for part in set_partitions(n) {
            let mut term = mobius_weight(part.len());
            for block in &part {
                term *= m.value(&block_key(ks, block))?;
            }
            acc.add(term);
        }
        entries.insert(ks.clone(), m.mu.powi(n as i32 - 1) * acc.value());
    }
    Ok(CumulantTable { mu: m.mu, entries })
}

/// `F_n = Σ_σ mu^{-(n-s)} prod_i f_{|σ_i|}` for every entry.
pub fn moments_from_cumulants(c: &CumulantTable) -> Result<MomentTable> {
    let mut entries = BTreeMap::new();
    for ks in c.entries.keys() {
        let n = ks.len();
        if n > MAX_ORDER {
            return Err(Error::Unsupported(format!("correlation order {n} > {MAX_ORDER}")));
        }
        let mut acc = KahanSum::new();
        for part in set_partitions(n) {
            let mut term = c.mu.powi(-((n - part.len()) as i32));
            for block in &part {
                term *= c.value(&block_key(ks, block))?;
            }
            acc.add(term);
        }
        entries.insert(ks.clone(), MomentEntry { value: acc.value(), variance: f64::NAN, samples: 0 });
    }
    Ok(MomentTable { mu: c.mu, entries })
}
