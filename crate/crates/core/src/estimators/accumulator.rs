use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::stats::KahanSum;

/// Per-replica observable values keyed by replica index.
///
/// Statistics are always recomputed by summing in replica-index order with
/// compensated summation, so any split of the replicas merged back together
/// produces bit-identical results.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnsembleAccumulator {
    width: usize,
    rows: BTreeMap<u64, Vec<f64>>,
}

impl EnsembleAccumulator {
    pub fn new(width: usize) -> Self {
        EnsembleAccumulator { width, rows: BTreeMap::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn count(&self) -> usize {
        self.rows.len()
    }

    pub fn push(&mut self, replica: u64, values: Vec<f64>) -> Result<()> {
        if values.len() != self.width {
            return Err(Error::InvalidParam(format!("expected {} values, got {}", self.width, values.len())));
        }
        if self.rows.insert(replica, values).is_some() {
            return Err(Error::InvalidParam(format!("replica {replica} recorded twice")));
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &EnsembleAccumulator) -> Result<()> {
        if other.width != self.width {
            return Err(Error::InvalidParam("accumulator widths differ".into()));
        }
        for (k, v) in &other.rows {
            self.push(*k, v.clone())?;
        }
        Ok(())
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.values().map(|r| r[k]).collect()
    }

    pub fn replicas(&self) -> impl Iterator<Item = u64> + '_ {
        self.rows.keys().copied()
    }

    fn sum_by<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let mut s = KahanSum::new();
        for r in self.rows.values() {
            s.add(f(r));
        }
        s.value()
    }

    pub fn mean(&self, k: usize) -> f64 {
        self.sum_by(|r| r[k]) / self.count() as f64
    }

    /// Unbiased sample covariance of columns `a` and `b`.
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        let n = self.count() as f64;
        let ma = self.mean(a);
        let mb = self.mean(b);
        self.sum_by(|r| (r[a] - ma) * (r[b] - mb)) / (n - 1.0)
    }

    pub fn variance(&self, k: usize) -> f64 {
        self.covariance(k, k)
    }

    pub fn se(&self, k: usize) -> f64 {
        (self.variance(k) / self.count() as f64).sqrt()
    }

    /// Standard error of the sample covariance of columns `a`, `b`
    /// (plug-in fourth-moment formula).
    pub fn covariance_se(&self, a: usize, b: usize) -> f64 {
        let n = self.count() as f64;
        let ma = self.mean(a);
        let mb = self.mean(b);
        let c = self.covariance(a, b);
        let m4 = self.sum_by(|r| {
            let p = (r[a] - ma) * (r[b] - mb) - c;
            p * p
        }) / (n - 1.0);
        (m4 / n).sqrt()
    }

    /// `log mean exp(scale * column k)` and the delta-method standard error of
    /// that log-mean.
    pub fn log_mean_exp(&self, k: usize, scale: f64) -> Result<(f64, f64)> {
        let xs: Vec<f64> = self.rows.values().map(|r| scale * r[k]).collect();
        log_mean_exp(&xs)
    }
}

/// Overflow-safe `log(mean(exp(x)))` with the delta-method standard error.
pub fn log_mean_exp(xs: &[f64]) -> Result<(f64, f64)> {
    let finite: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::Numerical("all exponents are non-finite".into()));
    }
    if finite.len() != xs.len() {
        return Err(Error::Numerical(format!(
            "{} of {} exponents are non-finite",
            xs.len() - finite.len(),
            xs.len()
        )));
    }
    let m = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = finite.iter().map(|x| (x - m).exp()).collect();
    let s = crate::stats::summarize(&w);
    Ok((m + s.mean.ln(), s.se / s.mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_merge_is_bit_identical() {
        let vals: Vec<f64> = (0..101).map(|k| ((k * 7919) % 113) as f64 * 1e-3 + 1e8 * (k % 3) as f64).collect();
        let mut all = EnsembleAccumulator::new(1);
        for (k, v) in vals.iter().enumerate() {
            all.push(k as u64, vec![*v]).unwrap();
        }
        let mut a = EnsembleAccumulator::new(1);
        let mut b = EnsembleAccumulator::new(1);
        for (k, v) in vals.iter().enumerate().rev() {
            if k % 2 == 0 { &mut a } else { &mut b }.push(k as u64, vec![*v]).unwrap();
        }
        let mut ab = b.clone();
        ab.merge(&a).unwrap();
        let mut ba = a.clone();
        ba.merge(&b).unwrap();
        assert_eq!(all.mean(0).to_bits(), ab.mean(0).to_bits());
        assert_eq!(ab.variance(0).to_bits(), ba.variance(0).to_bits());
        assert!(a.merge(&a.clone()).is_err());
    }

    #[test]
    fn log_mean_exp_handles_large_exponents() {
        let (v, _) = log_mean_exp(&[1000.0, 1000.0]).unwrap();
        assert!((v - 1000.0).abs() < 1e-12);
        assert!(log_mean_exp(&[f64::INFINITY]).is_err());
    }
}
