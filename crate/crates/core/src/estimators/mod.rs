//! Ensemble statistics: empirical measures, fluctuation fields, correlation
//! and cumulant tables, path observables and empirical cumulant generating
//! functions.

mod accumulator;
pub mod partitions;
mod moments;
mod test_function;

pub use accumulator::{log_mean_exp, EnsembleAccumulator};
pub use moments::{
    cumulants_from_moments, distinct_tuple_sum, key, moment_estimate, moments_from_cumulants, multisets, CumulantTable,
    Estimate, MomentEntry, MomentTable, MAX_ORDER,
};
pub use test_function::{hermite, Fourier, TestFamily, TestFunction};

use crate::error::{Error, Result};
use crate::hs_dynamics::{states_at, SystemState, Trajectory};
use crate::stats::KahanSum;

/// `π(h) = (1/mu) Σ_i h(z_i)`.
pub fn empirical_measure(state: &SystemState, h: &TestFunction, mu: f64) -> f64 {
    let mut s = KahanSum::new();
    for p in &state.particles {
        s.add(h.eval(&p.position, &p.velocity));
    }
    s.value() / mu
}

/// `ζ(h) = sqrt(mu) (π(h) - reference_mean)`.
pub fn fluctuation_field(state: &SystemState, h: &TestFunction, mu: f64, reference_mean: f64) -> f64 {
    mu.sqrt() * (empirical_measure(state, h, mu) - reference_mean)
}

/// Observable `Σ_p h_p(z(θ_p))` of a single particle path.
#[derive(Debug, Clone)]
pub struct PathObservable {
    pub times: Vec<f64>,
    pub weights: Vec<TestFunction>,
}

impl PathObservable {
    pub fn new(times: Vec<f64>, weights: Vec<TestFunction>) -> Result<Self> {
        if times.len() != weights.len() || times.is_empty() {
            return Err(Error::InvalidParam("path observable needs one weight per time".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times[0] < 0.0 {
            return Err(Error::InvalidParam(format!("observation times must increase from 0: {times:?}")));
        }
        Ok(PathObservable { times, weights })
    }

    /// Single-time observable.
    pub fn at(t: f64, h: TestFunction) -> Self {
        PathObservable { times: vec![t], weights: vec![h] }
    }

    /// `Σ_i Σ_p h_p(z_i(θ_p))` along one trajectory.
    pub fn exponent(&self, traj: &Trajectory) -> Result<f64> {
        if let Some(&last) = self.times.last() {
            if last > traj.horizon {
                return Err(Error::OutOfRange { t: last, horizon: traj.horizon });
            }
        }
        let states = states_at(traj, &self.times)?;
        let mut s = KahanSum::new();
        for (st, h) in states.iter().zip(&self.weights) {
            for p in &st.particles {
                s.add(h.eval(&p.position, &p.velocity));
            }
        }
        Ok(s.value())
    }
}

/// Empirical cumulant generating function with its standard error and the
/// per-replica exponents `Σ_i H(z_i path)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CgfEstimate {
    pub value: f64,
    pub se: f64,
    pub exponents: Vec<f64>,
}

/// `(1/mu) log( mean_r exp(Σ_i H(z_i path)) )` from per-replica exponents.
pub fn cgf_from_exponents(exponents: Vec<f64>, mu: f64) -> Result<CgfEstimate> {
    let (lme, se) = log_mean_exp(&exponents)?;
    Ok(CgfEstimate { value: lme / mu, se: se / mu, exponents })
}

pub fn empirical_cgf(trajectories: &[Trajectory], obs: &PathObservable, mu: f64) -> Result<CgfEstimate> {
    let exps = trajectories.iter().map(|t| obs.exponent(t)).collect::<Result<Vec<_>>>()?;
    cgf_from_exponents(exps, mu)
}

/// Same as [`empirical_cgf`] for a single time-zero observable on states.
pub fn empirical_cgf_states(states: &[SystemState], h: &TestFunction, mu: f64) -> Result<CgfEstimate> {
    let exps = states.iter().map(|s| empirical_measure(s, h, 1.0)).collect();
    cgf_from_exponents(exps, mu)
}

/// Both sides of the variance identity
/// `Var π(h) = mu^{-1} ∫F1 h^2 + ∫F2 h⊗h - (∫F1 h)^2`, computed from the same
/// per-replica sums (population variance, i.e. normalized by the replica count).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceIdentity {
    pub direct: f64,
    pub formula: f64,
    pub residual: f64,
}

pub fn variance_identity_check(states: &[SystemState], h: &TestFunction, mu: f64) -> VarianceIdentity {
    let r = states.len() as f64;
    let mut pi = KahanSum::new();
    let mut pi2 = KahanSum::new();
    let mut s1 = KahanSum::new();
    let mut s2 = KahanSum::new();
    let mut pair = KahanSum::new();
    for st in states {
        let vals: Vec<f64> = st.particles.iter().map(|p| h.eval(&p.position, &p.velocity)).collect();
        let p = empirical_measure(st, h, mu);
        pi.add(p);
        pi2.add(p * p);
        let a = crate::stats::neumaier_sum(vals.iter().copied());
        let b = crate::stats::neumaier_sum(vals.iter().map(|x| x * x));
        s1.add(a);
        s2.add(b);
        pair.add(distinct_tuple_sum(&[&vals, &vals]));
    }
    let mean_pi = pi.value() / r;
    let direct = pi2.value() / r - mean_pi * mean_pi;
    let f1h = s1.value() / r / mu;
    let f1h2 = s2.value() / r / mu;
    let f2hh = pair.value() / r / (mu * mu);
    let formula = f1h2 / mu + f2hh - f1h * f1h;
    let scale = direct.abs().max(formula.abs()).max(f1h * f1h).max(f64::MIN_POSITIVE);
    let residual = if direct == 0.0 && formula == 0.0 { 0.0 } else { (direct - formula).abs() / scale };
    VarianceIdentity { direct, formula, residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hs_dynamics::Particle;
    use crate::vector::Vector;

    #[test]
    fn trivial_measures() {
        let s = SystemState::new(vec![
            Particle::new(Vector::new2(0.1, 0.1), Vector::new2(1.0, 0.0)),
            Particle::new(Vector::new2(0.5, 0.1), Vector::new2(0.0, 2.0)),
        ]);
        assert_eq!(empirical_measure(&s, &TestFunction::constant(1.0), 4.0), 0.5);
        assert_eq!(empirical_measure(&SystemState::new(vec![]), &TestFunction::energy(1.0), 4.0), 0.0);
        let e = TestFunction::energy(1.0);
        let m = empirical_measure(&s, &e, 4.0);
        assert_eq!(fluctuation_field(&s, &e, 4.0, m), 0.0);
    }

    #[test]
    fn variance_identity_by_enumeration() {
        // single replica with N = 3: the population variance is 0, and the
        // right-hand side must cancel exactly as well
        let s = SystemState::new(vec![
            Particle::new(Vector::new2(0.1, 0.1), Vector::new2(1.0, 0.0)),
            Particle::new(Vector::new2(0.5, 0.1), Vector::new2(0.0, 2.0)),
            Particle::new(Vector::new2(0.7, 0.8), Vector::new2(-1.0, 0.5)),
        ]);
        let h = TestFunction::energy(1.0);
        let mu = 3.0;
        let v = variance_identity_check(std::slice::from_ref(&s), &h, mu);
        // by hand: h = (1, 4, 1.25); Σh = 6.25, Σh² = 18.5625, Σ_{i≠j} h_i h_j = 6.25² - 18.5625
        let f1h = 6.25 / mu;
        let rhs = 18.5625 / mu / mu + (6.25f64 * 6.25 - 18.5625) / (mu * mu) - f1h * f1h;
        assert!(rhs.abs() < 1e-14);
        assert!(v.direct.abs() < 1e-14 && v.formula.abs() < 1e-14);
        let z = variance_identity_check(&[s], &TestFunction::zero(), mu);
        assert_eq!((z.direct, z.formula, z.residual), (0.0, 0.0, 0.0));
    }
}
