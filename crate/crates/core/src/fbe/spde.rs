use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::path::{KineticPath, LinearizedOperator};
use super::FluctField;
use crate::error::{Error, Result};
use crate::rng::{sub_rng, Rng as ReplicaRng};

/// Semi-implicit Euler-Maruyama step of `dζ = ℒ ζ dt + dη` with a given
/// noise increment: the loss term `-ν ζ` is implicit, the rest explicit.
pub fn spde_step_with_increment(
    zeta: &FluctField,
    op: &LinearizedOperator,
    dt: f64,
    increment: &[f64],
) -> Result<FluctField> {
    let n = zeta.values.len();
    if op.matrix.nrows() != n || increment.len() != n {
        return Err(Error::GridMismatch(format!("field of {n} vs operator of {}", op.matrix.nrows())));
    }
    let z = DVector::from_column_slice(&zeta.values);
    let lz = &op.matrix * &z;
    let mut out = zeta.clone();
    out.time += dt;
    for c in 0..n {
        let nu = op.loss[c];
        out.values[c] = (z[c] + dt * (lz[c] + nu * z[c]) + increment[c]) / (1.0 + nu * dt);
    }
    Ok(out)
}

/// One step with noise drawn from the operator's covariance square root.
pub fn spde_step<R: Rng + ?Sized>(zeta: &FluctField, op: &LinearizedOperator, dt: f64, rng: &mut R) -> Result<FluctField> {
    let incr = op.factor()?.sample(dt, rng);
    spde_step_with_increment(zeta, op, dt, &incr)
}

/// Pairings `ζ_t(φ_k)` of an SPDE ensemble at every time of the path:
/// `observations[i]` is a `family × replicas` matrix.
#[derive(Debug, Clone)]
pub struct SpdeEnsemble {
    pub times: Vec<f64>,
    pub observations: Vec<DMatrix<f64>>,
}

impl SpdeEnsemble {
    /// Sample covariance of `ζ(φ_a)` and `ζ(φ_b)` at time index `i`.
    pub fn covariance(&self, i: usize, a: usize, b: usize) -> f64 {
        let o = &self.observations[i];
        crate::stats::covariance(&o.row(a).iter().copied().collect::<Vec<_>>(), &o.row(b).iter().copied().collect::<Vec<_>>())
    }

    pub fn samples(&self, i: usize, k: usize) -> Vec<f64> {
        self.observations[i].row(k).iter().copied().collect()
    }
}

const NOISE_PURPOSE: u64 = 0x5bde;

/// Runs `replicas` independent SPDE solutions along the path. The initial
/// field is the white noise with covariance `∫ φ ψ f⁰`; replica `r` draws all
/// of its randomness from its own stream, so results do not depend on the
/// ensemble size.
pub fn spde_ensemble(path: &KineticPath, family: &[Vec<f64>], replicas: usize, seed: u64) -> Result<SpdeEnsemble> {
    let grid = path.grid();
    let n = grid.len();
    let dv = grid.cell_volume();
    for phi in family {
        if phi.len() != n {
            return Err(Error::GridMismatch(format!("test function of {} values on a grid of {n}", phi.len())));
        }
    }
    let phi = DMatrix::from_fn(family.len(), n, |k, c| family[k][c] * dv);
    let mut rngs: Vec<ReplicaRng> = (0..replicas as u64).map(|r| sub_rng(seed, r, NOISE_PURPOSE)).collect();
    let f0 = &path.initial().values;
    let mut z = DMatrix::from_fn(n, replicas, |_, _| 0.0);
    for (r, rng) in rngs.iter_mut().enumerate() {
        for c in 0..n {
            z[(c, r)] = (f0[c].max(0.0) / dv).sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let dt = path.dt;
    let mut observations = vec![&phi * &z];
    let mut xi = DMatrix::zeros(n, replicas);
    for k in 0..path.steps.len() - 1 {
        let op = &path.steps[k];
        let factor = op.factor()?;
        for (r, rng) in rngs.iter_mut().enumerate() {
            for c in 0..n {
                xi[(c, r)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let noise = &factor.sqrt * &xi * dt.sqrt();
        let lz = &op.matrix * &z;
        let before = z.norm();
        for r in 0..replicas {
            for c in 0..n {
                let nu = op.loss[c];
                z[(c, r)] = (z[(c, r)] + dt * (lz[(c, r)] + nu * z[(c, r)]) + noise[(c, r)]) / (1.0 + nu * dt);
            }
        }
        let after = z.norm();
        if after > before * 10f64.powf(dt) + noise.norm() {
            return Err(Error::Numerical(format!(
                "SPDE norm grew from {before:.3e} to {after:.3e} in one step at t = {:.4}; reduce dt",
                k as f64 * dt
            )));
        }
        observations.push(&phi * &z);
    }
    Ok(SpdeEnsemble { times: path.times(), observations })
}
