//! Fluctuating Boltzmann equation.
//!
//! Homogeneous mode only: the fluctuation field is a signed density on the
//! velocity grid, paired with test functions as `ζ(h) = ΔV Σ_c h_c ζ_c`.
//! The collision noise has covariance rate `Cov_f(h, h) = ½ ∫ f f (Δh)²`,
//! which vanishes for collision invariants; it can be sampled node by node
//! ([`sample_noise_increment`]) or through a square root of its nodal
//! covariance ([`NoiseFactor`]). The limiting covariance is propagated by
//! [`covariance_ode_solve`] along a precomputed [`KineticPath`].

mod covariance;
mod noise;
mod path;
mod spde;

pub use covariance::{covariance_ode_solve, two_time_covariance, Basis, CovarianceOptions, CovarianceSolution};
pub use noise::{sample_noise_increment, NoiseFactor};
pub use path::{KineticPath, LinearizedOperator};
pub use spde::{spde_ensemble, spde_step, spde_step_with_increment, SpdeEnsemble};

use crate::boltzmann::{collision_covariance, CollisionQuadrature, VelocityGrid, VelocityGridFn};
use crate::error::Result;
use crate::estimators::TestFunction;
use crate::hs_dynamics::reflect_velocities;
use crate::vector::Vector;

/// `Δh = h(x₁, v₁') + h(x₂, v₂') - h(x₁, v₁) - h(x₂, v₂)` for the collision
/// with impact direction `omega`.
pub fn delta_h(h: &TestFunction, x1: &Vector, v1: &Vector, x2: &Vector, v2: &Vector, omega: &Vector) -> f64 {
    let (p1, p2) = reflect_velocities(*v1, *v2, *omega);
    h.eval(x1, &p1) + h.eval(x2, &p2) - h.eval(x1, v1) - h.eval(x2, v2)
}

/// Fluctuation field on a velocity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctField {
    pub grid: VelocityGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl FluctField {
    pub fn zeros(grid: VelocityGrid, time: f64) -> Self {
        FluctField { grid, values: vec![0.0; grid.len()], time }
    }

    /// `ζ(h)` for grid values of `h`.
    pub fn pair(&self, h: &[f64]) -> f64 {
        self.grid.pairing(&self.values, h)
    }
}

/// Noise covariance `½ ∫ f f Δh₁ Δh₂` on the grid.
pub fn cov_form(q: &CollisionQuadrature, f: &VelocityGridFn, h1: &[f64], h2: &[f64]) -> Result<f64> {
    f.check_same_grid(&VelocityGridFn::zeros(q.grid))?;
    let m = collision_covariance(q, &f.values, &[h1.to_vec(), h2.to_vec()])?;
    Ok(m[(0, 1)])
}

#[cfg(test)]
mod tests;
