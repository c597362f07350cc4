//! Homogeneous Boltzmann reference solvers.
//!
//! Two independent routes to the limiting one-particle density: a
//! deterministic solver on a tensor velocity grid ([`CollisionQuadrature`],
//! [`step_boltzmann`]) and a stochastic particle method ([`Dsmc`]). The grid
//! side also provides the linearized operator, its adjoint and the collision
//! noise covariance used by the fluctuation equations.

mod dsmc;
mod grid;
mod operator;
mod quadrature;
mod solver;

pub use dsmc::Dsmc;
pub use grid::{VelocityGrid, VelocityGridFn};
pub use operator::{
    bilinear, collision_covariance, collision_operator, linearized_adjoint_apply, linearized_apply, linearized_matrix,
    loss_frequency, maxwellian_mean_free_time, mean_free_time, noise_covariance, truncated_fraction,
};
pub use quadrature::{CollisionQuadrature, Stencil};
pub use solver::{negative_part, solve, step_boltzmann, NEGATIVE_MASS_TOL};
