//! Hard-sphere gas in the Boltzmann-Grad scaling.
//!
//! The crate couples an exact event-driven simulator of hard spheres on the
//! unit torus with the kinetic objects that describe its low-density limit:
//! a grand canonical initial sampler, ensemble estimators for correlation
//! functions and cumulants, homogeneous Boltzmann reference solvers (grid
//! quadrature and DSMC), the fluctuating Boltzmann equation, Duhamel
//! collision-tree expansions and large-deviation functionals.
//!
//! Module map:
//!
//! | module          | role                                                    |
//! |-----------------|---------------------------------------------------------|
//! | [`hs_dynamics`] | event-driven hard-sphere flow, trajectories, binary I/O |
//! | [`init_gc`]     | density profiles and grand canonical sampling           |
//! | [`estimators`]  | empirical measures, moments, cumulants, CGFs            |
//! | [`boltzmann`]   | velocity grids, collision operator, DSMC, linearization |
//! | [`fbe`]         | collision noise, SPDE stepping, covariance ODEs         |
//! | [`trees`]       | collision trees, pseudo-trajectories, Duhamel MC        |
//! | [`ldp`]         | Hamiltonian, rate functionals, Hamilton-Jacobi residual |
//! | [`harness`]     | configuration, ensembles, reports and studies           |

pub mod boltzmann;
pub mod error;
pub mod estimators;
pub mod fbe;
pub mod harness;
pub mod hs_dynamics;
pub mod init_gc;
pub mod ldp;
pub mod rng;
pub mod stats;
pub mod trees;
pub mod vector;

pub use error::{Error, Result};
pub use vector::Vector;
