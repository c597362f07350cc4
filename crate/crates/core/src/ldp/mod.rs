//! Large-deviation functionals of the homogeneous problem on a velocity grid:
//! the Hamiltonian, the path rate by concave maximization over control
//! fields, the initial relative entropy, restricted Legendre transforms of
//! cumulant generating functionals and the Hamilton–Jacobi residual.

mod cgf;
mod hamiltonian;
mod rate;

pub use cgf::{
    hj_residual, hj_rhs, legendre_rate, CgfCandidate, EmpiricalCgf, HjOptions, HjResidual, LegendreRate, PoissonCgf,
};
pub use hamiltonian::{hamiltonian, hamiltonian_grad_p};
pub use rate::{path_rate, GrowthCap, IntervalRate, PathRate, PathRateOptions};

use crate::boltzmann::{VelocityGrid, VelocityGridFn, NEGATIVE_MASS_TOL};
use crate::error::{Error, Result};

/// Densities `φ(t_k, v)` on a common velocity grid at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPath {
    pub times: Vec<f64>,
    pub densities: Vec<VelocityGridFn>,
}

impl DensityPath {
    /// Takes the times from the densities.
    pub fn new(densities: Vec<VelocityGridFn>) -> Result<Self> {
        if densities.len() < 2 {
            return Err(Error::InvalidParam("a path needs at least two times".into()));
        }
        for w in densities.windows(2) {
            w[0].check_same_grid(&w[1])?;
            if !(w[1].time > w[0].time) {
                return Err(Error::InvalidParam("path times must increase".into()));
            }
        }
        for f in &densities {
            if f.values.iter().any(|x| !x.is_finite()) || !(f.mass().is_finite()) {
                return Err(Error::InvalidParam(format!("density at t = {} is not finite", f.time)));
            }
        }
        Ok(DensityPath { times: densities.iter().map(|f| f.time).collect(), densities })
    }

    /// Same density at every time.
    pub fn frozen(f: &VelocityGridFn, times: &[f64]) -> Result<Self> {
        Self::new(
            times
                .iter()
                .map(|&t| {
                    let mut g = f.clone();
                    g.time = t;
                    g
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> VelocityGrid {
        self.densities[0].grid
    }

    /// Midpoint density and forward difference `D_s φ` on interval `k`. In the
    /// homogeneous setting the transport part of `D_s` vanishes.
    pub fn derivative(&self, k: usize) -> Result<(VelocityGridFn, Vec<f64>)> {
        if k + 1 >= self.len() {
            return Err(Error::OutOfRange { t: k as f64, horizon: (self.len() - 1) as f64 });
        }
        let (a, b) = (&self.densities[k], &self.densities[k + 1]);
        let dt = b.time - a.time;
        let mid = a.values.iter().zip(&b.values).map(|(x, y)| 0.5 * (x + y)).collect();
        let rate = a.values.iter().zip(&b.values).map(|(x, y)| (y - x) / dt).collect();
        Ok((VelocityGridFn::new(a.grid, mid, 0.5 * (a.time + b.time))?, rate))
    }
}

/// Relative entropy `∫ φ0 log(φ0 / f0) - φ0 + f0` on the grid, with
/// `0 log 0 = 0`. Infinite when `φ0 > 0` where `f0 = 0`. Negative values down
/// to the solver's negative-mass tolerance are treated as zero.
pub fn initial_rate(phi0: &VelocityGridFn, f0: &VelocityGridFn) -> Result<f64> {
    phi0.check_same_grid(f0)?;
    let dv = phi0.grid.cell_volume();
    for (name, f) in [("phi0", phi0), ("f0", f0)] {
        let neg: f64 = f.values.iter().map(|x| (-x).max(0.0)).sum::<f64>() * dv;
        if !(neg <= NEGATIVE_MASS_TOL) {
            return Err(Error::Precondition(format!("{name} has negative mass {neg:e}")));
        }
    }
    let mut s = crate::stats::KahanSum::new();
    for (&p, &f) in phi0.values.iter().zip(&f0.values) {
        let (p, f) = (p.max(0.0), f.max(0.0));
        if p == 0.0 {
            s.add(f);
        } else if f == 0.0 {
            return Ok(f64::INFINITY);
        } else {
            s.add(p * (p / f).ln() - p + f);
        }
    }
    Ok(s.value() * dv)
}
