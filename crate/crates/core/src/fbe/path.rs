use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use super::noise::NoiseFactor;
use crate::boltzmann::{
    linearized_matrix, loss_frequency, noise_covariance, step_boltzmann, CollisionQuadrature, VelocityGrid,
    VelocityGridFn,
};
use crate::error::{Error, Result};

/// Everything the fluctuation equations need at one time: the density, the
/// nodal matrix of `ℒ_f`, the loss frequency and the noise covariance.
#[derive(Debug)]
pub struct LinearizedOperator {
    pub density: VelocityGridFn,
    pub matrix: DMatrix<f64>,
    pub loss: Vec<f64>,
    pub noise: DMatrix<f64>,
    factor: OnceLock<NoiseFactor>,
}

impl LinearizedOperator {
    pub fn new(q: &CollisionQuadrature, f: &VelocityGridFn) -> Result<Self> {
        Ok(LinearizedOperator {
            density: f.clone(),
            matrix: linearized_matrix(q, &f.values)?,
            loss: loss_frequency(q, &f.values)?,
            noise: noise_covariance(q, &f.values)?,
            factor: OnceLock::new(),
        })
    }

    /// Square root of the noise covariance, computed on first use.
    pub fn factor(&self) -> Result<&NoiseFactor> {
        if let Some(f) = self.factor.get() {
            return Ok(f);
        }
        let f = NoiseFactor::from_covariance(self.noise.clone())?;
        Ok(self.factor.get_or_init(|| f))
    }
}

/// Kinetic solution on a uniform time grid `t_k = k dt` together with the
/// linearized operators along it.
#[derive(Debug, Clone)]
pub struct KineticPath {
    pub quadrature: CollisionQuadrature,
    pub dt: f64,
    pub steps: Vec<Arc<LinearizedOperator>>,
}

fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && t_end >= 0.0) {
        return Err(Error::InvalidParam(format!("need dt > 0 and t_end >= 0, got {dt}, {t_end}")));
    }
    let n = (t_end / dt).round();
    if (n * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::InvalidParam(format!("t_end = {t_end} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

impl KineticPath {
    /// Solves the homogeneous Boltzmann equation from `f0` up to `t_end`.
    pub fn compute(q: &CollisionQuadrature, f0: &VelocityGridFn, t_end: f64, dt: f64) -> Result<Self> {
        let n = step_count(t_end, dt)?;
        let mut f = f0.clone();
        f.time = 0.0;
        let mut steps = vec![Arc::new(LinearizedOperator::new(q, &f)?)];
        for _ in 0..n {
            f = step_boltzmann(q, &f, dt)?;
            steps.push(Arc::new(LinearizedOperator::new(q, &f)?));
        }
        Ok(KineticPath { quadrature: q.clone(), dt, steps })
    }

    /// Frozen density (equilibrium): one operator shared by every step.
    pub fn stationary(q: &CollisionQuadrature, f: &VelocityGridFn, t_end: f64, dt: f64) -> Result<Self> {
        let n = step_count(t_end, dt)?;
        let mut f = f.clone();
        f.time = 0.0;
        let op = Arc::new(LinearizedOperator::new(q, &f)?);
        Ok(KineticPath { quadrature: q.clone(), dt, steps: vec![op; n + 1] })
    }

    pub fn grid(&self) -> VelocityGrid {
        self.quadrature.grid
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.steps.len()).map(|k| k as f64 * self.dt).collect()
    }

    pub fn initial(&self) -> &VelocityGridFn {
        &self.steps[0].density
    }
}
