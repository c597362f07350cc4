use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::FluctField;
use crate::boltzmann::{noise_covariance, CollisionQuadrature, VelocityGridFn};
use crate::error::{Error, Result};

/// One noise increment over `dt`, built node by node: every quadrature node
/// `q` contributes `sqrt(½ W_q f_a f_b dt) ξ_q` times the deposit pattern of
/// the collision (+1 at both outgoing velocities, -1 at both incoming ones).
/// Exact in law for the discrete noise but costs a full pass over the
/// quadrature per draw.
pub fn sample_noise_increment<R: Rng + ?Sized>(
    q: &CollisionQuadrature,
    f: &VelocityGridFn,
    dt: f64,
    rng: &mut R,
) -> Result<FluctField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParam(format!("dt must be positive, got {dt}")));
    }
    if f.grid != q.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", f.grid, q.grid)));
    }
    let mut out = FluctField::zeros(q.grid, f.time);
    let fv = &f.values;
    q.visit(|a, b, w, sv, sw| {
        let var = 0.5 * w * fv[a] * fv[b] * dt;
        if var <= 0.0 {
            return;
        }
        let amp = var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        sv.deposit(&mut out.values, amp);
        sw.deposit(&mut out.values, amp);
        out.values[a] -= amp;
        out.values[b] -= amp;
    });
    Ok(out)
}

/// Square root `S` of the nodal noise covariance `Q = S Sᵀ`, so that an
/// increment is `sqrt(dt) S ξ` with `ξ` standard normal in `R^n`.
#[derive(Debug, Clone)]
pub struct NoiseFactor {
    pub sqrt: DMatrix<f64>,
    /// Number of eigenvalues treated as zero (the collision invariants span
    /// the exact null space; round-off there would otherwise leak noise into
    /// conserved directions at the square-root level).
    pub null_dim: usize,
}

impl NoiseFactor {
    pub fn from_covariance(q: DMatrix<f64>) -> Result<Self> {
        let n = q.nrows();
        let eig = SymmetricEigen::new(q);
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let mut null_dim = 0;
        let mut sqrt = eig.eigenvectors;
        for k in 0..n {
            let lam = eig.eigenvalues[k];
            if lam < -1e-9 * top.max(f64::MIN_POSITIVE) {
                return Err(Error::Numerical(format!("noise covariance has eigenvalue {lam:.3e} (top {top:.3e})")));
            }
            let s = if lam <= 1e-12 * top {
                null_dim += 1;
                0.0
            } else {
                lam.sqrt()
            };
            sqrt.column_mut(k).scale_mut(s);
        }
        Ok(NoiseFactor { sqrt, null_dim })
    }

    pub fn new(q: &CollisionQuadrature, f: &VelocityGridFn) -> Result<Self> {
        Self::from_covariance(noise_covariance(q, &f.values)?)
    }

    pub fn dim(&self) -> usize {
        self.sqrt.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Vec<f64> {
        let xi = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.sqrt * xi * dt.sqrt()).as_slice().to_vec()
    }

    /// Independent increments for `replicas` columns.
    pub fn sample_batch<R: Rng + ?Sized>(&self, dt: f64, replicas: usize, rng: &mut R) -> DMatrix<f64> {
        let xi = DMatrix::from_fn(self.dim(), replicas, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.sqrt * xi * dt.sqrt()
    }
}
