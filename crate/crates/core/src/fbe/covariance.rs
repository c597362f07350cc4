use nalgebra::{DMatrix, SymmetricEigen};

use super::path::KineticPath;
use crate::boltzmann::collision_covariance;
use crate::error::{Error, Result};

/// Function space in which the covariance is propagated.
#[derive(Debug, Clone)]
pub enum Basis {
    /// Indicator functions of the grid nodes: `ℒ^*` acts exactly, no
    /// projection error.
    Nodal,
    /// A finite family of grid test functions; `ℒ^* φ_i` is projected back
    /// onto the family in `L²(f_t)` and the relative residual reported.
    Family(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy)]
pub struct CovarianceOptions {
    pub noise: bool,
    pub drift: bool,
    /// Projection residual above which a warning is logged.
    pub residual_warning: f64,
}

impl Default for CovarianceOptions {
    fn default() -> Self {
        CovarianceOptions { noise: true, drift: true, residual_warning: 0.05 }
    }
}

/// Equal-time covariance `𝒞(t, t, b_i, b_j)` on the basis at every path time.
#[derive(Debug, Clone)]
pub struct CovarianceSolution {
    pub times: Vec<f64>,
    pub matrices: Vec<DMatrix<f64>>,
    /// Largest relative projection residual at each time (0 for the nodal basis).
    pub residuals: Vec<f64>,
    pub basis: Basis,
    drifts: Vec<DMatrix<f64>>,
}

impl CovarianceSolution {
    /// `𝒞(t_i, t_i, φ, ψ)` for grid test functions, nodal basis only.
    pub fn pair(&self, i: usize, phi: &[f64], psi: &[f64]) -> Result<f64> {
        let Basis::Nodal = self.basis else {
            return Err(Error::Unsupported("pairing arbitrary functions needs the nodal basis".into()));
        };
        let g = &self.matrices[i];
        let mut s = 0.0;
        for a in 0..g.nrows() {
            if phi[a] == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for b in 0..g.ncols() {
                inner += g[(a, b)] * psi[b];
            }
            s += phi[a] * inner;
        }
        Ok(s)
    }

    /// Covariance matrix of a family at time index `i`.
    pub fn family_matrix(&self, i: usize, family: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        match &self.basis {
            Basis::Nodal => {
                let k = family.len();
                let n = self.matrices[i].nrows();
                let phi = DMatrix::from_fn(n, k, |c, j| family[j][c]);
                Ok(phi.transpose() * &self.matrices[i] * phi)
            }
            Basis::Family(own) => {
                if own != family {
                    return Err(Error::Unsupported("solution was computed on a different family".into()));
                }
                Ok(self.matrices[i].clone())
            }
        }
    }

    pub fn min_eigenvalue(&self, i: usize) -> f64 {
        SymmetricEigen::new(self.matrices[i].clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Drift `P` (with `ℒ^* b_i ≈ Σ_j P_ij b_j`), noise `K` and the relative
/// projection residual at one path step.
fn generators(path: &KineticPath, k: usize, basis: &Basis, opts: &CovarianceOptions) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let op = &path.steps[k];
    let dv = path.grid().cell_volume();
    match basis {
        Basis::Nodal => {
            let n = op.matrix.nrows();
            let p = if opts.drift { op.matrix.clone() } else { DMatrix::zeros(n, n) };
            let q = if opts.noise { &op.noise * (dv * dv) } else { DMatrix::zeros(n, n) };
            Ok((p, q, 0.0))
        }
        Basis::Family(fam) => {
            let n = op.matrix.nrows();
            let m = fam.len();
            let f = &op.density.values;
            let phi = DMatrix::from_fn(n, m, |c, j| fam[j][c]);
            let adj = op.matrix.transpose() * &phi;
            // weighted least squares in L²(f): (Φᵀ W Φ) Pᵀ = Φᵀ W (ℒ^*Φ)
            let w = DMatrix::from_fn(n, 1, |c, _| f[c].max(0.0) * dv);
            let wphi = DMatrix::from_fn(n, m, |c, j| w[c] * phi[(c, j)]);
            let gram = wphi.transpose() * &phi;
            let rhs = wphi.transpose() * &adj;
            let pt = gram
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Numerical("test family is linearly dependent in L²(f)".into()))?
                .solve(&rhs);
            let fitted = &phi * &pt;
            let mut worst: f64 = 0.0;
            for j in 0..m {
                let mut r2 = 0.0;
                let mut t2 = 0.0;
                for c in 0..n {
                    r2 += w[c] * (adj[(c, j)] - fitted[(c, j)]).powi(2);
                    t2 += w[c] * adj[(c, j)].powi(2);
                }
                if t2 > 0.0 {
                    worst = worst.max((r2 / t2).sqrt());
                }
            }
            let p = if opts.drift { pt.transpose() } else { DMatrix::zeros(m, m) };
            let q = if opts.noise { collision_covariance(&path.quadrature, f, fam)? } else { DMatrix::zeros(m, m) };
            Ok((p, q, worst))
        }
    }
}

/// Integrates `∂_t 𝒞(t,t) = 𝒞(ℒ^*·, ·) + 𝒞(·, ℒ^*·) + Cov_t` from
/// `𝒞(0,0,φ,ψ) = ∫ φ ψ f⁰` with Heun steps on the path's time grid.
pub fn covariance_ode_solve(path: &KineticPath, basis: &Basis, opts: &CovarianceOptions) -> Result<CovarianceSolution> {
    let grid = path.grid();
    let dv = grid.cell_volume();
    let f0 = &path.initial().values;
    let mut g = match basis {
        Basis::Nodal => DMatrix::from_fn(f0.len(), f0.len(), |a, b| if a == b { f0[a] * dv } else { 0.0 }),
        Basis::Family(fam) => {
            for phi in fam {
                if phi.len() != grid.len() {
                    return Err(Error::GridMismatch(format!("test function of {} values on a grid of {}", phi.len(), grid.len())));
                }
            }
            DMatrix::from_fn(fam.len(), fam.len(), |i, j| {
                fam[i].iter().zip(&fam[j]).zip(f0).map(|((a, b), f)| a * b * f).sum::<f64>() * dv
            })
        }
    };
    let rate = |p: &DMatrix<f64>, q: &DMatrix<f64>, g: &DMatrix<f64>| -> DMatrix<f64> {
        let pg = p * g;
        &pg + pg.transpose() + q
    };
    let dt = path.dt;
    let mut cur = generators(path, 0, basis, opts)?;
    let mut residuals = vec![cur.2];
    let mut matrices = vec![g.clone()];
    let mut drifts = vec![cur.0.clone()];
    for k in 0..path.steps.len() - 1 {
        let next = generators(path, k + 1, basis, opts)?;
        let k1 = rate(&cur.0, &cur.1, &g);
        let pred = &g + &k1 * dt;
        let k2 = rate(&next.0, &next.1, &pred);
        g += (k1 + k2) * (0.5 * dt);
        g = (&g + g.transpose()) * 0.5;
        if !g.iter().all(|x| x.is_finite()) {
            return Err(Error::Numerical(format!("covariance blew up at t = {}", (k + 1) as f64 * dt)));
        }
        if next.2 > opts.residual_warning {
            log::warn!("projection residual {:.3} at t = {:.4}", next.2, (k + 1) as f64 * dt);
        }
        residuals.push(next.2);
        matrices.push(g.clone());
        drifts.push(next.0.clone());
        cur = next;
    }
    Ok(CovarianceSolution { times: path.times(), matrices, residuals, basis: basis.clone(), drifts })
}

/// Two-time covariance `𝒞(s, t)` for `t ≥ s = t_start`, from
/// `∂_t 𝒞(s,t,φ,ψ) = 𝒞(s,t,φ,ℒ_t^*ψ)` started at the equal-time value.
/// Returned matrices are indexed by `t_k`, `k ≥ start`.
pub fn two_time_covariance(sol: &CovarianceSolution, start: usize) -> Result<Vec<DMatrix<f64>>> {
    if start >= sol.matrices.len() {
        return Err(Error::OutOfRange { t: start as f64, horizon: (sol.matrices.len() - 1) as f64 });
    }
    let dt = if sol.times.len() > 1 { sol.times[1] - sol.times[0] } else { 0.0 };
    let mut g = sol.matrices[start].clone();
    let mut out = vec![g.clone()];
    for k in start..sol.matrices.len() - 1 {
        let k1 = &g * sol.drifts[k].transpose();
        let pred = &g + &k1 * dt;
        let k2 = &pred * sol.drifts[k + 1].transpose();
        g += (k1 + k2) * (0.5 * dt);
        out.push(g.clone());
    }
    Ok(out)
}
