use std::collections::VecDeque;

use crate::boltzmann::{loss_frequency, CollisionQuadrature, VelocityGrid, VelocityGridFn};
use crate::error::{Error, Result};

use super::hamiltonian::{positive_part, value_and_grad};
use super::{initial_rate, DensityPath};

/// Growth cap `|p(v)| <= c0 + c2 |v|^2` on control fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthCap {
    pub c0: f64,
    pub c2: f64,
}

impl Default for GrowthCap {
    fn default() -> Self {
        GrowthCap { c0: 50.0, c2: 5.0 }
    }
}

impl GrowthCap {
    /// First grid node where `p` exceeds the cap.
    pub fn violation(&self, p: &VelocityGridFn) -> Option<usize> {
        (0..p.values.len()).find(|&c| p.values[c].abs() > self.c0 + self.c2 * p.grid.point(c).norm2())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRateOptions {
    pub max_iter: usize,
    /// Stop when the L² norm of the gradient falls below this.
    pub tol: f64,
    /// Or when the quasi-Newton estimate of the remaining gain in the
    /// per-unit-time value falls below this.
    pub gain_tol: f64,
    /// L-BFGS memory.
    pub memory: usize,
    pub cap: GrowthCap,
}

impl Default for PathRateOptions {
    fn default() -> Self {
        PathRateOptions { max_iter: 500, tol: 1e-8, gain_tol: 1e-12, memory: 10, cap: GrowthCap::default() }
    }
}

/// Maximization result on one time interval of the path.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRate {
    pub start: f64,
    pub end: f64,
    /// `sup_p ⟨p, D_s φ⟩ - ℋ(φ, p)` per unit time.
    pub value: f64,
    pub control: VelocityGridFn,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// The path changes a conserved quantity, so the supremum is infinite.
    pub infinite: bool,
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRate {
    pub value: f64,
    pub initial: f64,
    pub dynamic: f64,
    pub intervals: Vec<IntervalRate>,
}

impl PathRate {
    pub fn converged(&self) -> bool {
        self.intervals.iter().all(|r| r.converged)
    }

    pub fn iterations(&self) -> usize {
        self.intervals.iter().map(|r| r.iterations).sum()
    }

    pub fn grad_norm(&self) -> f64 {
        self.intervals.iter().map(|r| r.grad_norm).fold(0.0, f64::max)
    }
}

/// Orthonormal basis (plain dot product on nodes) of the collision invariants
/// `1, v_k, |v|^2` sampled on the grid.
fn invariant_basis(grid: &VelocityGrid) -> Vec<Vec<f64>> {
    let mut raw = vec![grid.sample(|_| 1.0)];
    for k in 0..grid.d {
        raw.push(grid.sample(|v| v.0[k]));
    }
    raw.push(grid.sample(|v| v.norm2()));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut r in raw {
        for e in &basis {
            let c: f64 = r.iter().zip(e).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
        }
        let n = r.iter().map(|a| a * a).sum::<f64>().sqrt();
        r.iter_mut().for_each(|a| *a /= n);
        basis.push(r);
    }
    basis
}

/// Removes the invariant components; returns the norm of what was removed.
fn project_out(x: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    let mut removed = 0.0;
    for e in basis {
        let c: f64 = x.iter().zip(e).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
        removed += c * c;
    }
    removed.sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `F(p) = ℋ(φ, p) - ⟨p, r⟩` with L-BFGS and Armijo backtracking,
/// where `r` has no invariant component. Returns `(p, -F(p), iterations,
/// gradient L² norm, converged)`.
fn maximize(
    q: &CollisionQuadrature,
    phi: &[f64],
    rate: &[f64],
    basis: &[Vec<f64>],
    opts: &PathRateOptions,
) -> Result<(Vec<f64>, f64, usize, f64, bool)> {
    let dv = q.grid.cell_volume();
    let n = phi.len();
    let objective = |p: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (h, g) = value_and_grad(q, phi, p, true)?;
        let mut grad: Vec<f64> = g.iter().zip(rate).map(|(a, b)| a - b).collect();
        project_out(&mut grad, basis);
        Ok((h - dv * dot(p, rate), grad))
    };
    let l2 = |g: &[f64]| (dv * dot(g, g)).sqrt();
    // diagonal preconditioner from the loss part of the Hessian at p = 0;
    // curvature scales with φ, which spans many decades between bulk and tails
    let nu = loss_frequency(q, phi)?;
    let curvature: Vec<f64> = phi.iter().zip(&nu).map(|(f, v)| f * v).collect();
    let floor = 1e-10 * curvature.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let precond: Vec<f64> = curvature.iter().map(|c| 1.0 / c.max(floor)).collect();
    let apply = |x: &[f64]| -> Vec<f64> { x.iter().zip(&precond).map(|(a, b)| a * b).collect() };

    let mut p = vec![0.0; n];
    let (mut f, mut g) = objective(&p)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if l2(&g) < opts.tol {
            return Ok((p, -f, iterations, l2(&g), true));
        }
        iterations += 1;
        // two-loop recursion
        let mut d = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(x, yy)| *x -= a * yy);
            alphas.push(a);
        }
        d = apply(&d);
        if let Some((s, y, _)) = history.back() {
            let scale = dot(s, y) / dot(y, &apply(y));
            d.iter_mut().for_each(|x| *x *= scale);
        } else {
            // first step: the preconditioned Newton step of the quadratic model
            d.iter_mut().for_each(|x| *x /= dv);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(x, ss)| *x += (a - b) * ss);
        }
        d.iter_mut().for_each(|x| *x = -*x);
        project_out(&mut d, basis);
        // directional derivative of F; g is a density, so weight by the cell volume
        let mut slope = dv * dot(&g, &d);
        if !history.is_empty() && slope < 0.0 && -0.5 * slope < opts.gain_tol {
            return Ok((p, -f, iterations - 1, l2(&g), true));
        }
        if !(slope < 0.0) {
            // not a descent direction: restart from steepest descent
            history.clear();
            d = g.iter().map(|x| -x).collect();
            slope = dv * dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = p.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            match objective(&trial) {
                Ok((ft, gt)) if ft <= f + 1e-4 * step * slope => {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                Ok(_) | Err(Error::Overflow { .. }) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((pn, fnew, gn)) = accepted else {
            // line search exhausted: no further progress at machine precision
            return Ok((p, -f, iterations, l2(&g), l2(&g) < opts.tol));
        };
        let s: Vec<f64> = pn.iter().zip(&p).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            history.push_back((s, y, 1.0 / sy));
            if history.len() > opts.memory {
                history.pop_front();
            }
        }
        p = pn;
        f = fnew;
        g = gn;
    }
    let norm = l2(&g);
    Ok((p, -f, iterations, norm, norm < opts.tol))
}

/// Rate of a homogeneous density path: the initial relative entropy plus, on
/// each interval of the path, `(t_{k+1} - t_k) sup_p ⟨p, D_s φ⟩ - ℋ(φ̄, p)`
/// with `D_s φ` the forward difference and `φ̄` the interval midpoint average.
/// The supremum runs over grid fields orthogonal to the collision invariants;
/// a path that changes mass, momentum or energy has infinite rate.
pub fn path_rate(
    q: &CollisionQuadrature,
    path: &DensityPath,
    f0: &VelocityGridFn,
    opts: &PathRateOptions,
) -> Result<PathRate> {
    if path.grid() != q.grid || f0.grid != q.grid {
        return Err(Error::GridMismatch("path, initial density and quadrature must share a grid".into()));
    }
    let initial = initial_rate(&path.densities[0], f0)?;
    let basis = invariant_basis(&q.grid);
    let dv = q.grid.cell_volume();
    let mut intervals = Vec::with_capacity(path.len() - 1);
    let mut dynamic = 0.0;
    for k in 0..path.len() - 1 {
        let (start, end) = (path.times[k], path.times[k + 1]);
        let (mid, mut rate) = path.derivative(k)?;
        let scale = (dv * dot(&rate, &rate)).sqrt();
        let removed = project_out(&mut rate, &basis) * dv.sqrt();
        let phi = positive_part(&mid)?;
        if removed > 1e-8 * scale.max(1.0) {
            intervals.push(IntervalRate {
                start,
                end,
                value: f64::INFINITY,
                control: VelocityGridFn::zeros(q.grid),
                iterations: 0,
                grad_norm: f64::INFINITY,
                converged: true,
                infinite: true,
                capped: false,
            });
            dynamic = f64::INFINITY;
            continue;
        }
        let (p, value, iterations, grad_norm, converged) = maximize(q, &phi, &rate, &basis, opts)?;
        let control = VelocityGridFn::new(q.grid, p, 0.5 * (start + end))?;
        let capped = opts.cap.violation(&control).is_some();
        if !converged {
            log::warn!("rate maximization on [{start}, {end}] stopped at gradient norm {grad_norm:e} after {iterations} iterations");
        }
        dynamic += (end - start) * value;
        intervals.push(IntervalRate { start, end, value, control, iterations, grad_norm, converged, infinite: false, capped });
    }
    Ok(PathRate { value: initial + dynamic, initial, dynamic, intervals })
}
