use super::grid::VelocityGridFn;
use super::operator::collision_operator;
use super::quadrature::CollisionQuadrature;
use crate::error::{Error, Result};

/// Largest tolerated mass of the negative part, `∫ f⁻`.
///
/// The conservative quadratic deposit undershoots slightly where the gain
/// term has steep gradients (far tails that are still filling up), producing
/// isolated negative values of order the neighbouring gain times `dt`. Those
/// are discretization artifacts; a negative part carrying real mass means the
/// grid or the step is too coarse.
pub const NEGATIVE_MASS_TOL: f64 = 1e-6;

/// One Heun (explicit trapezoidal) step of `∂_t f = Q(f, f)`.
pub fn step_boltzmann(q: &CollisionQuadrature, f: &VelocityGridFn, dt: f64) -> Result<VelocityGridFn> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParam(format!("time step must be positive, got {dt}")));
    }
    if f.grid != q.grid {
        return Err(Error::GridMismatch(format!("{:?} vs quadrature grid {:?}", f.grid, q.grid)));
    }
    let k1 = collision_operator(q, f)?;
    let mut mid = f.clone();
    for (m, k) in mid.values.iter_mut().zip(&k1) {
        *m += dt * k;
    }
    let k2 = collision_operator(q, &mid)?;
    let mut out = f.clone();
    out.time += dt;
    for ((o, a), b) in out.values.iter_mut().zip(&k1).zip(&k2) {
        *o += 0.5 * dt * (a + b);
    }
    check_values(&out)?;
    Ok(out)
}

/// `∫ f⁻` and the most negative value.
pub fn negative_part(f: &VelocityGridFn) -> (f64, f64) {
    let mut mass = 0.0;
    let mut worst: f64 = 0.0;
    for &x in &f.values {
        if x < 0.0 {
            mass -= x;
            worst = worst.min(x);
        }
    }
    (mass * f.grid.cell_volume(), worst)
}

fn check_values(f: &VelocityGridFn) -> Result<()> {
    if let Some(i) = f.values.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!("non-finite density at node {i}, t = {}", f.time)));
    }
    let (mass, worst) = negative_part(f);
    if mass > NEGATIVE_MASS_TOL {
        return Err(Error::Numerical(format!(
            "negative part of mass {mass:.3e} (min {worst:.3e}) at t = {}; refine the grid or reduce the time step",
            f.time
        )));
    }
    Ok(())
}

/// Integrates from `f0` and returns the solution at each of the increasing
/// `times` (measured from `f0.time`), with steps no larger than `dt`.
pub fn solve(q: &CollisionQuadrature, f0: &VelocityGridFn, times: &[f64], dt: f64) -> Result<Vec<VelocityGridFn>> {
    let mut out = Vec::with_capacity(times.len());
    let mut f = f0.clone();
    let mut prev = f0.time;
    for &t in times {
        let target = f0.time + t;
        if target < prev - 1e-14 {
            return Err(Error::InvalidParam(format!("times must be increasing, got {t} after {}", prev - f0.time)));
        }
        let span = target - f.time;
        let steps = (span / dt - 1e-9).ceil().max(0.0) as usize;
        for _ in 0..steps {
            f = step_boltzmann(q, &f, span / steps as f64)?;
        }
        f.time = target;
        prev = target;
        out.push(f.clone());
    }
    Ok(out)
}
