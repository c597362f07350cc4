use nalgebra::DMatrix;

use super::grid::{VelocityGrid, VelocityGridFn};
use super::quadrature::{CollisionQuadrature, Stencil};
use crate::error::{Error, Result};
use crate::hs_dynamics::ScalingConfig;

fn check_len(grid: &VelocityGrid, v: &[f64], what: &str) -> Result<()> {
    if v.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{what}: {} values for a grid of {}", v.len(), grid.len())));
    }
    Ok(())
}

/// Adds `amount * D` where `D = δ_{v'} + δ_{w'} - δ_a - δ_b` (interpolated).
#[inline]
fn deposit_jump(out: &mut [f64], a: usize, b: usize, sv: &Stencil, sw: &Stencil, amount: f64) {
    sv.deposit(out, amount);
    sw.deposit(out, amount);
    out[a] -= amount;
    out[b] -= amount;
}

/// `Δφ = φ(v') + φ(w') - φ(a) - φ(b)` with interpolated post-collisional values.
#[inline]
fn jump(phi: &[f64], a: usize, b: usize, sv: &Stencil, sw: &Stencil) -> f64 {
    sv.eval(phi) + sw.eval(phi) - phi[a] - phi[b]
}

/// Symmetric bilinear collision operator `Q(f, g)`, so that `Q(f, f)` is the
/// hard-sphere collision operator.
pub fn bilinear(q: &CollisionQuadrature, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    check_len(&q.grid, f, "f")?;
    check_len(&q.grid, g, "g")?;
    let dv = q.grid.cell_volume();
    let mut out = vec![0.0; f.len()];
    q.visit(|a, b, w, sv, sw| {
        let p = 0.5 * (f[a] * g[b] + g[a] * f[b]);
        if p != 0.0 {
            deposit_jump(&mut out, a, b, sv, sw, 0.5 * dv * w * p);
        }
    });
    Ok(out)
}

pub fn collision_operator(q: &CollisionQuadrature, f: &VelocityGridFn) -> Result<Vec<f64>> {
    bilinear(q, &f.values, &f.values)
}

/// Linearized operator `ℒ_f h = Q(f, h) + Q(h, f)`, assembled by depositing
/// the post-collisional contributions.
pub fn linearized_apply(q: &CollisionQuadrature, f: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    let mut out = bilinear(q, f, h)?;
    for x in &mut out {
        *x *= 2.0;
    }
    Ok(out)
}

/// Adjoint `ℒ_f^* φ(v) = ∫∫ ((v - w)·ω)_+ f(w) Δφ`, assembled by gathering
/// interpolated test-function values. Independent of the deposit path, so
/// `⟨ℒh, φ⟩ = ⟨h, ℒ^*φ⟩` is a genuine check.
pub fn linearized_adjoint_apply(q: &CollisionQuadrature, f: &[f64], phi: &[f64]) -> Result<Vec<f64>> {
    check_len(&q.grid, f, "f")?;
    check_len(&q.grid, phi, "phi")?;
    let dv = q.grid.cell_volume();
    let mut out = vec![0.0; f.len()];
    q.visit(|a, b, w, sv, sw| {
        let d = 0.5 * dv * w * jump(phi, a, b, sv, sw);
        out[a] += f[b] * d;
        out[b] += f[a] * d;
    });
    Ok(out)
}

/// Collision frequency `ν(v) = ∫∫ ((v - w)·ω)_+ f(w)` over the retained nodes,
/// the loss part of `Q(f, f) = gain - ν f`.
pub fn loss_frequency(q: &CollisionQuadrature, f: &[f64]) -> Result<Vec<f64>> {
    check_len(&q.grid, f, "f")?;
    let dv = q.grid.cell_volume();
    let mut out = vec![0.0; f.len()];
    q.visit(|a, b, w, _, _| {
        out[a] += 0.5 * dv * w * f[b];
        out[b] += 0.5 * dv * w * f[a];
    });
    Ok(out)
}

/// Matrix of `ℒ_f` in the nodal basis: `(ℒ_f h)_c = Σ_b L[c, b] h_b`.
pub fn linearized_matrix(q: &CollisionQuadrature, f: &[f64]) -> Result<DMatrix<f64>> {
    check_len(&q.grid, f, "f")?;
    let n = f.len();
    let dv = q.grid.cell_volume();
    let mut m = DMatrix::<f64>::zeros(n, n);
    q.visit(|a, b, w, sv, sw| {
        // Column b carries f_a, column a carries f_b.
        for (col, coef) in [(b, 0.5 * dv * w * f[a]), (a, 0.5 * dv * w * f[b])] {
            if coef == 0.0 {
                continue;
            }
            let mut c = m.column_mut(col);
            for k in 0..sv.len {
                c[sv.idx[k]] += coef * sv.w[k];
            }
            for k in 0..sw.len {
                c[sw.idx[k]] += coef * sw.w[k];
            }
            c[a] -= coef;
            c[b] -= coef;
        }
    });
    Ok(m)
}

/// Nodal covariance rate of the collision noise: for a grid field `η`
/// paired as `⟨h, η⟩ = ΔV Σ h_c η_c`, `Var⟨h, dη⟩ = dt · Cov_f(h, h)` with
/// `Cov_f(h, h) = ½ ∫ f f (Δh)²`.
///
/// Negative undershoots of `f` are clipped to zero here so that the
/// covariance stays positive semidefinite.
pub fn noise_covariance(q: &CollisionQuadrature, f: &[f64]) -> Result<DMatrix<f64>> {
    check_len(&q.grid, f, "f")?;
    let f: Vec<f64> = f.iter().map(|x| x.max(0.0)).collect();
    let n = f.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut idx = [0usize; 56];
    let mut val = [0.0f64; 56];
    q.visit(|a, b, w, sv, sw| {
        let coef = 0.5 * w * f[a] * f[b];
        if coef == 0.0 {
            return;
        }
        let mut len = 0;
        for s in [sv, sw] {
            for k in 0..s.len {
                idx[len] = s.idx[k];
                val[len] = s.w[k];
                len += 1;
            }
        }
        idx[len] = a;
        val[len] = -1.0;
        idx[len + 1] = b;
        val[len + 1] = -1.0;
        len += 2;
        for i in 0..len {
            let ci = coef * val[i];
            let mut col = m.column_mut(idx[i]);
            for j in 0..len {
                col[idx[j]] += ci * val[j];
            }
        }
    });
    Ok(m)
}

/// `Cov_f(φ_i, φ_j) = ½ ∫ f f Δφ_i Δφ_j` for a family of grid test functions.
pub fn collision_covariance(q: &CollisionQuadrature, f: &[f64], family: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    check_len(&q.grid, f, "f")?;
    let f: Vec<f64> = f.iter().map(|x| x.max(0.0)).collect();
    for phi in family {
        check_len(&q.grid, phi, "test function")?;
    }
    let k = family.len();
    let dv = q.grid.cell_volume();
    let mut m = DMatrix::<f64>::zeros(k, k);
    let mut jumps = vec![0.0; k];
    q.visit(|a, b, w, sv, sw| {
        let coef = 0.5 * w * f[a] * f[b] * dv * dv;
        if coef == 0.0 {
            return;
        }
        for (i, phi) in family.iter().enumerate() {
            jumps[i] = jump(phi, a, b, sv, sw);
        }
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] += coef * jumps[i] * jumps[j];
            }
        }
    });
    Ok(m)
}

/// Mean free time `1 / (c_d ⟨|v - w|⟩_{f ⊗ f})` of a grid density.
pub fn mean_free_time(f: &VelocityGridFn) -> f64 {
    let g = &f.grid;
    let pts = g.points();
    let mut s = crate::stats::KahanSum::new();
    for a in 0..pts.len() {
        if f.values[a] == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for b in 0..pts.len() {
            inner += f.values[b] * (pts[a] - pts[b]).norm();
        }
        s.add(f.values[a] * inner);
    }
    let mean_rel = s.value() * g.cell_volume() * g.cell_volume();
    1.0 / (ScalingConfig::kernel_constant(g.d) * mean_rel)
}

/// Mean free time of a centred Maxwellian with inverse temperature `beta`.
pub fn maxwellian_mean_free_time(d: usize, beta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mean_rel = if d == 2 { (pi / beta).sqrt() } else { 4.0 / (pi * beta).sqrt() };
    1.0 / (ScalingConfig::kernel_constant(d) * mean_rel)
}

/// Weight fraction of the collision integral lost to nodes leaving the grid.
pub fn truncated_fraction(q: &CollisionQuadrature, f: &[f64]) -> Result<f64> {
    check_len(&q.grid, f, "f")?;
    let mut kept = 0.0;
    let mut dropped = 0.0;
    q.visit(|a, b, w, _, _| kept += w * f[a] * f[b]);
    q.visit_dropped(|a, b, w| dropped += w * f[a] * f[b]);
    Ok(if kept + dropped > 0.0 { dropped / (kept + dropped) } else { 0.0 })
}
