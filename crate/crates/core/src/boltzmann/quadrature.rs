use std::f64::consts::PI;

use super::grid::VelocityGrid;
use crate::error::{Error, Result};
use crate::stats::gauss_legendre;
use crate::vector::Vector;

/// Interpolation weights of a point on the grid: tensor product of centred
/// three-point quadratic Lagrange stencils, so quadratics (and with them mass,
/// momentum and energy) are reproduced exactly.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub idx: [usize; 27],
    pub w: [f64; 27],
    pub len: usize,
}

impl Stencil {
    /// `None` when the point lies outside the hull of the cell centres.
    pub fn at(grid: &VelocityGrid, v: &Vector) -> Option<Stencil> {
        let h = grid.h();
        let m = grid.m;
        let mut axis_idx = [[0usize; 3]; 3];
        let mut axis_w = [[0.0f64; 3]; 3];
        for k in 0..grid.d {
            let t = (v.0[k] + grid.v_max) / h - 0.5;
            if !(t >= -1e-9 && t <= (m - 1) as f64 + 1e-9) {
                return None;
            }
            let c = (t.round() as usize).clamp(1, m - 2);
            let s = t - c as f64;
            axis_idx[k] = [c - 1, c, c + 1];
            axis_w[k] = [0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)];
        }
        let mut st = Stencil { idx: [0; 27], w: [0.0; 27], len: 0 };
        let stride1 = m;
        let stride2 = m * m;
        if grid.d == 2 {
            for j in 0..3 {
                for i in 0..3 {
                    st.idx[st.len] = axis_idx[0][i] + stride1 * axis_idx[1][j];
                    st.w[st.len] = axis_w[0][i] * axis_w[1][j];
                    st.len += 1;
                }
            }
        } else {
            for l in 0..3 {
                for j in 0..3 {
                    for i in 0..3 {
                        st.idx[st.len] = axis_idx[0][i] + stride1 * axis_idx[1][j] + stride2 * axis_idx[2][l];
                        st.w[st.len] = axis_w[0][i] * axis_w[1][j] * axis_w[2][l];
                        st.len += 1;
                    }
                }
            }
        }
        Some(st)
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.len {
            s += self.w[k] * values[self.idx[k]];
        }
        s
    }

    pub fn deposit(&self, out: &mut [f64], amount: f64) {
        for k in 0..self.len {
            out[self.idx[k]] += self.w[k] * amount;
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct AngleNode {
    /// Component along the relative velocity direction.
    along: f64,
    /// Components along the two (one in 2D) transverse directions.
    t1: f64,
    t2: f64,
    weight: f64,
}

/// Quadrature of the hard-sphere collision integral on a velocity grid.
///
/// Pairs of grid points are visited once per unordered pair. For a pair with
/// relative velocity `g`, scattering directions are parametrized relative to
/// `ĝ`, over the half sphere where `(g·ω) > 0`: Gauss-Legendre in the angle to
/// `ĝ` in 2D; Gauss-Legendre in `cos θ` times a uniform azimuth grid in 3D. The
/// node set is invariant under swapping the pair (`ĝ -> -ĝ`, `ω -> -ω`), which
/// is what makes the discrete operator symmetric. Nodes whose post-collisional
/// velocities leave the hull of the grid are dropped entirely (gain and loss),
/// which keeps the conservation laws exact.
#[derive(Debug, Clone)]
pub struct CollisionQuadrature {
    pub grid: VelocityGrid,
    nodes: Vec<AngleNode>,
    points: Vec<Vector>,
}

impl CollisionQuadrature {
    /// `angles` is the number of polar nodes; in 3D the azimuth uses
    /// `2 * angles` uniform nodes.
    pub fn new(grid: VelocityGrid, angles: usize) -> Result<Self> {
        if angles == 0 {
            return Err(Error::InvalidParam("need at least one angular node".into()));
        }
        let (x, w) = gauss_legendre(angles);
        let mut nodes = Vec::new();
        if grid.d == 2 {
            for (xi, wi) in x.iter().zip(&w) {
                let theta = 0.5 * PI * xi;
                nodes.push(AngleNode { along: theta.cos(), t1: theta.sin(), t2: 0.0, weight: 0.5 * PI * wi * theta.cos() });
            }
        } else {
            let n_phi = 2 * angles;
            for (xi, wi) in x.iter().zip(&w) {
                let u = 0.5 * (xi + 1.0);
                let s = (1.0 - u * u).max(0.0).sqrt();
                for j in 0..n_phi {
                    let phi = 2.0 * PI * j as f64 / n_phi as f64;
                    nodes.push(AngleNode {
                        along: u,
                        t1: s * phi.cos(),
                        t2: s * phi.sin(),
                        weight: 0.5 * wi * u * 2.0 * PI / n_phi as f64,
                    });
                }
            }
        }
        Ok(CollisionQuadrature { grid, nodes, points: grid.points() })
    }

    /// Default resolution used by the solvers.
    pub fn standard(grid: VelocityGrid) -> Result<Self> {
        Self::new(grid, if grid.d == 2 { 16 } else { 6 })
    }

    pub fn angle_count(&self) -> usize {
        self.nodes.len()
    }

    fn frame(&self, g: &Vector) -> (Vector, Vector, Vector) {
        let gh = *g * (1.0 / g.norm());
        if self.grid.d == 2 {
            return (gh, Vector::new2(-gh.0[1], gh.0[0]), Vector::ZERO);
        }
        // Reference axis chosen from |ĝ| so that ĝ and -ĝ pick the same one.
        let mut k = 0;
        for j in 1..3 {
            if gh.0[j].abs() < gh.0[k].abs() {
                k = j;
            }
        }
        let mut a = Vector::ZERO;
        a.0[k] = 1.0;
        let e1 = gh.cross(&a);
        let e1 = e1 * (1.0 / e1.norm());
        let e2 = gh.cross(&e1);
        (gh, e1, e2)
    }

    /// Visits every unordered pair `a < b` and every scattering node. The
    /// callback gets the pair, the node weight `W` (kernel times angular
    /// weight, counted for both orderings) and the stencils of the two
    /// post-collisional velocities.
    pub fn visit<F: FnMut(usize, usize, f64, &Stencil, &Stencil)>(&self, mut f: F) {
        let n = self.points.len();
        for a in 0..n {
            let va = self.points[a];
            for b in (a + 1)..n {
                let vb = self.points[b];
                let g = va - vb;
                let gn = g.norm();
                let (gh, e1, e2) = self.frame(&g);
                for node in &self.nodes {
                    let omega = gh * node.along + e1 * node.t1 + e2 * node.t2;
                    let k = g.dot(&omega);
                    let vp = va - omega * k;
                    let wp = vb + omega * k;
                    let (Some(sv), Some(sw)) = (Stencil::at(&self.grid, &vp), Stencil::at(&self.grid, &wp)) else {
                        continue;
                    };
                    f(a, b, 2.0 * gn * node.weight, &sv, &sw);
                }
            }
        }
    }

    /// Visits every unordered pair `a < b` and every scattering node with the
    /// exact post-collisional velocities, including nodes whose outgoing
    /// velocities leave the grid. For integrands evaluated in closed form.
    pub fn visit_velocities<F: FnMut(usize, usize, f64, Vector, Vector)>(&self, mut f: F) {
        let n = self.points.len();
        for a in 0..n {
            let va = self.points[a];
            for b in (a + 1)..n {
                let vb = self.points[b];
                let g = va - vb;
                let gn = g.norm();
                let (gh, e1, e2) = self.frame(&g);
                for node in &self.nodes {
                    let omega = gh * node.along + e1 * node.t1 + e2 * node.t2;
                    let k = g.dot(&omega);
                    f(a, b, 2.0 * gn * node.weight, va - omega * k, vb + omega * k);
                }
            }
        }
    }

    /// Same as [`visit`](Self::visit) but reports the dropped nodes instead.
    pub fn visit_dropped<F: FnMut(usize, usize, f64)>(&self, mut f: F) {
        let n = self.points.len();
        for a in 0..n {
            for b in (a + 1)..n {
                let g = self.points[a] - self.points[b];
                let (gh, e1, e2) = self.frame(&g);
                for node in &self.nodes {
                    let omega = gh * node.along + e1 * node.t1 + e2 * node.t2;
                    let k = g.dot(&omega);
                    let vp = self.points[a] - omega * k;
                    let wp = self.points[b] + omega * k;
                    if Stencil::at(&self.grid, &vp).is_none() || Stencil::at(&self.grid, &wp).is_none() {
                        f(a, b, 2.0 * g.norm() * node.weight);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_reproduces_quadratics() {
        let grid = VelocityGrid::new(2, 3.0, 8).unwrap();
        let vals = grid.sample(|v| 1.0 + 2.0 * v.0[0] - v.0[1] + v.norm2() + 0.5 * v.0[0] * v.0[1]);
        for p in [Vector::new2(0.1, -0.2), Vector::new2(2.6, 2.6), Vector::new2(-2.62, 1.1)] {
            let st = Stencil::at(&grid, &p).unwrap();
            let exact = 1.0 + 2.0 * p.0[0] - p.0[1] + p.norm2() + 0.5 * p.0[0] * p.0[1];
            assert!((st.eval(&vals) - exact).abs() < 1e-12);
        }
        assert!(Stencil::at(&grid, &Vector::new2(2.9, 0.0)).is_none());
    }

    #[test]
    fn angular_weights_integrate_kernel() {
        // ∫ (ĝ·ω)_+ dω = 2 in 2D and π in 3D.
        for (d, exact) in [(2usize, 2.0), (3, PI)] {
            let grid = VelocityGrid::new(d, 3.0, 4).unwrap();
            let q = CollisionQuadrature::new(grid, 8).unwrap();
            let s: f64 = q.nodes.iter().map(|n| n.weight).sum();
            assert!((s - exact).abs() < 1e-10, "d={d} {s}");
        }
    }
}
