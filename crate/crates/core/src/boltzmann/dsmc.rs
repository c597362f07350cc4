use std::f64::consts::PI;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::hs_dynamics::{reflect_velocities, ScalingConfig};
use crate::init_gc::DensityProfile;
use crate::rng::Rng;
use crate::stats::KahanSum;
use crate::vector::Vector;

/// Direct simulation Monte Carlo for the homogeneous hard-sphere Boltzmann
/// equation.
///
/// Runs in continuous time: unordered pairs collide at rate
/// `c_d |v_i - v_j| / n`, realized by thinning a uniform-pair majorant at rate
/// `c_d g_max (n - 1) / 2`. The scattering direction is drawn with density
/// proportional to `(ĝ·ω)_+`. `g_max` is twice the largest speed, which bounds
/// every relative speed and is raised whenever a collision produces a faster
/// particle.
#[derive(Debug, Clone)]
pub struct Dsmc {
    pub d: usize,
    pub velocities: Vec<Vector>,
    pub time: f64,
    pub collisions: u64,
    g_max: f64,
    rng: Rng,
}

impl Dsmc {
    pub fn new(f0: &DensityProfile, n: usize, mut rng: Rng) -> Result<Self> {
        let origin = Vector::ZERO;
        let velocities = (0..n).map(|_| f0.sample_velocity(&origin, &mut rng)).collect();
        Self::from_velocities(f0.d, velocities, rng)
    }

    pub fn from_velocities(d: usize, velocities: Vec<Vector>, rng: Rng) -> Result<Self> {
        if velocities.len() < 2 {
            return Err(Error::InvalidParam("DSMC needs at least two particles".into()));
        }
        let g_max = 2.0 * velocities.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(Dsmc { d, velocities, time: 0.0, collisions: 0, g_max, rng })
    }

    fn scattering_direction(&mut self, g: &Vector) -> Vector {
        let gh = *g * (1.0 / g.norm());
        if self.d == 2 {
            let theta = (2.0 * self.rng.random::<f64>() - 1.0).asin();
            let perp = Vector::new2(-gh.0[1], gh.0[0]);
            return gh * theta.cos() + perp * theta.sin();
        }
        let u = self.rng.random::<f64>().sqrt();
        let phi = 2.0 * PI * self.rng.random::<f64>();
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
        let s = (1.0 - u * u).max(0.0).sqrt();
        gh * u + e1 * (s * phi.cos()) + e2 * (s * phi.sin())
    }

    /// Advances the particle system to absolute time `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        let n = self.velocities.len();
        let cd = ScalingConfig::kernel_constant(self.d);
        loop {
            let rate = cd * self.g_max * (n - 1) as f64 / 2.0;
            let wait = -(1.0 - self.rng.random::<f64>()).ln() / rate;
            if self.time + wait > t_end {
                self.time = t_end;
                return Ok(());
            }
            self.time += wait;
            let i = self.rng.random_range(0..n);
            let mut j = self.rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let g = self.velocities[i] - self.velocities[j];
            let speed = g.norm();
            if speed > self.g_max {
                return Err(Error::MajorantUnderestimate { speed, bound: self.g_max });
            }
            if self.rng.random::<f64>() * self.g_max >= speed {
                continue;
            }
            let omega = self.scattering_direction(&g);
            let (vi, vj) = reflect_velocities(self.velocities[i], self.velocities[j], omega);
            self.velocities[i] = vi;
            self.velocities[j] = vj;
            self.collisions += 1;
            self.g_max = self.g_max.max(2.0 * vi.norm().max(vj.norm()));
        }
    }

    /// Particle average of an observable.
    pub fn mean<F: Fn(&Vector) -> f64>(&self, phi: F) -> f64 {
        let mut s = KahanSum::new();
        for v in &self.velocities {
            s.add(phi(v));
        }
        s.value() / self.velocities.len() as f64
    }
}
