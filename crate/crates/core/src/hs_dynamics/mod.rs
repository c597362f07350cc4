//! Event-driven hard-sphere flow on the unit torus.
//!
//! Particles of diameter `epsilon` move freely and reflect specularly at
//! contact. [`run`] advances a [`SystemState`] through all collisions up to a
//! horizon and records a [`Trajectory`]; [`state_at`] replays the recorded
//! events so that any intermediate state can be recovered bit-for-bit.

mod collision;
mod engine;
mod io;
mod spatial;

pub use collision::{contact_time, predict_pair_collision, reflect_velocities, GRAZING_TOL};
pub use engine::{run, run_with, RunOptions};
pub use io::{read_trajectory, write_trajectory, MAGIC};
pub use spatial::{check_exclusion, first_overlap, min_pair_distance};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::Vector;

/// Dimension, diameter and Boltzmann-Grad scaling factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub d: usize,
    pub epsilon: f64,
    pub mu: f64,
    pub t_max: f64,
}

impl ScalingConfig {
    pub fn from_mu(d: usize, mu: f64, t_max: f64) -> Result<Self> {
        if !(d == 2 || d == 3) {
            return Err(Error::InvalidParam(format!("dimension must be 2 or 3, got {d}")));
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidParam(format!("mu must be positive, got {mu}")));
        }
        let cfg = ScalingConfig { d, epsilon: mu.powf(-1.0 / (d as f64 - 1.0)), mu, t_max };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_epsilon(d: usize, epsilon: f64, t_max: f64) -> Result<Self> {
        if !(d == 2 || d == 3) {
            return Err(Error::InvalidParam(format!("dimension must be 2 or 3, got {d}")));
        }
        let cfg = ScalingConfig { d, epsilon, mu: epsilon.powi(-(d as i32 - 1)), t_max };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d == 2 || self.d == 3) {
            return Err(Error::InvalidParam(format!("dimension must be 2 or 3, got {}", self.d)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(Error::InvalidParam(format!(
                "epsilon must lie in (0, 0.25), got {}",
                self.epsilon
            )));
        }
        let prod = self.mu * self.epsilon.powi(self.d as i32 - 1);
        if (prod - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParam(format!(
                "mu * epsilon^(d-1) = {prod}, expected 1"
            )));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::InvalidParam(format!("t_max must be nonnegative, got {}", self.t_max)));
        }
        Ok(())
    }

    /// Surface factor of the hard-sphere kernel, the integral of `(e·ω)_+` over
    /// the unit sphere: 2 in two dimensions, π in three.
    pub fn kernel_constant(d: usize) -> f64 {
        if d == 2 {
            2.0
        } else {
            std::f64::consts::PI
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vector,
    pub velocity: Vector,
}

impl Particle {
    pub fn new(position: Vector, velocity: Vector) -> Self {
        Particle { position: position.wrap_unit(), velocity }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub time: f64,
    pub particles: Vec<Particle>,
    pub collision_count: u64,
}

impl SystemState {
    pub fn new(particles: Vec<Particle>) -> Self {
        SystemState { time: 0.0, particles, collision_count: 0 }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn momentum(&self) -> Vector {
        let mut p = [crate::stats::KahanSum::new(); 3];
        for q in &self.particles {
            for k in 0..3 {
                p[k].add(q.velocity.0[k]);
            }
        }
        Vector([p[0].value(), p[1].value(), p[2].value()])
    }

    /// Twice the kinetic energy, `Σ |v_i|²`.
    pub fn energy(&self) -> f64 {
        crate::stats::neumaier_sum(self.particles.iter().map(|p| p.velocity.norm2()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub time: f64,
    pub i: usize,
    pub j: usize,
    /// Unit vector `(x_i - x_j)/|x_i - x_j|` at contact (minimal image).
    pub omega: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: ScalingConfig,
    pub seed: u64,
    pub initial: SystemState,
    pub events: Vec<CollisionEvent>,
    pub horizon: f64,
}

/// Free transport `x <- x + v dt (mod 1)`. Fails if the result overlaps, which
/// means a collision was skipped.
pub fn advance_free(state: &SystemState, dt: f64, epsilon: f64) -> Result<SystemState> {
    let mut out = state.clone();
    for p in &mut out.particles {
        p.position = (p.position + p.velocity * dt).wrap_unit();
    }
    out.time += dt;
    check_exclusion(&out, epsilon, 1e-10)?;
    Ok(out)
}

/// Negates every velocity; positions and time are kept.
pub fn time_reverse(state: &SystemState) -> SystemState {
    let mut out = state.clone();
    for p in &mut out.particles {
        p.velocity = -p.velocity;
    }
    out
}

/// Lazily transported particle: position is stored at its own last update time.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Lazy {
    pub x: Vector,
    pub v: Vector,
    pub t: f64,
}

impl Lazy {
    #[inline]
    pub fn position_at(&self, t: f64) -> Vector {
        (self.x + self.v * (t - self.t)).wrap_unit()
    }

    #[inline]
    pub fn sync(&mut self, t: f64) {
        self.x = self.position_at(t);
        self.t = t;
    }
}

/// Applies a recorded collision to lazily transported particles. The engine
/// and the replay in [`state_at`] share this routine, which keeps both
/// bit-identical.
#[inline]
pub(crate) fn apply_event(parts: &mut [Lazy], ev: &CollisionEvent) {
    parts[ev.i].sync(ev.time);
    parts[ev.j].sync(ev.time);
    let (vi, vj) = reflect_velocities(parts[ev.i].v, parts[ev.j].v, ev.omega);
    parts[ev.i].v = vi;
    parts[ev.j].v = vj;
}

pub(crate) fn to_lazy(state: &SystemState) -> Vec<Lazy> {
    state
        .particles
        .iter()
        .map(|p| Lazy { x: p.position, v: p.velocity, t: state.time })
        .collect()
}

pub(crate) fn from_lazy(parts: &mut [Lazy], t: f64, collision_count: u64) -> SystemState {
    let particles = parts
        .iter_mut()
        .map(|p| {
            p.sync(t);
            Particle { position: p.x, velocity: p.v }
        })
        .collect();
    SystemState { time: t, particles, collision_count }
}

/// Reconstructs the state at time `t` by replaying events up to `t` and then
/// transporting freely.
pub fn state_at(traj: &Trajectory, t: f64) -> Result<SystemState> {
    let t0 = traj.initial.time;
    if !(t >= t0 && t <= traj.horizon) {
        return Err(Error::OutOfRange { t, horizon: traj.horizon });
    }
    let mut parts = to_lazy(&traj.initial);
    let mut count = traj.initial.collision_count;
    for ev in traj.events.iter().take_while(|e| e.time <= t) {
        apply_event(&mut parts, ev);
        count += 1;
    }
    Ok(from_lazy(&mut parts, t, count))
}

/// States at each of the given (nondecreasing) times, in one replay pass.
pub fn states_at(traj: &Trajectory, times: &[f64]) -> Result<Vec<SystemState>> {
    let mut parts = to_lazy(&traj.initial);
    let mut count = traj.initial.collision_count;
    let mut next = 0;
    let mut out = Vec::with_capacity(times.len());
    let mut last = traj.initial.time;
    for &t in times {
        if !(t >= traj.initial.time && t <= traj.horizon) || t < last {
            return Err(Error::OutOfRange { t, horizon: traj.horizon });
        }
        last = t;
        while next < traj.events.len() && traj.events[next].time <= t {
            apply_event(&mut parts, &traj.events[next]);
            count += 1;
            next += 1;
        }
        let mut snapshot = parts.clone();
        out.push(from_lazy(&mut snapshot, t, count));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_relation() {
        let c = ScalingConfig::from_mu(2, 500.0, 1.0).unwrap();
        assert!((c.epsilon - 0.002).abs() < 1e-15);
        let c = ScalingConfig::from_epsilon(3, 0.1, 1.0).unwrap();
        assert!((c.mu - 100.0).abs() < 1e-9);
        assert!(ScalingConfig::from_epsilon(2, 0.3, 1.0).is_err());
        assert!(ScalingConfig::from_mu(4, 10.0, 1.0).is_err());
    }

    #[test]
    fn reverse_twice_is_identity() {
        let s = SystemState::new(vec![
            Particle::new(Vector::new2(0.1, 0.2), Vector::new2(1.0, -0.5)),
            Particle::new(Vector::new2(0.6, 0.7), Vector::new2(0.0, 0.0)),
        ]);
        assert_eq!(time_reverse(&time_reverse(&s)), s);
        let z = SystemState::new(vec![Particle::new(Vector::new2(0.3, 0.3), Vector::ZERO)]);
        assert_eq!(time_reverse(&z), z);
    }

    #[test]
    fn advance_free_wraps() {
        let s = SystemState::new(vec![Particle::new(Vector::new2(0.25, 0.5), Vector::new2(1.0, 0.0))]);
        assert_eq!(advance_free(&s, 0.0, 0.01).unwrap().particles, s.particles);
        let t = advance_free(&s, 1.0, 0.01).unwrap();
        assert!((t.particles[0].position.0[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn advance_free_flags_overlap() {
        let s = SystemState::new(vec![
            Particle::new(Vector::new2(0.2, 0.5), Vector::new2(1.0, 0.0)),
            Particle::new(Vector::new2(0.4, 0.5), Vector::new2(-1.0, 0.0)),
        ]);
        assert!(matches!(advance_free(&s, 0.1, 0.05), Err(Error::Overlap { .. })));
    }
}
