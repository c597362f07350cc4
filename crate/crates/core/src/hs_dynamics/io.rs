//! Binary trajectory format (little-endian):
//!
//! ```text
//! magic        5 bytes  "HSBG1"
//! d            u32
//! epsilon      f64
//! mu           f64
//! n_particles  u64
//! horizon      f64
//! seed         u64
//! initial      time f64, collision_count u64,
//!              then per particle: position d×f64, velocity d×f64
//! n_events     u64
//! events       per event: time f64, i u32, j u32, omega d×f64
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::vector::Vector;

use super::{CollisionEvent, Particle, ScalingConfig, SystemState, Trajectory};

pub const MAGIC: &[u8; 5] = b"HSBG1";

fn put_vec<W: Write>(w: &mut W, v: &Vector, d: usize) -> Result<()> {
    for k in 0..d {
        w.write_all(&v.0[k].to_le_bytes())?;
    }
    Ok(())
}

pub fn write_trajectory<W: Write>(w: &mut W, traj: &Trajectory) -> Result<()> {
    let d = traj.config.d;
    w.write_all(MAGIC)?;
    w.write_all(&(d as u32).to_le_bytes())?;
    w.write_all(&traj.config.epsilon.to_le_bytes())?;
    w.write_all(&traj.config.mu.to_le_bytes())?;
    w.write_all(&(traj.initial.particles.len() as u64).to_le_bytes())?;
    w.write_all(&traj.horizon.to_le_bytes())?;
    w.write_all(&traj.seed.to_le_bytes())?;
    w.write_all(&traj.initial.time.to_le_bytes())?;
    w.write_all(&traj.initial.collision_count.to_le_bytes())?;
    for p in &traj.initial.particles {
        put_vec(w, &p.position, d)?;
        put_vec(w, &p.velocity, d)?;
    }
    w.write_all(&(traj.events.len() as u64).to_le_bytes())?;
    for e in &traj.events {
        w.write_all(&e.time.to_le_bytes())?;
        w.write_all(&(e.i as u32).to_le_bytes())?;
        w.write_all(&(e.j as u32).to_le_bytes())?;
        put_vec(w, &e.omega, d)?;
    }
    Ok(())
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0
            .read_exact(&mut b)
            .map_err(|e| Error::Format(format!("truncated input: {e}")))?;
        Ok(b)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn vec(&mut self, d: usize) -> Result<Vector> {
        let mut v = Vector::ZERO;
        for k in 0..d {
            v.0[k] = self.f64()?;
        }
        Ok(v)
    }
}

pub fn read_trajectory<R: Read>(r: R) -> Result<Trajectory> {
    let mut r = Reader(r);
    let magic: [u8; 5] = r.bytes()?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let d = r.u32()? as usize;
    if !(d == 2 || d == 3) {
        return Err(Error::Format(format!("bad dimension {d}")));
    }
    let epsilon = r.f64()?;
    let mu = r.f64()?;
    let n = r.u64()? as usize;
    let horizon = r.f64()?;
    let seed = r.u64()?;
    let time = r.f64()?;
    let collision_count = r.u64()?;
    let mut particles = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        let position = r.vec(d)?;
        let velocity = r.vec(d)?;
        particles.push(Particle { position, velocity });
    }
    let m = r.u64()? as usize;
    let mut events = Vec::with_capacity(m.min(1 << 24));
    for _ in 0..m {
        let time = r.f64()?;
        let i = r.u32()? as usize;
        let j = r.u32()? as usize;
        let omega = r.vec(d)?;
        if i >= n || j >= n {
            return Err(Error::Format(format!("event references particle out of range ({i}, {j})")));
        }
        events.push(CollisionEvent { time, i, j, omega });
    }
    Ok(Trajectory {
        config: ScalingConfig { d, epsilon, mu, t_max: horizon },
        seed,
        initial: SystemState { time, particles, collision_count },
        events,
        horizon,
    })
}
