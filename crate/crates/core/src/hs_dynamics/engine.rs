use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};
use crate::vector::{min_image1, Vector};

use super::collision::contact_time;
use super::{apply_event, CollisionEvent, Lazy, ScalingConfig, SystemState, Trajectory};

/// Engine tuning knobs. The defaults implement the documented behaviour.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Abort when this many collisions fall into a window of `zeno_window`.
    pub zeno_events: usize,
    pub zeno_window: f64,
    /// Override for the number of cells per axis (testing).
    pub cells_per_axis: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { zeno_events: 10_000, zeno_window: 1e-9, cells_per_axis: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Collision = 0,
    Crossing = 1,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: Kind,
    i: u32,
    /// partner for collisions, axis * 2 + (direction > 0) for crossings
    j: u32,
    count_i: u64,
    count_j: u64,
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Event {
    // reversed so that BinaryHeap pops the earliest event; ties by kind then indices
    fn cmp(&self, o: &Self) -> Ordering {
        o.time
            .total_cmp(&self.time)
            .then(o.kind.cmp(&self.kind))
            .then(o.i.cmp(&self.i))
            .then(o.j.cmp(&self.j))
    }
}

struct Cells {
    d: usize,
    n: usize,
    side: f64,
    members: Vec<Vec<u32>>,
    of: Vec<[usize; 3]>,
    scan_images: bool,
}

impl Cells {
    fn index(&self, c: [usize; 3]) -> usize {
        let mut idx = 0;
        for k in (0..self.d).rev() {
            idx = idx * self.n + c[k];
        }
        idx
    }

    fn insert(&mut self, p: usize, c: [usize; 3]) {
        let idx = self.index(c);
        self.members[idx].push(p as u32);
        self.of[p] = c;
    }

    fn remove(&mut self, p: usize) {
        let idx = self.index(self.of[p]);
        let list = &mut self.members[idx];
        let pos = list.iter().position(|&q| q as usize == p).expect("particle registered in its cell");
        list.swap_remove(pos);
    }

    fn neighbour_cells(&self, c: [usize; 3], out: &mut Vec<usize>) {
        out.clear();
        let n = self.n as isize;
        let zs: &[isize] = if self.d == 3 { &[-1, 0, 1] } else { &[0] };
        for dx in -1..=1isize {
            for dy in -1..=1isize {
                for &dz in zs {
                    let w = |a: usize, o: isize| ((a as isize + o).rem_euclid(n)) as usize;
                    let cc = [w(c[0], dx), w(c[1], dy), if self.d == 3 { w(c[2], dz) } else { 0 }];
                    out.push(self.index(cc));
                }
            }
        }
    }
}

/// Runs the hard-sphere flow for a duration `duration` starting from `state`.
pub fn run(state: &SystemState, duration: f64, cfg: &ScalingConfig) -> Result<Trajectory> {
    run_with(state, duration, cfg, RunOptions::default())
}

pub fn run_with(state: &SystemState, duration: f64, cfg: &ScalingConfig, opts: RunOptions) -> Result<Trajectory> {
    cfg.validate()?;
    if !(duration >= 0.0) {
        return Err(Error::InvalidParam(format!("duration must be nonnegative, got {duration}")));
    }
    for (k, p) in state.particles.iter().enumerate() {
        if !(p.position.is_finite() && p.velocity.is_finite()) {
            return Err(Error::InvalidParam(format!("particle {k} has non-finite coordinates")));
        }
        if cfg.d == 2 && (p.position.0[2] != 0.0 || p.velocity.0[2] != 0.0) {
            return Err(Error::InvalidParam(format!("particle {k} has a third component in d = 2")));
        }
    }
    super::check_exclusion(state, cfg.epsilon, 1e-12)?;

    let mut sim = Sim::new(state, cfg, opts);
    let t_end = state.time + duration;
    sim.run_until(t_end)?;
    Ok(Trajectory {
        config: *cfg,
        seed: 0,
        initial: state.clone(),
        events: sim.events,
        horizon: t_end,
    })
}

struct Sim {
    d: usize,
    eps: f64,
    parts: Vec<Lazy>,
    counts: Vec<u64>,
    cells: Cells,
    heap: BinaryHeap<Event>,
    events: Vec<CollisionEvent>,
    recent: VecDeque<f64>,
    opts: RunOptions,
    scratch: Vec<usize>,
}

impl Sim {
    fn new(state: &SystemState, cfg: &ScalingConfig, opts: RunOptions) -> Self {
        let d = cfg.d;
        let n_particles = state.particles.len();
        let eps = cfg.epsilon;
        let n = opts.cells_per_axis.unwrap_or_else(|| {
            let c_d = ScalingConfig::kernel_constant(d);
            let mfp = 1.0 / (c_d * n_particles.max(1) as f64 * eps.powi(d as i32 - 1));
            let side = eps.max(mfp / 4.0);
            let by_count = ((n_particles.max(1) as f64).powf(1.0 / d as f64)).ceil() as usize;
            ((1.0 / side).floor() as usize).min(by_count.max(3))
        });
        let n = n.clamp(3, ((1.0 / eps).floor() as usize).max(3));
        let side = 1.0 / n as f64;
        // a single minimal image suffices when any image switch is followed by a
        // cell crossing before contact becomes possible
        let scan_images = side >= 0.5 * (0.5 - eps);
        let mut cells = Cells {
            d,
            n,
            side,
            members: vec![Vec::new(); n.pow(d as u32)],
            of: vec![[0; 3]; n_particles],
            scan_images,
        };
        let parts = super::to_lazy(state);
        for (p, q) in parts.iter().enumerate() {
            let mut c = [0usize; 3];
            for k in 0..d {
                c[k] = ((q.x.0[k] * n as f64) as usize).min(n - 1);
            }
            cells.insert(p, c);
        }
        let mut sim = Sim {
            d,
            eps,
            parts,
            counts: vec![0; n_particles],
            cells,
            heap: BinaryHeap::new(),
            events: Vec::new(),
            recent: VecDeque::new(),
            opts,
            scratch: Vec::new(),
        };
        let t0 = state.time;
        for p in 0..n_particles {
            sim.predict_collisions(p, t0, true);
            sim.predict_crossing(p, t0);
        }
        sim
    }

    fn pair_time(&self, p: usize, q: usize, now: f64) -> Option<f64> {
        let a = &self.parts[p];
        let b = &self.parts[q];
        let r0 = (a.position_at(now) - b.position_at(now)).min_image();
        let u = a.v - b.v;
        if !self.cells.scan_images {
            return contact_time(r0, u, self.eps);
        }
        let zs: &[f64] = if self.d == 3 { &[-1.0, 0.0, 1.0] } else { &[0.0] };
        let mut best: Option<f64> = None;
        for ox in [-1.0, 0.0, 1.0] {
            for oy in [-1.0, 0.0, 1.0] {
                for &oz in zs {
                    if let Some(t) = contact_time(r0 + Vector([ox, oy, oz]), u, self.eps) {
                        if best.is_none_or(|b| t < b) {
                            best = Some(t);
                        }
                    }
                }
            }
        }
        best
    }

    /// Schedules collisions of `p` with particles in neighbouring cells. With
    /// `only_higher`, pairs are considered once (initial scan).
    fn predict_collisions(&mut self, p: usize, now: f64, only_higher: bool) {
        let mut cells = std::mem::take(&mut self.scratch);
        self.cells.neighbour_cells(self.cells.of[p], &mut cells);
        cells.sort_unstable();
        cells.dedup();
        for &cell in &cells {
            for k in 0..self.cells.members[cell].len() {
                let q = self.cells.members[cell][k] as usize;
                if q == p || (only_higher && q < p) {
                    continue;
                }
                if let Some(dt) = self.pair_time(p, q, now) {
                    let (i, j) = if p < q { (p, q) } else { (q, p) };
                    self.heap.push(Event {
                        time: now + dt,
                        kind: Kind::Collision,
                        i: i as u32,
                        j: j as u32,
                        count_i: self.counts[i],
                        count_j: self.counts[j],
                    });
                }
            }
        }
        self.scratch = cells;
    }

    fn predict_crossing(&mut self, p: usize, now: f64) {
        let part = &self.parts[p];
        let x = part.position_at(now);
        let c = self.cells.of[p];
        let side = self.cells.side;
        let mut best: Option<(f64, u32)> = None;
        for k in 0..self.d {
            let v = part.v.0[k];
            if v == 0.0 {
                continue;
            }
            // offset inside the cell, robust to wrap at the torus boundary
            let off = min_image1(x.0[k] - c[k] as f64 * side - 0.5 * side) + 0.5 * side;
            let dt = if v > 0.0 { (side - off) / v } else { off / -v };
            let dt = dt.max(0.0);
            let code = (k * 2 + usize::from(v > 0.0)) as u32;
            if best.is_none_or(|b| dt < b.0) {
                best = Some((dt, code));
            }
        }
        if let Some((dt, code)) = best {
            self.heap.push(Event {
                time: now + dt,
                kind: Kind::Crossing,
                i: p as u32,
                j: code,
                count_i: self.counts[p],
                count_j: 0,
            });
        }
    }

    fn run_until(&mut self, t_end: f64) -> Result<()> {
        while let Some(ev) = self.heap.peek().copied() {
            if ev.time > t_end {
                break;
            }
            self.heap.pop();
            let i = ev.i as usize;
            match ev.kind {
                Kind::Collision => {
                    let j = ev.j as usize;
                    if self.counts[i] != ev.count_i || self.counts[j] != ev.count_j {
                        continue;
                    }
                    self.collide(i, j, ev.time)?;
                }
                Kind::Crossing => {
                    if self.counts[i] != ev.count_i {
                        continue;
                    }
                    let axis = (ev.j / 2) as usize;
                    let n = self.cells.n;
                    let mut c = self.cells.of[i];
                    c[axis] = if ev.j % 2 == 1 { (c[axis] + 1) % n } else { (c[axis] + n - 1) % n };
                    self.cells.remove(i);
                    self.cells.insert(i, c);
                    self.predict_collisions(i, ev.time, false);
                    self.predict_crossing(i, ev.time);
                }
            }
        }
        Ok(())
    }

    fn collide(&mut self, i: usize, j: usize, t: f64) -> Result<()> {
        let xi = self.parts[i].position_at(t);
        let xj = self.parts[j].position_at(t);
        let r = (xi - xj).min_image();
        let norm = r.norm();
        if norm == 0.0 {
            return Err(Error::Numerical(format!("coincident centres for pair ({i}, {j}) at t = {t}")));
        }
        let ev = CollisionEvent { time: t, i, j, omega: r * (1.0 / norm) };
        apply_event(&mut self.parts, &ev);
        self.events.push(ev);
        self.counts[i] += 1;
        self.counts[j] += 1;

        self.recent.push_back(t);
        if self.recent.len() > self.opts.zeno_events {
            let first = self.recent.pop_front().unwrap_or(t);
            if t - first < self.opts.zeno_window {
                return Err(Error::Zeno { events: self.opts.zeno_events, window: t - first, time: t });
            }
        }

        for p in [i, j] {
            self.predict_collisions(p, t, false);
            self.predict_crossing(p, t);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hs_dynamics::{state_at, Particle};

    fn cfg2(eps: f64) -> ScalingConfig {
        ScalingConfig::from_epsilon(2, eps, 10.0).unwrap()
    }

    #[test]
    fn head_on_pair_single_event() {
        let s = SystemState::new(vec![
            Particle::new(Vector::new2(0.2, 0.5), Vector::new2(1.0, 0.0)),
            Particle::new(Vector::new2(0.5, 0.5), Vector::new2(-1.0, 0.0)),
        ]);
        let traj = run(&s, 0.3, &cfg2(0.05)).unwrap();
        assert_eq!(traj.events.len(), 1);
        let e = traj.events[0];
        assert!((e.time - 0.125).abs() < 1e-14);
        assert!((e.omega - Vector::new2(-1.0, 0.0)).max_abs() < 1e-12);
        let end = state_at(&traj, 0.3).unwrap();
        assert_eq!(end.particles[0].velocity, Vector::new2(-1.0, 0.0));
        assert_eq!(end.particles[1].velocity, Vector::new2(1.0, 0.0));
    }

    #[test]
    fn crossing_count_matches_cell_geometry() {
        // a lone particle only generates crossings, never collisions
        let s = SystemState::new(vec![Particle::new(Vector::new2(0.01, 0.5), Vector::new2(1.0, 0.37))]);
        let traj = run(&s, 5.0, &cfg2(0.01)).unwrap();
        assert!(traj.events.is_empty());
    }
}
