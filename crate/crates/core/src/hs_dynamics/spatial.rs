use crate::error::{Error, Result};
use crate::vector::Vector;

use super::SystemState;

/// Uniform hash of the unit torus into `n^d` cells of side `>= cutoff`.
struct HashGrid {
    d: usize,
    n: usize,
    cells: Vec<Vec<u32>>,
}

impl HashGrid {
    fn new(d: usize, cutoff: f64, count: usize) -> Option<Self> {
        let by_cutoff = (1.0 / cutoff).floor() as usize;
        let by_count = ((count.max(1) as f64).powf(1.0 / d as f64)).ceil() as usize;
        let n = by_cutoff.min(by_count.max(3));
        if n < 3 {
            return None;
        }
        Some(HashGrid { d, n, cells: vec![Vec::new(); n.pow(d as u32)] })
    }

    fn coords(&self, x: &Vector) -> [usize; 3] {
        let mut c = [0usize; 3];
        for k in 0..self.d {
            c[k] = ((x.0[k] * self.n as f64) as usize).min(self.n - 1);
        }
        c
    }

    fn index(&self, c: [usize; 3]) -> usize {
        let mut idx = 0;
        for k in (0..self.d).rev() {
            idx = idx * self.n + c[k];
        }
        idx
    }

    fn neighbours(&self, c: [usize; 3]) -> impl Iterator<Item = usize> + '_ {
        let n = self.n as isize;
        let span: &[isize] = &[-1, 0, 1];
        let zspan: &[isize] = if self.d == 3 { span } else { &[0] };
        span.iter().flat_map(move |&dx| {
            span.iter().flat_map(move |&dy| {
                zspan.iter().map(move |&dz| {
                    let w = |a: usize, o: isize| ((a as isize + o).rem_euclid(n)) as usize;
                    self.index([w(c[0], dx), w(c[1], dy), if self.d == 3 { w(c[2], dz) } else { 0 }])
                })
            })
        })
    }
}

/// First pair closer than `eps` found while inserting positions in order, or
/// `None` if all pairwise torus distances are at least `eps`.
pub fn first_overlap(positions: &[Vector], d: usize, eps: f64) -> Option<(usize, usize, f64)> {
    let eps2 = eps * eps;
    match HashGrid::new(d, eps, positions.len()) {
        None => {
            for i in 0..positions.len() {
                for j in 0..i {
                    let r2 = (positions[i] - positions[j]).min_image().norm2();
                    if r2 < eps2 {
                        return Some((j, i, r2.sqrt()));
                    }
                }
            }
            None
        }
        Some(mut grid) => {
            for (i, x) in positions.iter().enumerate() {
                let c = grid.coords(x);
                for cell in grid.neighbours(c) {
                    for &j in &grid.cells[cell] {
                        let r2 = (*x - positions[j as usize]).min_image().norm2();
                        if r2 < eps2 {
                            return Some((j as usize, i, r2.sqrt()));
                        }
                    }
                }
                let idx = grid.index(c);
                grid.cells[idx].push(i as u32);
            }
            None
        }
    }
}

/// Smallest pairwise torus distance among pairs closer than `cutoff`, if any.
pub fn min_pair_distance(state: &SystemState, d: usize, cutoff: f64) -> Option<(f64, usize, usize)> {
    let xs: Vec<Vector> = state.particles.iter().map(|p| p.position).collect();
    let mut best: Option<(f64, usize, usize)> = None;
    let mut consider = |i: usize, j: usize| {
        let r = (xs[i] - xs[j]).min_image().norm();
        if r < cutoff && best.is_none_or(|b| r < b.0) {
            best = Some((r, i.min(j), i.max(j)));
        }
    };
    match HashGrid::new(d, cutoff, xs.len()) {
        None => {
            for i in 0..xs.len() {
                for j in 0..i {
                    consider(i, j);
                }
            }
        }
        Some(mut grid) => {
            for (i, x) in xs.iter().enumerate() {
                let c = grid.coords(x);
                let idx = grid.index(c);
                grid.cells[idx].push(i as u32);
            }
            for (i, x) in xs.iter().enumerate() {
                let c = grid.coords(x);
                for cell in grid.neighbours(c) {
                    for &j in &grid.cells[cell] {
                        if (j as usize) < i {
                            consider(i, j as usize);
                        }
                    }
                }
            }
        }
    }
    best
}

fn infer_dim(state: &SystemState) -> usize {
    let flat = state
        .particles
        .iter()
        .all(|p| p.position.0[2] == 0.0 && p.velocity.0[2] == 0.0);
    if flat {
        2
    } else {
        3
    }
}

/// Checks that every pairwise torus distance is at least `eps - tol`.
pub fn check_exclusion(state: &SystemState, eps: f64, tol: f64) -> Result<()> {
    let d = infer_dim(state);
    match min_pair_distance(state, d, eps - tol) {
        Some((distance, i, j)) => Err(Error::Overlap { i, j, distance, epsilon: eps }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hs_dynamics::Particle;
    use rand::{Rng, SeedableRng};

    #[test]
    fn hashed_search_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for d in [2usize, 3] {
            let xs: Vec<Vector> = (0..300)
                .map(|_| {
                    let mut v = Vector::ZERO;
                    for k in 0..d {
                        v.0[k] = rng.random::<f64>();
                    }
                    v
                })
                .collect();
            let eps = 0.05;
            let state = SystemState::new(xs.iter().map(|&x| Particle::new(x, Vector::ZERO)).collect());
            let brute = (0..xs.len())
                .flat_map(|i| (0..i).map(move |j| (i, j)))
                .map(|(i, j)| (xs[i] - xs[j]).min_image().norm())
                .fold(f64::INFINITY, f64::min);
            let fast = min_pair_distance(&state, d, eps).map(|b| b.0).unwrap_or(f64::INFINITY);
            if brute < eps {
                assert_eq!(fast, brute);
                assert!(first_overlap(&xs, d, eps).is_some());
            } else {
                assert!(fast.is_infinite());
                assert!(first_overlap(&xs, d, eps).is_none());
            }
        }
    }
}
