use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::init_gc::DensityProfile;
use crate::stats::KahanSum;
use crate::vector::Vector;

/// Uniform tensor grid of cell centres on `[-v_max, v_max]^d`, `m` cells per
/// axis, axis 0 varying fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGrid {
    pub d: usize,
    pub v_max: f64,
    pub m: usize,
}

impl VelocityGrid {
    pub fn new(d: usize, v_max: f64, m: usize) -> Result<Self> {
        if !(d == 2 || d == 3) {
            return Err(Error::InvalidParam(format!("dimension must be 2 or 3, got {d}")));
        }
        if m < 4 || m % 2 != 0 {
            return Err(Error::InvalidParam(format!("points per axis must be even and >= 4, got {m}")));
        }
        if !(v_max > 0.0 && v_max.is_finite()) {
            return Err(Error::InvalidParam(format!("v_max must be positive, got {v_max}")));
        }
        Ok(VelocityGrid { d, v_max, m })
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        2.0 * self.v_max / self.m as f64
    }

    /// Cell volume (quadrature weight).
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    pub fn coord(&self, k: usize) -> f64 {
        -self.v_max + (k as f64 + 0.5) * self.h()
    }

    pub fn axes(&self, idx: usize) -> [usize; 3] {
        let mut a = [0usize; 3];
        let mut r = idx;
        for k in 0..self.d {
            a[k] = r % self.m;
            r /= self.m;
        }
        a
    }

    pub fn index(&self, a: [usize; 3]) -> usize {
        let mut idx = 0;
        for k in (0..self.d).rev() {
            idx = idx * self.m + a[k];
        }
        idx
    }

    pub fn point(&self, idx: usize) -> Vector {
        let a = self.axes(idx);
        let mut v = Vector::ZERO;
        for k in 0..self.d {
            v.0[k] = self.coord(a[k]);
        }
        v
    }

    /// Index of the cell containing `v`, if inside the box.
    pub fn locate(&self, v: &Vector) -> Option<usize> {
        let mut a = [0usize; 3];
        for k in 0..self.d {
            let c = ((v.0[k] + self.v_max) / self.h()).floor();
            if !(c >= 0.0 && c < self.m as f64) {
                return None;
            }
            a[k] = c as usize;
        }
        Some(self.index(a))
    }

    pub fn points(&self) -> Vec<Vector> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Grid values of a function of velocity.
    pub fn sample<F: Fn(&Vector) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }

    /// `Σ_c a_c b_c ΔV`.
    pub fn pairing(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = KahanSum::new();
        for (x, y) in a.iter().zip(b) {
            s.add(x * y);
        }
        s.value() * self.cell_volume()
    }

    pub fn integrate(&self, a: &[f64]) -> f64 {
        crate::stats::neumaier_sum(a.iter().copied()) * self.cell_volume()
    }
}

/// Density values on a velocity grid at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGridFn {
    pub grid: VelocityGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl VelocityGridFn {
    pub fn new(grid: VelocityGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {}", values.len(), grid.len())));
        }
        Ok(VelocityGridFn { grid, values, time })
    }

    pub fn zeros(grid: VelocityGrid) -> Self {
        VelocityGridFn { grid, values: vec![0.0; grid.len()], time: 0.0 }
    }

    /// Samples the x-averaged velocity density of a profile, renormalized to
    /// unit mass on the grid.
    pub fn from_profile(grid: VelocityGrid, f0: &DensityProfile) -> Result<Self> {
        if f0.d != grid.d {
            return Err(Error::GridMismatch(format!("profile d = {} vs grid d = {}", f0.d, grid.d)));
        }
        let mut values = grid.sample(|v| f0.velocity_density(v));
        let mass = grid.integrate(&values);
        if !(mass > 0.0) {
            return Err(Error::InvalidParam("profile has no mass on the grid".into()));
        }
        for x in &mut values {
            *x /= mass;
        }
        Ok(VelocityGridFn { grid, values, time: 0.0 })
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// `∫ f φ`.
    pub fn moment<F: Fn(&Vector) -> f64>(&self, phi: F) -> f64 {
        let mut s = KahanSum::new();
        for (i, f) in self.values.iter().enumerate() {
            s.add(f * phi(&self.grid.point(i)));
        }
        s.value() * self.grid.cell_volume()
    }

    pub fn momentum(&self) -> Vector {
        let mut p = Vector::ZERO;
        for k in 0..self.grid.d {
            p.0[k] = self.moment(|v| v.0[k]);
        }
        p
    }

    pub fn energy(&self) -> f64 {
        self.moment(|v| v.norm2())
    }

    /// `∫ f log f` with `0 log 0 = 0` (non-positive values contribute 0).
    pub fn h_functional(&self) -> f64 {
        let mut s = KahanSum::new();
        for &f in &self.values {
            if f > 0.0 {
                s.add(f * f.ln());
            }
        }
        s.value() * self.grid.cell_volume()
    }

    pub fn check_same_grid(&self, other: &VelocityGridFn) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// Flat binary snapshot: `d u32, m u64, v_max f64, time f64`, then values
    /// (little-endian f64).
    pub fn write_snapshot<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.grid.d as u32).to_le_bytes())?;
        w.write_all(&(self.grid.m as u64).to_le_bytes())?;
        w.write_all(&self.grid.v_max.to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        for x in &self.values {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let m = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let v_max = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let time = f64::from_le_bytes(b8);
        let grid = VelocityGrid::new(d, v_max, m)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Ok(VelocityGridFn { grid, values, time })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxwellian_moments_on_grid() {
        let g = VelocityGrid::new(2, 6.0, 32).unwrap();
        let f = VelocityGridFn::from_profile(g, &DensityProfile::maxwellian(2, 1.0).unwrap()).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-14);
        assert!(f.momentum().norm() < 1e-14);
        assert!((f.energy() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn locate_inverts_point() {
        for d in [2, 3] {
            let g = VelocityGrid::new(d, 3.0, 6).unwrap();
            for i in 0..g.len() {
                assert_eq!(g.locate(&g.point(i)), Some(i));
            }
            let mut out = Vector::ZERO;
            out.0[0] = 3.0;
            assert_eq!(g.locate(&out), None);
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let g = VelocityGrid::new(2, 4.0, 8).unwrap();
        let f = VelocityGridFn::new(g, (0..64).map(|k| k as f64).collect(), 0.5).unwrap();
        let mut buf = Vec::new();
        f.write_snapshot(&mut buf).unwrap();
        assert_eq!(VelocityGridFn::read_snapshot(&mut &buf[..]).unwrap(), f);
    }

    #[test]
    fn odd_grid_rejected() {
        assert!(VelocityGrid::new(2, 4.0, 7).is_err());
    }
}
