use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Three-component vector used for both d = 2 and d = 3.
///
/// In two dimensions the third component stays exactly zero through every
/// operation in the crate (all updates are linear combinations of vectors with
/// a zero third component), so the same storage serves both cases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Vector(pub [f64; 3]);

impl Vector {
    pub const ZERO: Vector = Vector([0.0; 3]);

    pub fn new2(x: f64, y: f64) -> Self {
        Vector([x, y, 0.0])
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Vector([x, y, z])
    }

    /// Builds a vector from the first `d` entries of `s`.
    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = [0.0; 3];
        v[..s.len().min(3)].copy_from_slice(&s[..s.len().min(3)]);
        Vector(v)
    }

    #[inline]
    pub fn dot(&self, o: &Vector) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Vector {
        Vector([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn cross(&self, o: &Vector) -> Vector {
        let a = &self.0;
        let b = &o.0;
        Vector([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    /// Componentwise wrap into [0, 1).
    #[inline]
    pub fn wrap_unit(&self) -> Vector {
        Vector([wrap01(self.0[0]), wrap01(self.0[1]), wrap01(self.0[2])])
    }

    /// Componentwise minimal image into [-1/2, 1/2).
    #[inline]
    pub fn min_image(&self) -> Vector {
        Vector([min_image1(self.0[0]), min_image1(self.0[1]), min_image1(self.0[2])])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

#[inline]
pub fn wrap01(x: f64) -> f64 {
    let y = x - x.floor();
    // x.floor() can round so that y == 1.0 for tiny negative x
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

#[inline]
pub fn min_image1(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(self, o: Vector) -> Vector {
        Vector([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(self, o: Vector) -> Vector {
        Vector([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vector {
    type Output = Vector;
    #[inline]
    fn neg(self) -> Vector {
        Vector([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    #[inline]
    fn mul(self, s: f64) -> Vector {
        self.scale(s)
    }
}

impl AddAssign for Vector {
    #[inline]
    fn add_assign(&mut self, o: Vector) {
        for k in 0..3 {
            self.0[k] += o.0[k];
        }
    }
}

impl SubAssign for Vector {
    #[inline]
    fn sub_assign(&mut self, o: Vector) {
        for k in 0..3 {
            self.0[k] -= o.0[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_and_image() {
        assert_eq!(wrap01(1.25), 0.25);
        assert_eq!(wrap01(-0.25), 0.75);
        assert_eq!(wrap01(-1e-20), 0.0);
        assert!((min_image1(0.75) + 0.25).abs() < 1e-15);
        assert!((min_image1(-0.75) - 0.25).abs() < 1e-15);
        assert_eq!(min_image1(0.1), 0.1);
    }
}
