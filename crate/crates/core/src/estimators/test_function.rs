use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vector::Vector;

type Eval = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;

/// Observable `h(x, v)` with the growth bound `|h| <= alpha0 + growth |v|^2`
/// that defines the admissible class (`growth` plays the role of `beta0 / 4`).
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    eval: Eval,
    pub alpha0: f64,
    pub growth: f64,
    /// True when `h` does not depend on position.
    pub velocity_only: bool,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("alpha0", &self.alpha0)
            .field("growth", &self.growth)
            .finish()
    }
}

impl TestFunction {
    pub fn new<F>(name: impl Into<String>, alpha0: f64, growth: f64, velocity_only: bool, f: F) -> Self
    where
        F: Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static,
    {
        TestFunction { name: name.into(), eval: Arc::new(f), alpha0, growth, velocity_only }
    }

    /// Velocity-only observable.
    pub fn of_velocity<F>(name: impl Into<String>, alpha0: f64, growth: f64, f: F) -> Self
    where
        F: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, alpha0, growth, true, move |_x, v| f(v))
    }

    #[inline]
    pub fn eval(&self, x: &Vector, v: &Vector) -> f64 {
        (self.eval)(x, v)
    }

    #[inline]
    pub fn eval_v(&self, v: &Vector) -> f64 {
        (self.eval)(&Vector::ZERO, v)
    }

    pub fn zero() -> Self {
        Self::of_velocity("0", 0.0, 0.0, |_| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::of_velocity(format!("{c}"), c.abs(), 0.0, move |_| c)
    }

    /// `c |v|^2`.
    pub fn energy(c: f64) -> Self {
        Self::of_velocity(format!("{c}|v|^2"), 0.0, c.abs(), move |v| c * v.norm2())
    }

    /// `c v_axis`.
    pub fn momentum(axis: usize, c: f64) -> Self {
        Self::of_velocity(format!("{c}v{axis}"), c.abs(), c.abs(), move |v| c * v.0[axis])
    }

    /// `a + b·v + c |v|^2`, a collision invariant.
    pub fn invariant(a: f64, b: Vector, c: f64) -> Self {
        let bn = b.norm();
        Self::of_velocity(format!("inv({a},{:?},{c})", &b.0), a.abs() + bn, bn + c.abs(), move |v| {
            a + b.dot(v) + c * v.norm2()
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        let f = self.eval.clone();
        TestFunction {
            name: format!("{s}*{}", self.name),
            eval: Arc::new(move |x, v| s * f(x, v)),
            alpha0: self.alpha0 * s.abs(),
            growth: self.growth * s.abs(),
            velocity_only: self.velocity_only,
        }
    }

    pub fn sum(&self, other: &TestFunction) -> Self {
        let f = self.eval.clone();
        let g = other.eval.clone();
        TestFunction {
            name: format!("{}+{}", self.name, other.name),
            eval: Arc::new(move |x, v| f(x, v) + g(x, v)),
            alpha0: self.alpha0 + other.alpha0,
            growth: self.growth + other.growth,
            velocity_only: self.velocity_only && other.velocity_only,
        }
    }

    /// Checks the growth bound on a validation grid of `[0,1)^d x [-v_max, v_max]^d`.
    pub fn check_growth(&self, d: usize, v_max: f64) -> Result<()> {
        let n = 9;
        let node = |k: usize, lo: f64, hi: f64| lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let zs = if d == 3 { n } else { 1 };
        for ix in 0..n {
            let x = Vector::new3(node(ix, 0.0, 0.999), node(n - 1 - ix, 0.0, 0.999), if d == 3 { 0.5 } else { 0.0 });
            for a in 0..n {
                for b in 0..n {
                    for c in 0..zs {
                        let mut v = Vector::new2(node(a, -v_max, v_max), node(b, -v_max, v_max));
                        if d == 3 {
                            v.0[2] = node(c, -v_max, v_max);
                        }
                        let h = self.eval(&x, &v);
                        let bound = self.alpha0 + self.growth * v.norm2();
                        if !(h.abs() <= bound * (1.0 + 1e-12) + 1e-300) {
                            return Err(Error::InvalidParam(format!(
                                "test function {} violates its growth bound at v = {:?}: |h| = {} > {}",
                                self.name,
                                &v.0[..d],
                                h.abs(),
                                bound
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Probabilists' Hermite polynomial `He_n`.
pub fn hermite(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut a, mut b) = (1.0, x);
            for k in 1..n {
                let c = x * b - k as f64 * a;
                a = b;
                b = c;
            }
            b
        }
    }
}

/// Spatial factor of a family member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fourier {
    One,
    Cos(u32),
    Sin(u32),
}

/// Family of tensor products `prod_k He_{n_k}(sqrt(beta) v_k) * F(x_0)` used as
/// the registered observable basis.
#[derive(Debug, Clone)]
pub struct TestFamily {
    pub members: Vec<TestFunction>,
    pub degrees: Vec<Vec<usize>>,
    pub fourier: Vec<Fourier>,
}

impl TestFamily {
    /// All multi-indices of total degree in `1..=max_degree` (plus the constant
    /// when `include_constant`), combined with each spatial mode in `modes`.
    /// `admissible_only` drops members above degree two, which cannot satisfy a
    /// quadratic growth bound.
    pub fn hermite(d: usize, beta: f64, max_degree: usize, modes: &[Fourier], include_constant: bool, admissible_only: bool) -> Self {
        let mut degrees = Vec::new();
        let max_degree = if admissible_only { max_degree.min(2) } else { max_degree };
        let lo = if include_constant { 0 } else { 1 };
        for total in lo..=max_degree {
            for idx in multi_indices(d, total) {
                degrees.push(idx);
            }
        }
        let s = beta.sqrt();
        let mut members = Vec::new();
        let mut out_deg = Vec::new();
        let mut out_four = Vec::new();
        for &mode in modes {
            for deg in &degrees {
                let deg_c = deg.clone();
                let total: usize = deg.iter().sum();
                // crude but valid growth constants for degree <= 2 members
                let (alpha0, growth) = match total {
                    0 => (1.0, 0.0),
                    1 => (1.0, beta),
                    2 => (1.0 + beta.max(1.0), beta * 1.5),
                    _ => (f64::INFINITY, f64::INFINITY),
                };
                let name = format!("He{:?}{}", deg, fourier_name(mode));
                let velocity_only = mode == Fourier::One;
                members.push(TestFunction::new(name, alpha0, growth, velocity_only, move |x, v| {
                    let mut p = 1.0;
                    for (k, &n) in deg_c.iter().enumerate() {
                        p *= hermite(n, s * v.0[k]);
                    }
                    p * fourier_eval(mode, x.0[0])
                }));
                out_deg.push(deg.clone());
                out_four.push(mode);
            }
        }
        TestFamily { members, degrees: out_deg, fourier: out_four }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn fourier_name(f: Fourier) -> String {
    match f {
        Fourier::One => String::new(),
        Fourier::Cos(k) => format!("cos{k}"),
        Fourier::Sin(k) => format!("sin{k}"),
    }
}

fn fourier_eval(f: Fourier, x: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    match f {
        Fourier::One => 1.0,
        Fourier::Cos(k) => (tau * k as f64 * x).cos(),
        Fourier::Sin(k) => (tau * k as f64 * x).sin(),
    }
}

fn multi_indices(d: usize, total: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in multi_indices(d - 1, total - first) {
            let mut idx = vec![first];
            idx.append(&mut rest);
            out.push(idx);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(2, 3.0), 8.0);
        assert_eq!(hermite(3, 2.0), 2.0);
        assert_eq!(hermite(4, 1.0), -2.0);
    }

    #[test]
    fn family_sizes() {
        let f = TestFamily::hermite(2, 1.0, 2, &[Fourier::One], false, true);
        assert_eq!(f.len(), 5);
        let f = TestFamily::hermite(3, 1.0, 4, &[Fourier::One, Fourier::Cos(1)], true, false);
        assert_eq!(f.len(), 2 * (1 + 3 + 6 + 10 + 15));
    }

    #[test]
    fn admissible_family_satisfies_growth() {
        for beta in [0.5, 1.0, 2.0] {
            let f = TestFamily::hermite(2, beta, 2, &[Fourier::One, Fourier::Cos(1), Fourier::Sin(2)], true, true);
            for h in &f.members {
                h.check_growth(2, 6.0).unwrap();
            }
        }
        let bad = TestFunction::of_velocity("v^4", 1.0, 1.0, |v| v.norm2() * v.norm2());
        assert!(bad.check_growth(2, 5.0).is_err());
    }
}
