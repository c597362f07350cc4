//! Initial densities and exact sampling of the grand canonical hard-sphere
//! measure.
//!
//! A configuration is drawn by sampling `N ~ Poisson(mu)` and `N` independent
//! phase points from `f0`, then accepting the whole configuration only if no
//! two spheres overlap. Rejecting whole configurations (rather than single
//! insertions) keeps the law of `N` exact, including the hard-core correction.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hs_dynamics::{first_overlap, Particle, ScalingConfig, SystemState};
use crate::vector::Vector;

/// Velocity table on the cell centres of `[-v_max, v_max]^d` with `m` cells per
/// axis, axis 0 varying fastest. Values are densities per unit velocity volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityTable {
    pub m: usize,
    pub v_max: f64,
    pub values: Vec<f64>,
}

impl VelocityTable {
    /// Reads a table from a text file: first line `d m v_max`, then `m^d`
    /// whitespace-separated values, axis 0 fastest.
    pub fn read(path: &Path, d: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut it = text.split_whitespace();
        let mut next = |what: &str| {
            it.next()
                .ok_or_else(|| Error::InvalidParam(format!("velocity table: missing {what}")))
                .map(str::to_owned)
        };
        let parse = |s: String, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidParam(format!("velocity table: bad {what} '{s}'")))
        };
        let td = parse(next("dimension")?, "dimension")? as usize;
        if td != d {
            return Err(Error::InvalidParam(format!("velocity table has d = {td}, expected {d}")));
        }
        let m = parse(next("m")?, "m")? as usize;
        let v_max = parse(next("v_max")?, "v_max")?;
        let mut values = Vec::with_capacity(m.pow(d as u32));
        for k in 0..m.pow(d as u32) {
            values.push(parse(next("value")?, &format!("value #{k}"))?);
        }
        Ok(VelocityTable { m, v_max, values })
    }

    fn cell_width(&self) -> f64 {
        2.0 * self.v_max / self.m as f64
    }

    fn lookup(&self, d: usize, v: &Vector) -> f64 {
        let h = self.cell_width();
        let mut idx = 0;
        for k in (0..d).rev() {
            let c = ((v.0[k] + self.v_max) / h).floor();
            if c < 0.0 || c >= self.m as f64 {
                return 0.0;
            }
            idx = idx * self.m + c as usize;
        }
        self.values[idx]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileKind {
    /// `M_beta(v)`, uniform in x.
    Maxwellian { beta: f64 },
    /// Centred Gaussian with a separate inverse temperature per axis, uniform in x.
    Anisotropic { betas: Vec<f64> },
    /// Equal mixture of `M_beta` centred at `+shift e_0` and `-shift e_0`, uniform in x.
    Bimodal { beta: f64, shift: f64 },
    /// `(1 + amplitude cos(2 pi mode x_0)) M_beta(v)`.
    Modulated { beta: f64, amplitude: f64, mode: i32 },
    /// Tabulated velocity density, uniform in x.
    Tabulated { table: VelocityTable },
}

/// Initial one-particle density `f0(x, v)` with its Gaussian envelope
/// `|f0| + |grad_x f0| <= c0 exp(-beta0 |v|^2 / 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub d: usize,
    pub kind: ProfileKind,
    pub c0: f64,
    pub beta0: f64,
}

fn gauss_norm(beta: f64) -> f64 {
    (beta / (2.0 * PI)).sqrt()
}

impl DensityProfile {
    /// Builds and validates a profile, deriving the envelope constants.
    pub fn new(d: usize, kind: ProfileKind) -> Result<Self> {
        if !(d == 2 || d == 3) {
            return Err(Error::InvalidParam(format!("dimension must be 2 or 3, got {d}")));
        }
        check_kind(d, &kind)?;
        let (c0, beta0) = default_envelope(d, &kind);
        let p = DensityProfile { d, kind, c0, beta0 };
        p.validate()?;
        Ok(p)
    }

    pub fn maxwellian(d: usize, beta: f64) -> Result<Self> {
        Self::new(d, ProfileKind::Maxwellian { beta })
    }

    /// Replaces the envelope constants and re-validates.
    pub fn with_envelope(mut self, c0: f64, beta0: f64) -> Result<Self> {
        self.c0 = c0;
        self.beta0 = beta0;
        self.validate()?;
        Ok(self)
    }

    /// True when `f0` does not depend on position.
    pub fn is_homogeneous(&self) -> bool {
        match &self.kind {
            ProfileKind::Modulated { amplitude, mode, .. } => *amplitude == 0.0 || *mode == 0,
            _ => true,
        }
    }

    /// Velocity density averaged over the torus.
    pub fn velocity_density(&self, v: &Vector) -> f64 {
        let d = self.d;
        match &self.kind {
            ProfileKind::Maxwellian { beta } | ProfileKind::Modulated { beta, .. } => {
                gauss_norm(*beta).powi(d as i32) * (-0.5 * beta * v.norm2()).exp()
            }
            ProfileKind::Anisotropic { betas } => (0..d)
                .map(|k| gauss_norm(betas[k]) * (-0.5 * betas[k] * v.0[k] * v.0[k]).exp())
                .product(),
            ProfileKind::Bimodal { beta, shift } => {
                let c = gauss_norm(*beta).powi(d as i32);
                let mut a = *v;
                a.0[0] -= shift;
                let mut b = *v;
                b.0[0] += shift;
                0.5 * c * ((-0.5 * beta * a.norm2()).exp() + (-0.5 * beta * b.norm2()).exp())
            }
            ProfileKind::Tabulated { table } => table.lookup(d, v),
        }
    }

    /// `f0(x, v)`.
    pub fn density(&self, x: &Vector, v: &Vector) -> f64 {
        self.spatial_factor(x) * self.velocity_density(v)
    }

    fn spatial_factor(&self, x: &Vector) -> f64 {
        match &self.kind {
            ProfileKind::Modulated { amplitude, mode, .. } => {
                1.0 + amplitude * (2.0 * PI * *mode as f64 * x.0[0]).cos()
            }
            _ => 1.0,
        }
    }

    fn spatial_gradient_norm(&self, x: &Vector) -> f64 {
        match &self.kind {
            ProfileKind::Modulated { amplitude, mode, .. } => {
                let k = 2.0 * PI * *mode as f64;
                (amplitude * k * (k * x.0[0]).sin()).abs()
            }
            _ => 0.0,
        }
    }

    /// Checks normalization and the Gaussian envelope on a sample grid.
    pub fn validate(&self) -> Result<()> {
        check_kind(self.d, &self.kind)?;
        if !(self.c0 > 0.0 && self.beta0 > 0.0 && self.c0.is_finite() && self.beta0.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "envelope constants must be positive, got c0 = {}, beta0 = {}",
                self.c0, self.beta0
            )));
        }
        let mass = self.velocity_mass();
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParam(format!("f0 is not normalized: mass = {mass}")));
        }
        for (x, v) in self.envelope_sample_points() {
            let lhs = self.density(&x, &v).abs() + self.spatial_gradient_norm(&x) * self.velocity_density(&v);
            let rhs = self.c0 * (-0.5 * self.beta0 * v.norm2()).exp();
            if lhs > rhs * (1.0 + 1e-12) {
                return Err(Error::InvalidParam(format!(
                    "envelope violated at x = {:?}, v = {:?}: {lhs} > {rhs}",
                    &x.0[..self.d],
                    &v.0[..self.d]
                )));
            }
        }
        Ok(())
    }

    /// Velocity mass of the x-averaged density (exact for analytic kinds,
    /// midpoint sum for tables).
    pub fn velocity_mass(&self) -> f64 {
        match &self.kind {
            ProfileKind::Tabulated { table } => {
                table.values.iter().sum::<f64>() * table.cell_width().powi(self.d as i32)
            }
            // analytic Gaussians and mixtures are normalized by construction; the
            // modulation integrates to one over the torus
            _ => 1.0,
        }
    }

    fn envelope_sample_points(&self) -> Vec<(Vector, Vector)> {
        let vmax = match &self.kind {
            ProfileKind::Tabulated { table } => table.v_max,
            _ => 8.0 / self.min_beta().sqrt(),
        };
        let nv = 25;
        let nx = 16;
        let mut pts = Vec::new();
        let axis = |k: usize, n: usize, lo: f64, hi: f64| lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
        for ix in 0..nx {
            let x = Vector::new3(axis(ix, nx, 0.0, 1.0), 0.5, if self.d == 3 { 0.5 } else { 0.0 });
            for a in 0..nv {
                for b in 0..nv {
                    let zs = if self.d == 3 { nv } else { 1 };
                    for c in 0..zs {
                        let mut v = Vector::new2(axis(a, nv, -vmax, vmax), axis(b, nv, -vmax, vmax));
                        if self.d == 3 {
                            v.0[2] = axis(c, nv, -vmax, vmax);
                        }
                        pts.push((x, v));
                    }
                }
            }
        }
        pts
    }

    fn min_beta(&self) -> f64 {
        match &self.kind {
            ProfileKind::Maxwellian { beta } | ProfileKind::Modulated { beta, .. } | ProfileKind::Bimodal { beta, .. } => *beta,
            ProfileKind::Anisotropic { betas } => betas[..self.d].iter().copied().fold(f64::INFINITY, f64::min),
            ProfileKind::Tabulated { table } => 1.0 / (table.v_max * table.v_max),
        }
    }

    /// Draws a velocity from `f0(x, .) / int f0(x, v) dv`.
    pub fn sample_velocity<R: Rng + ?Sized>(&self, _x: &Vector, rng: &mut R) -> Vector {
        let d = self.d;
        let mut v = Vector::ZERO;
        match &self.kind {
            ProfileKind::Maxwellian { beta } | ProfileKind::Modulated { beta, .. } => {
                let n = Normal::new(0.0, 1.0 / beta.sqrt()).expect("validated beta");
                for k in 0..d {
                    v.0[k] = n.sample(rng);
                }
            }
            ProfileKind::Anisotropic { betas } => {
                for k in 0..d {
                    v.0[k] = Normal::new(0.0, 1.0 / betas[k].sqrt()).expect("validated beta").sample(rng);
                }
            }
            ProfileKind::Bimodal { beta, shift } => {
                let n = Normal::new(0.0, 1.0 / beta.sqrt()).expect("validated beta");
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                for k in 0..d {
                    v.0[k] = n.sample(rng);
                }
                v.0[0] += sign * shift;
            }
            ProfileKind::Tabulated { table } => {
                // inverse transform on the cumulative cell masses, uniform within the cell
                let total: f64 = table.values.iter().sum();
                let target = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut cell = table.values.len() - 1;
                for (k, w) in table.values.iter().enumerate() {
                    acc += w;
                    if acc > target {
                        cell = k;
                        break;
                    }
                }
                let h = table.cell_width();
                let mut rem = cell;
                for k in 0..d {
                    let c = rem % table.m;
                    rem /= table.m;
                    v.0[k] = -table.v_max + (c as f64 + rng.random::<f64>()) * h;
                }
            }
        }
        v
    }

    /// Draws a position from the spatial marginal of `f0`.
    pub fn sample_position<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let mut x = Vector::ZERO;
        for k in 0..self.d {
            x.0[k] = rng.random::<f64>();
        }
        if let ProfileKind::Modulated { amplitude, .. } = &self.kind {
            if *amplitude == 0.0 {
                return x;
            }
            let bound = 1.0 + amplitude.abs();
            while rng.random::<f64>() * bound > self.spatial_factor(&x) {
                x.0[0] = rng.random::<f64>();
            }
        }
        x
    }
}

fn check_kind(d: usize, kind: &ProfileKind) -> Result<()> {
    let good_beta = |b: f64| b > 0.0 && b.is_finite();
    match kind {
        ProfileKind::Maxwellian { beta } | ProfileKind::Bimodal { beta, .. } if !good_beta(*beta) => Err(
            Error::InvalidParam(format!("beta must be positive and finite, got {beta}")),
        ),
        ProfileKind::Modulated { beta, amplitude, .. } => {
            if !good_beta(*beta) {
                Err(Error::InvalidParam(format!("beta must be positive and finite, got {beta}")))
            } else if !(amplitude.abs() < 1.0) {
                Err(Error::InvalidParam(format!("modulation amplitude must satisfy |a| < 1, got {amplitude}")))
            } else {
                Ok(())
            }
        }
        ProfileKind::Anisotropic { betas } => {
            if betas.len() != d || !betas.iter().all(|&b| good_beta(b)) {
                Err(Error::InvalidParam(format!("need {d} positive finite betas, got {betas:?}")))
            } else {
                Ok(())
            }
        }
        ProfileKind::Tabulated { table } => {
            if table.m == 0 || table.values.len() != table.m.pow(d as u32) || !(table.v_max > 0.0) {
                Err(Error::InvalidParam("velocity table has inconsistent shape".into()))
            } else if table.values.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                Err(Error::InvalidParam("velocity table has negative or non-finite entries".into()))
            } else if table.values.iter().sum::<f64>() <= 0.0 {
                Err(Error::InvalidParam("velocity table has zero mass".into()))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

fn default_envelope(d: usize, kind: &ProfileKind) -> (f64, f64) {
    match kind {
        ProfileKind::Maxwellian { beta } => (gauss_norm(*beta).powi(d as i32), *beta),
        ProfileKind::Modulated { beta, amplitude, mode } => {
            let a = amplitude.abs();
            (gauss_norm(*beta).powi(d as i32) * (1.0 + a + 2.0 * PI * mode.unsigned_abs() as f64 * a), *beta)
        }
        ProfileKind::Anisotropic { betas } => {
            let bmin = betas.iter().copied().fold(f64::INFINITY, f64::min);
            (betas.iter().map(|&b| gauss_norm(b)).product(), bmin)
        }
        ProfileKind::Bimodal { beta, shift } => {
            // e^{-b|v-s|^2/2} <= e^{-b|v|^2/4} e^{b s^2/2}
            (gauss_norm(*beta).powi(d as i32) * (0.5 * beta * shift * shift).exp(), 0.5 * beta)
        }
        ProfileKind::Tabulated { table } => {
            // compact support: any Gaussian envelope dominating the table on its box
            let beta0 = 1.0 / (table.v_max * table.v_max);
            let peak = table.values.iter().copied().fold(0.0, f64::max);
            (peak * (0.5 * beta0 * d as f64 * table.v_max * table.v_max).exp() * (1.0 + 1e-9), beta0)
        }
    }
}

/// Sampler switches.
#[derive(Debug, Clone, Copy)]
pub struct SamplerOptions {
    /// Enforce hard-core exclusion (off gives the ideal Poisson gas).
    pub exclusion: bool,
    /// Give up after this many rejected configurations.
    pub max_attempts: u64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions { exclusion: true, max_attempts: 10_000 }
    }
}

/// A sampled configuration with the number of draws it took.
#[derive(Debug, Clone)]
pub struct Sample {
    pub state: SystemState,
    pub attempts: u64,
}

pub fn sample_configuration<R: Rng + ?Sized>(cfg: &ScalingConfig, f0: &DensityProfile, rng: &mut R) -> Result<SystemState> {
    Ok(sample_configuration_with(cfg, f0, rng, &SamplerOptions::default())?.state)
}

pub fn sample_configuration_with<R: Rng + ?Sized>(
    cfg: &ScalingConfig,
    f0: &DensityProfile,
    rng: &mut R,
    opts: &SamplerOptions,
) -> Result<Sample> {
    cfg.validate()?;
    if f0.d != cfg.d {
        return Err(Error::InvalidParam(format!("profile dimension {} differs from config {}", f0.d, cfg.d)));
    }
    let poisson = Poisson::new(cfg.mu).map_err(|e| Error::InvalidParam(format!("poisson({}): {e}", cfg.mu)))?;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let n = poisson.sample(rng) as usize;
        let mut particles = Vec::with_capacity(n);
        for _ in 0..n {
            let x = f0.sample_position(rng);
            let v = f0.sample_velocity(&x, rng);
            particles.push(Particle { position: x, velocity: v });
        }
        if opts.exclusion {
            let xs: Vec<Vector> = particles.iter().map(|p| p.position).collect();
            if first_overlap(&xs, cfg.d, cfg.epsilon).is_some() {
                if attempts >= opts.max_attempts {
                    return Err(Error::AcceptanceTooLow { attempts });
                }
                continue;
            }
        }
        return Ok(Sample { state: SystemState::new(particles), attempts });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;

    #[test]
    fn degenerate_profiles_rejected() {
        assert!(DensityProfile::maxwellian(2, 0.0).is_err());
        assert!(DensityProfile::maxwellian(2, f64::INFINITY).is_err());
        assert!(DensityProfile::new(2, ProfileKind::Anisotropic { betas: vec![1.0] }).is_err());
        let zero = VelocityTable { m: 2, v_max: 1.0, values: vec![0.0; 4] };
        assert!(DensityProfile::new(2, ProfileKind::Tabulated { table: zero }).is_err());
    }

    #[test]
    fn envelope_violation_detected() {
        let p = DensityProfile::maxwellian(2, 1.0).unwrap();
        assert!(p.clone().with_envelope(0.01, 1.0).is_err());
        assert!(p.with_envelope(1.0, 0.5).is_ok());
    }

    #[test]
    fn unnormalized_table_rejected() {
        let t = VelocityTable { m: 2, v_max: 1.0, values: vec![1.0; 4] };
        assert!(DensityProfile::new(2, ProfileKind::Tabulated { table: t }).is_err());
        let t = VelocityTable { m: 2, v_max: 1.0, values: vec![0.25; 4] };
        assert!(DensityProfile::new(2, ProfileKind::Tabulated { table: t }).is_ok());
    }

    #[test]
    fn zero_amplitude_modulation_is_maxwellian() {
        let m = DensityProfile::maxwellian(2, 1.3).unwrap();
        let a = DensityProfile::new(2, ProfileKind::Modulated { beta: 1.3, amplitude: 0.0, mode: 2 }).unwrap();
        let mut r1 = replica_rng(5, 0);
        let mut r2 = replica_rng(5, 0);
        for _ in 0..100 {
            let x1 = m.sample_position(&mut r1);
            let x2 = a.sample_position(&mut r2);
            assert_eq!(x1, x2);
            assert_eq!(m.sample_velocity(&x1, &mut r1), a.sample_velocity(&x2, &mut r2));
        }
        let v = Vector::new2(0.3, -1.1);
        let x = Vector::new2(0.7, 0.2);
        assert_eq!(m.density(&x, &v), a.density(&x, &v));
    }

    #[test]
    fn sampled_configurations_respect_exclusion() {
        let cfg = ScalingConfig::from_mu(2, 200.0, 1.0).unwrap();
        let f0 = DensityProfile::maxwellian(2, 1.0).unwrap();
        let mut rng = replica_rng(1, 0);
        for _ in 0..20 {
            let s = sample_configuration(&cfg, &f0, &mut rng).unwrap();
            crate::hs_dynamics::check_exclusion(&s, cfg.epsilon, 0.0).unwrap();
        }
    }

    #[test]
    fn dense_3d_rejection_aborts() {
        let cfg = ScalingConfig::from_mu(3, 500.0, 1.0).unwrap();
        let f0 = DensityProfile::maxwellian(3, 1.0).unwrap();
        let opts = SamplerOptions { exclusion: true, max_attempts: 50 };
        let r = sample_configuration_with(&cfg, &f0, &mut replica_rng(0, 0), &opts);
        assert!(matches!(r, Err(Error::AcceptanceTooLow { .. })));
    }
}
