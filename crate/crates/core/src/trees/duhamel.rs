use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, UnitCircle, UnitSphere};

use crate::error::{Error, Result};
use crate::hs_dynamics::Particle;
use crate::init_gc::DensityProfile;
use crate::stats::summarize;
use crate::vector::Vector;

use super::pseudo::{build_pseudo, tree_weight, TreeParams};
use super::CollisionTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuhamelOptions {
    /// Highest number of branchings kept in the series.
    pub m_max: usize,
    /// Monte Carlo samples per order.
    pub samples: usize,
    /// Particle diameter of the pseudo-trajectories; zero gives the
    /// point-particle series.
    pub epsilon: f64,
    /// Inverse temperature of the Gaussian velocity proposal; defaults to half
    /// the envelope decay rate of `f0`.
    pub proposal_beta: Option<f64>,
}

impl Default for DuhamelOptions {
    fn default() -> Self {
        DuhamelOptions { m_max: 4, samples: 10_000, epsilon: 0.0, proposal_beta: None }
    }
}

/// Contribution of the trees with `m` branchings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermEstimate {
    pub m: usize,
    pub mean: f64,
    pub se: f64,
    /// Mean absolute sample weight, an estimate of the absolute term size.
    pub magnitude: f64,
    pub magnitude_se: f64,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuhamelEstimate {
    pub t: f64,
    pub estimate: f64,
    pub se: f64,
    pub terms: Vec<TermEstimate>,
    /// Smallest `c` with `magnitude_m <= magnitude_0 (c t)^m` for every
    /// sampled order, so that a single tree contributes at most
    /// `magnitude_0 (c t)^m / m!`.
    pub growth: f64,
    /// `magnitude_0` times the sum over `m > m_max` of `(growth t)^m`, a bound
    /// on the absolute size of the omitted orders if the fitted growth holds;
    /// infinite when `growth t >= 1`.
    pub tail_bound: f64,
    pub samples: usize,
}

struct Proposal {
    d: usize,
    beta: f64,
    normal: Normal<f64>,
}

impl Proposal {
    fn new(d: usize, beta: f64) -> Result<Self> {
        let normal = Normal::new(0.0, 1.0 / beta.sqrt())
            .map_err(|_| Error::InvalidParam(format!("proposal inverse temperature must be positive, got {beta}")))?;
        Ok(Proposal { d, beta, normal })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let mut v = Vector::ZERO;
        for k in 0..self.d {
            v.0[k] = self.normal.sample(rng);
        }
        v
    }

    fn density(&self, v: &Vector) -> f64 {
        (self.beta / (2.0 * PI)).powf(self.d as f64 / 2.0) * (-0.5 * self.beta * v.norm2()).exp()
    }
}

fn unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    if d == 2 {
        let [x, y]: [f64; 2] = UnitCircle.sample(rng);
        Vector::new2(x, y)
    } else {
        let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
        Vector::new3(x, y, z)
    }
}

fn sphere_area(d: usize) -> f64 {
    if d == 2 {
        2.0 * PI
    } else {
        4.0 * PI
    }
}

/// One importance-sampled weight of the order-`m` term for a root at `root`.
/// Trees are drawn uniformly from the `m!` single-root trees and times
/// uniformly on the ordered simplex, so the sum over trees and the time
/// integral together contribute `t^m`. `None` for an overlapping insertion.
fn sample_weight<R: Rng + ?Sized>(
    f0: &DensityProfile,
    t: f64,
    root: Particle,
    m: usize,
    epsilon: f64,
    proposal: &Proposal,
    rng: &mut R,
) -> Result<Option<f64>> {
    let d = f0.d;
    let tree = CollisionTree::sample(1, m, rng);
    let mut times: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * t).collect();
    times.sort_by(|a, b| b.total_cmp(a));
    if times.windows(2).any(|w| w[0] == w[1]) || times.iter().any(|&s| s == 0.0) {
        return Ok(None);
    }
    let omegas: Vec<Vector> = (0..m).map(|_| unit_vector(d, rng)).collect();
    let velocities: Vec<Vector> = (0..m).map(|_| proposal.sample(rng)).collect();
    let mut importance = (t * sphere_area(d)).powi(m as i32);
    for v in &velocities {
        importance /= proposal.density(v);
    }
    let params = TreeParams::new(times, omegas, velocities)?;
    let psi = build_pseudo(&[root], t, &tree, &params, epsilon, d)?;
    let Some(initial) = psi.initial() else { return Ok(None) };
    let data: f64 = initial.iter().map(|p| f0.density(&p.position, &p.velocity)).product();
    Ok(Some(importance * tree_weight(&psi) * data))
}

fn check_options(t: f64, opts: &DuhamelOptions) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParam(format!("time must be nonnegative, got {t}")));
    }
    if opts.m_max > 6 {
        return Err(Error::InvalidParam(format!("at most 6 branchings are supported, got {}", opts.m_max)));
    }
    if opts.samples < 2 {
        return Err(Error::InvalidParam("need at least two samples per order".into()));
    }
    if !(opts.epsilon >= 0.0 && opts.epsilon < 0.25) {
        return Err(Error::InvalidParam(format!("epsilon must lie in [0, 0.25), got {}", opts.epsilon)));
    }
    Ok(())
}

fn assemble(t: f64, samples: usize, terms: Vec<TermEstimate>) -> DuhamelEstimate {
    let estimate = terms.iter().map(|s| s.mean).sum();
    let se = terms.iter().map(|s| s.se * s.se).sum::<f64>().sqrt();
    let m_max = terms.len() - 1;
    let base = terms[0].magnitude;
    let growth = if t > 0.0 && base > 0.0 {
        terms
            .iter()
            .filter(|s| s.m > 0 && s.magnitude > 0.0)
            .map(|s| (s.magnitude / base).powf(1.0 / s.m as f64) / t)
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let q = growth * t;
    let tail_bound = if q < 1.0 { base * q.powi(m_max as i32 + 1) / (1.0 - q) } else { f64::INFINITY };
    DuhamelEstimate { t, estimate, se, terms, growth, tail_bound, samples }
}

/// Runs `draw` `samples` times for each order `1..=m_max` and summarizes.
fn sample_terms<R, F>(t: f64, opts: &DuhamelOptions, rng: &mut R, mut draw: F) -> Result<Vec<TermEstimate>>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &mut R) -> Result<Option<f64>>,
{
    let mut terms = Vec::with_capacity(opts.m_max);
    for m in 1..=opts.m_max {
        if t == 0.0 {
            terms.push(TermEstimate { m, mean: 0.0, se: 0.0, magnitude: 0.0, magnitude_se: 0.0, rejected: 0 });
            continue;
        }
        let mut w = Vec::with_capacity(opts.samples);
        let mut rejected = 0;
        for _ in 0..opts.samples {
            match draw(m, rng)? {
                Some(x) => w.push(x),
                None => {
                    rejected += 1;
                    w.push(0.0);
                }
            }
        }
        if rejected == opts.samples {
            return Err(Error::AcceptanceTooLow { attempts: opts.samples as u64 });
        }
        let s = summarize(&w);
        let a = summarize(&w.iter().map(|x| x.abs()).collect::<Vec<_>>());
        terms.push(TermEstimate { m, mean: s.mean, se: s.se, magnitude: a.mean, magnitude_se: a.se, rejected });
    }
    Ok(terms)
}

/// Truncated series for the one-particle density `f_t(x, v)`.
pub fn mc_f1_estimate<R: Rng + ?Sized>(
    f0: &DensityProfile,
    t: f64,
    x: Vector,
    v: Vector,
    opts: &DuhamelOptions,
    rng: &mut R,
) -> Result<DuhamelEstimate> {
    check_options(t, opts)?;
    let proposal = Proposal::new(f0.d, opts.proposal_beta.unwrap_or(0.5 * f0.beta0))?;
    let root = Particle::new(x, v);
    let free = (x - v * t).wrap_unit();
    let zeroth = f0.density(&free, &v);
    let mut terms = vec![TermEstimate { m: 0, mean: zeroth, se: 0.0, magnitude: zeroth.abs(), magnitude_se: 0.0, rejected: 0 }];
    terms.extend(sample_terms(t, opts, rng, |m, rng| sample_weight(f0, t, root, m, opts.epsilon, &proposal, rng))?);
    Ok(assemble(t, opts.samples, terms))
}

/// Truncated series for `int observable(v) f_t(x, v) dv`, with the root
/// velocity drawn from the same Gaussian proposal.
pub fn mc_moment_estimate<R, F>(
    f0: &DensityProfile,
    t: f64,
    x: Vector,
    observable: F,
    opts: &DuhamelOptions,
    rng: &mut R,
) -> Result<DuhamelEstimate>
where
    R: Rng + ?Sized,
    F: Fn(&Vector) -> f64,
{
    check_options(t, opts)?;
    let proposal = Proposal::new(f0.d, opts.proposal_beta.unwrap_or(0.5 * f0.beta0))?;
    let root_draw = |rng: &mut R| {
        let v = proposal.sample(rng);
        (Particle::new(x, v), observable(&v) / proposal.density(&v))
    };
    let order = |m: usize, rng: &mut R| -> Result<Option<f64>> {
        let (root, scale) = root_draw(rng);
        if m == 0 {
            let free = (x - root.velocity * t).wrap_unit();
            return Ok(Some(scale * f0.density(&free, &root.velocity)));
        }
        Ok(sample_weight(f0, t, root, m, opts.epsilon, &proposal, rng)?.map(|w| w * scale))
    };
    let mut zeroth = Vec::with_capacity(opts.samples);
    for _ in 0..opts.samples {
        zeroth.push(order(0, rng)?.unwrap_or(0.0));
    }
    let s = summarize(&zeroth);
    let a = summarize(&zeroth.iter().map(|w| w.abs()).collect::<Vec<_>>());
    let mut terms = vec![TermEstimate { m: 0, mean: s.mean, se: s.se, magnitude: a.mean, magnitude_se: a.se, rejected: 0 }];
    terms.extend(sample_terms(t, opts, rng, order)?);
    Ok(assemble(t, opts.samples, terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;

    #[test]
    fn zero_time_returns_initial_density() {
        let f0 = DensityProfile::maxwellian(2, 1.0).unwrap();
        let v = Vector::new2(0.3, -0.7);
        let mut rng = replica_rng(1, 0);
        let est = mc_f1_estimate(&f0, 0.0, Vector::new2(0.2, 0.4), v, &DuhamelOptions::default(), &mut rng).unwrap();
        assert_eq!(est.estimate, f0.velocity_density(&v));
        assert_eq!(est.se, 0.0);
    }

    #[test]
    fn proposal_density_is_normalized() {
        let p = Proposal::new(2, 0.5).unwrap();
        let h = 0.05;
        let mut total = 0.0;
        for i in -400..400 {
            for j in -400..400 {
                total += p.density(&Vector::new2(i as f64 * h, j as f64 * h)) * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equilibrium_is_time_invariant() {
        // the Maxwellian is a fixed point, so every positive-order term sums to zero
        let f0 = DensityProfile::maxwellian(2, 1.0).unwrap();
        let opts = DuhamelOptions { m_max: 3, samples: 20_000, ..Default::default() };
        let mut rng = replica_rng(2, 0);
        for v in [Vector::new2(0.0, 0.0), Vector::new2(1.2, -0.4)] {
            let est = mc_f1_estimate(&f0, 0.1, Vector::new2(0.5, 0.5), v, &opts, &mut rng).unwrap();
            let exact = f0.velocity_density(&v);
            assert!((est.estimate - exact).abs() < 3.0 * est.se, "{est:?} vs {exact}");
            assert!(est.growth * 0.1 < 1.0);
        }
    }

    #[test]
    fn invariant_moments_are_conserved() {
        // every positive order integrates a collision operator of the root, so
        // mass and energy terms vanish order by order
        let f0 = DensityProfile::new(2, crate::init_gc::ProfileKind::Bimodal { beta: 1.5, shift: 1.0 }).unwrap();
        let opts = DuhamelOptions { m_max: 2, samples: 20_000, ..Default::default() };
        let mut rng = replica_rng(3, 0);
        let x = Vector::new2(0.5, 0.5);
        let mass = mc_moment_estimate(&f0, 0.05, x, |_| 1.0, &opts, &mut rng).unwrap();
        assert!((mass.estimate - 1.0).abs() < 3.0 * mass.se, "{mass:?}");
        let energy0 = mc_moment_estimate(&f0, 0.0, x, |v| v.norm2(), &opts, &mut rng).unwrap();
        let energy = mc_moment_estimate(&f0, 0.05, x, |v| v.norm2(), &opts, &mut rng).unwrap();
        let se = (energy.se.powi(2) + energy0.se.powi(2)).sqrt();
        assert!((energy.estimate - energy0.estimate).abs() < 3.0 * se, "{energy:?} {energy0:?}");
    }
}
