use std::sync::Arc;

use crate::boltzmann::{CollisionQuadrature, VelocityGrid, VelocityGridFn};
use crate::error::{Error, Result};
use crate::estimators::{cgf_from_exponents, TestFunction};
use crate::stats::KahanSum;
use crate::vector::Vector;

/// Cumulant generating functional `𝒥(t, h)` evaluated on time-independent,
/// position-independent tilts `h(v)`, for which the path term `D_s h`
/// vanishes and `γ = exp(h)`.
pub trait CgfCandidate: Send + Sync {
    fn value(&self, t: f64, h: &TestFunction) -> Result<f64>;

    /// `𝒥` with `γ` replaced by `γ ± δ_c 1_c / ΔV` for every cell `c` of
    /// `grid`, one cell at a time. Returns the `+` and `-` values.
    fn perturbed(&self, t: f64, h: &TestFunction, grid: &VelocityGrid, deltas: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;

    /// Leave-one-block-out copies for jackknife error bars; empty for exact
    /// candidates.
    fn jackknife(&self, _blocks: usize) -> Vec<Box<dyn CgfCandidate>> {
        Vec::new()
    }

    /// `∂𝒥/∂γ` at the cells of `grid` by central differences with grid-Dirac
    /// perturbations of relative size `kappa`: `δ_c = kappa ΔV γ(v_c)`.
    fn gamma_derivative(&self, t: f64, h: &TestFunction, grid: &VelocityGrid, kappa: f64) -> Result<Vec<f64>> {
        if !(kappa >= 1e-8 && kappa <= 1e-2) {
            return Err(Error::InvalidParam(format!(
                "perturbation size {kappa:e} outside the stable range [1e-8, 1e-2]"
            )));
        }
        let dv = grid.cell_volume();
        let deltas: Vec<f64> = grid.points().iter().map(|v| kappa * dv * h.eval_v(v).exp()).collect();
        let (plus, minus) = self.perturbed(t, h, grid, &deltas)?;
        Ok(plus.iter().zip(&minus).zip(&deltas).map(|((p, m), d)| (p - m) / (2.0 * d)).collect())
    }
}

/// `𝒥(h) = ∫ f (e^h - 1)`, the generating functional of a Poisson point
/// process with intensity `f`; the same at every time.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonCgf {
    pub intensity: VelocityGridFn,
}

impl CgfCandidate for PoissonCgf {
    fn value(&self, _t: f64, h: &TestFunction) -> Result<f64> {
        let g = &self.intensity.grid;
        let mut s = KahanSum::new();
        for (c, f) in self.intensity.values.iter().enumerate() {
            s.add(f * h.eval_v(&g.point(c)).exp_m1());
        }
        Ok(s.value() * g.cell_volume())
    }

    fn perturbed(&self, t: f64, h: &TestFunction, grid: &VelocityGrid, deltas: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if *grid != self.intensity.grid {
            return Err(Error::GridMismatch("perturbation grid differs from the intensity grid".into()));
        }
        let base = self.value(t, h)?;
        let plus = deltas.iter().zip(&self.intensity.values).map(|(d, f)| base + d * f).collect();
        let minus = deltas.iter().zip(&self.intensity.values).map(|(d, f)| base - d * f).collect();
        Ok((plus, minus))
    }
}

/// Empirical `𝒥(t, h) = (1/μ) log mean_r exp(Σ_i h(v_i(t)))` over an
/// ensemble of particle velocity snapshots.
#[derive(Debug, Clone)]
pub struct EmpiricalCgf {
    pub mu: f64,
    times: Arc<Vec<f64>>,
    /// `[time][replica][particle]`
    snapshots: Arc<Vec<Vec<Vec<Vector>>>>,
    /// Replicas with `r % blocks == block` are left out.
    exclude: Option<(usize, usize)>,
}

impl EmpiricalCgf {
    pub fn new(mu: f64, times: Vec<f64>, snapshots: Vec<Vec<Vec<Vector>>>) -> Result<Self> {
        if times.len() != snapshots.len() || times.is_empty() {
            return Err(Error::InvalidParam("one snapshot set per time is required".into()));
        }
        let replicas = snapshots[0].len();
        if replicas < 2 || snapshots.iter().any(|s| s.len() != replicas) {
            return Err(Error::InvalidParam("every time needs the same number (>= 2) of replicas".into()));
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidParam(format!("mu must be positive, got {mu}")));
        }
        Ok(EmpiricalCgf { mu, times: Arc::new(times), snapshots: Arc::new(snapshots), exclude: None })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn replicas(&self) -> usize {
        self.snapshots[0].len()
    }

    fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or_else(|| Error::MissingEntry(format!("no snapshot at t = {t}")))
    }

    fn kept(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.replicas()).filter(move |r| self.exclude.is_none_or(|(b, n)| r % n != b))
    }

    fn exponents(&self, k: usize, h: &TestFunction) -> Vec<f64> {
        self.kept().map(|r| self.snapshots[k][r].iter().map(|v| h.eval_v(v)).sum()).collect()
    }

    /// Value with its delta-method standard error.
    pub fn estimate(&self, t: f64, h: &TestFunction) -> Result<(f64, f64)> {
        let e = cgf_from_exponents(self.exponents(self.time_index(t)?, h), self.mu)?;
        Ok((e.value, e.se))
    }
}

impl CgfCandidate for EmpiricalCgf {
    fn value(&self, t: f64, h: &TestFunction) -> Result<f64> {
        Ok(self.estimate(t, h)?.0)
    }

    fn perturbed(&self, t: f64, h: &TestFunction, grid: &VelocityGrid, deltas: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if deltas.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} perturbations for {} cells", deltas.len(), grid.len())));
        }
        let k = self.time_index(t)?;
        let base = self.value(t, h)?;
        let kept: Vec<usize> = self.kept().collect();
        let exps = self.exponents(k, h);
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = exps.iter().map(|s| (s - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        let dv = grid.cell_volume();
        let mut up = vec![0.0; grid.len()];
        let mut down = vec![0.0; grid.len()];
        let mut touched: Vec<(usize, f64)> = Vec::new();
        for (&r, &w) in kept.iter().zip(&weights) {
            touched.clear();
            for v in &self.snapshots[k][r] {
                if let Some(c) = grid.locate(v) {
                    touched.push((c, deltas[c] / (dv * h.eval_v(v).exp())));
                }
            }
            touched.sort_by_key(|e| e.0);
            let mut i = 0;
            while i < touched.len() {
                let c = touched[i].0;
                let (mut lp, mut lm) = (0.0, 0.0);
                while i < touched.len() && touched[i].0 == c {
                    lp += touched[i].1.ln_1p();
                    lm += (-touched[i].1).ln_1p();
                    i += 1;
                }
                up[c] += w * lp.exp_m1();
                down[c] += w * lm.exp_m1();
            }
        }
        let plus = up.iter().map(|u| base + (u / total).ln_1p() / self.mu).collect();
        let minus = down.iter().map(|u| base + (u / total).ln_1p() / self.mu).collect();
        Ok((plus, minus))
    }

    fn jackknife(&self, blocks: usize) -> Vec<Box<dyn CgfCandidate>> {
        (0..blocks)
            .map(|b| Box::new(EmpiricalCgf { exclude: Some((b, blocks)), ..self.clone() }) as Box<dyn CgfCandidate>)
            .collect()
    }
}

/// Restricted Legendre transform `max_h ∫ φ(t) h - 𝒥(t, h)` over a finite
/// family of time-independent tilts; a lower bound on the full supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreRate {
    pub value: f64,
    /// Index of the maximizing tilt in the family.
    pub best: usize,
}

pub fn legendre_rate(
    cgf: &dyn CgfCandidate,
    phi: &VelocityGridFn,
    t: f64,
    family: &[TestFunction],
) -> Result<LegendreRate> {
    if family.is_empty() {
        return Err(Error::InvalidParam("empty tilt family".into()));
    }
    let mut best = LegendreRate { value: f64::NEG_INFINITY, best: 0 };
    for (i, h) in family.iter().enumerate() {
        let pairing = phi.moment(|v| h.eval_v(v));
        let value = pairing - cgf.value(t, h)?;
        if value > best.value {
            best = LegendreRate { value, best: i };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjOptions {
    /// Half-width of the central time difference.
    pub dt: f64,
    /// Relative size of the grid-Dirac perturbations.
    pub kappa: f64,
    /// Jackknife blocks for the statistical error (ignored for exact candidates).
    pub blocks: usize,
}

impl Default for HjOptions {
    fn default() -> Self {
        HjOptions { dt: 0.02, kappa: 1e-4, blocks: 20 }
    }
}

/// Both sides of the Hamilton–Jacobi equation and their difference, with
/// error bars: jackknife statistical error, Richardson estimates of the time
/// difference error (from `2 dt`) and of the velocity-grid error (from a
/// coarser quadrature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub stat_se: f64,
    pub time_error: f64,
    pub grid_error: f64,
    pub uncertainty: f64,
}

/// `½ ∫ g(v1) g(v2) (e^{h(v1') + h(v2')} - e^{h(v1) + h(v2)}) dμ` with `g`
/// on the quadrature grid and `h` evaluated at the exact outgoing velocities.
pub fn hj_rhs(q: &CollisionQuadrature, g: &[f64], h: &TestFunction) -> Result<f64> {
    if g.len() != q.grid.len() {
        return Err(Error::GridMismatch(format!("{} values for {} cells", g.len(), q.grid.len())));
    }
    let dv = q.grid.cell_volume();
    let hv: Vec<f64> = q.grid.points().iter().map(|v| h.eval_v(v)).collect();
    let mut s = KahanSum::new();
    q.visit_velocities(|a, b, w, vp, wp| {
        let gg = g[a] * g[b];
        if gg != 0.0 {
            s.add(w * gg * ((h.eval_v(&vp) + h.eval_v(&wp)).exp() - (hv[a] + hv[b]).exp()));
        }
    });
    Ok(0.5 * dv * dv * s.value())
}

fn sides(cgf: &dyn CgfCandidate, h: &TestFunction, t: f64, q: &CollisionQuadrature, opts: &HjOptions) -> Result<(f64, f64)> {
    let lhs = (cgf.value(t + opts.dt, h)? - cgf.value(t - opts.dt, h)?) / (2.0 * opts.dt);
    let g = cgf.gamma_derivative(t, h, &q.grid, opts.kappa)?;
    Ok((lhs, hj_rhs(q, &g, h)?))
}

pub fn hj_residual(
    cgf: &dyn CgfCandidate,
    h: &TestFunction,
    t: f64,
    q: &CollisionQuadrature,
    coarse: Option<&CollisionQuadrature>,
    opts: &HjOptions,
) -> Result<HjResidual> {
    if !(opts.dt > 0.0 && t - opts.dt >= 0.0) {
        return Err(Error::InvalidParam(format!("time step {} must be positive and at most t = {t}", opts.dt)));
    }
    let (lhs, rhs) = sides(cgf, h, t, q, opts)?;
    let residual = lhs - rhs;

    let wide = HjOptions { dt: 2.0 * opts.dt, ..*opts };
    let time_error = if t - wide.dt >= 0.0 {
        match (cgf.value(t + wide.dt, h), cgf.value(t - wide.dt, h)) {
            (Ok(a), Ok(b)) => ((a - b) / (2.0 * wide.dt) - lhs).abs() / 3.0,
            (Err(Error::MissingEntry(_)), _) | (_, Err(Error::MissingEntry(_))) => 0.0,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    } else {
        0.0
    };
    let grid_error = match coarse {
        Some(cq) => {
            let g = cgf.gamma_derivative(t, h, &cq.grid, opts.kappa)?;
            (hj_rhs(cq, &g, h)? - rhs).abs() / 3.0
        }
        None => 0.0,
    };
    let copies = cgf.jackknife(opts.blocks);
    let stat_se = if copies.is_empty() {
        0.0
    } else {
        let rs = copies
            .iter()
            .map(|c| sides(c.as_ref(), h, t, q, opts).map(|(l, r)| l - r))
            .collect::<Result<Vec<_>>>()?;
        let n = rs.len() as f64;
        let mean = rs.iter().sum::<f64>() / n;
        ((n - 1.0) / n * rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>()).sqrt()
    };
    let uncertainty = (stat_se.powi(2) + time_error.powi(2) + grid_error.powi(2)).sqrt();
    Ok(HjResidual { lhs, rhs, residual, stat_se, time_error, grid_error, uncertainty })
}
