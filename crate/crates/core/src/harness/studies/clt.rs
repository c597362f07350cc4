use super::{profile_mean_free_time, StudyOptions};
use crate::boltzmann::{maxwellian_mean_free_time, CollisionQuadrature, VelocityGrid, VelocityGridFn};
use crate::error::Result;
use crate::estimators::{empirical_measure, EnsembleAccumulator, Fourier, TestFamily};
use crate::fbe::{covariance_ode_solve, spde_ensemble, Basis, CovarianceOptions, CovarianceSolution, KineticPath};
use crate::harness::ensemble::map_replicas;
use crate::harness::report::{Check, ExperimentReport, ReportRow};
use crate::hs_dynamics::ScalingConfig;
use crate::init_gc::{DensityProfile, ProfileKind, SamplerOptions};
use crate::stats::summarize;
use crate::vector::Vector;

const MU: f64 = 500.0;

/// `∫ h^2 M` for a Hermite member: the product of the factorials of its degrees.
fn hermite_norm(degrees: &[usize]) -> f64 {
    degrees.iter().map(|&n| (1..=n).product::<usize>() as f64).product()
}

/// Sample covariance of two equally long columns and its standard error,
/// from the centred products.
fn covariance_with_se(a: &[f64], b: &[f64]) -> (f64, f64) {
    let ma = summarize(a).mean;
    let mb = summarize(b).mean;
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let n = prods.len() as f64;
    let s = summarize(&prods);
    (s.mean * n / (n - 1.0), s.se)
}

/// Variance of `ζ(h)` for Hermite members of degree one and two at the
/// Maxwellian, from hard-disc replicas and from the SPDE run on the frozen
/// Maxwellian, against `∫ h^2 M`.
pub fn clt_equilibrium(opts: &StudyOptions) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("clt-equilibrium", opts.seed);
    let profile = DensityProfile::maxwellian(2, 1.0)?;
    let family = TestFamily::hermite(2, 1.0, 2, &[Fourier::One], false, false);
    let exact: Vec<f64> = family.degrees.iter().map(|d| hermite_norm(d)).collect();
    let tau = maxwellian_mean_free_time(2, 1.0);
    report.push(ReportRow::info("mean free time", tau));

    let times = [0.0, tau];
    let scaling = ScalingConfig::from_mu(2, MU, tau)?;
    let replicas = opts.count(10_000, 200) as u64;
    let (rows, failures) = map_replicas(&scaling, &profile, &SamplerOptions::default(), opts.seed, 0..replicas, &times, |_, states| {
        Ok(states.iter().flat_map(|s| family.members.iter().map(move |h| MU.sqrt() * empirical_measure(s, h, MU))).collect::<Vec<_>>())
    });
    report.failures = failures;
    let mut acc = EnsembleAccumulator::new(times.len() * family.len());
    for (r, v) in rows {
        acc.push(r, v)?;
    }
    for (i, label) in ["t=0", "t=1tau"].iter().enumerate() {
        for (k, h) in family.members.iter().enumerate() {
            let col = i * family.len() + k;
            report.push(ReportRow::new(format!("md {label} var zeta({})", h.name), acc.variance(col), exact[k], acc.covariance_se(col, col), Check::Relative, 0.05));
        }
    }

    let grid = VelocityGrid::new(2, 5.0, 16)?;
    let q = CollisionQuadrature::new(grid, 8)?;
    let m = VelocityGridFn::from_profile(grid, &profile)?;
    let dt = 0.01;
    let t_end = (tau / dt).round() * dt;
    let path = KineticPath::stationary(&q, &m, t_end, dt)?;
    let samples: Vec<Vec<f64>> = family.members.iter().map(|h| grid.sample(|v| h.eval_v(v))).collect();
    let ens = spde_ensemble(&path, &samples, opts.count(10_000, 200), opts.seed)?;
    let last = ens.times.len() - 1;
    for (k, h) in family.members.iter().enumerate() {
        let xs = ens.samples(last, k);
        let (var, se) = covariance_with_se(&xs, &xs);
        report.push(ReportRow::new(format!("spde t={t_end:.2} var zeta({})", h.name), var, exact[k], se, Check::Relative, 0.05));
    }
    Ok(report)
}

type Observable = (&'static str, fn(&Vector) -> f64);

/// Quadratic and cubic observables for the non-equilibrium covariance.
const NONEQ_FAMILY: [Observable; 4] = [
    ("vx^2", |v| v.0[0] * v.0[0]),
    ("vy^2", |v| v.0[1] * v.0[1]),
    ("vx vy", |v| v.0[0] * v.0[1]),
    ("vx |v|^2", |v| v.0[0] * v.norm2()),
];

/// Bimodal data, the kinetic path to half a mean free time and the nodal
/// covariance solution on it; the two comparison indices are the quarter
/// and half mean free time steps.
struct NoneqSetup {
    profile: DensityProfile,
    tau: f64,
    path: KineticPath,
    sol: CovarianceSolution,
    samples: Vec<Vec<f64>>,
    checkpoints: [usize; 2],
}

fn noneq_setup() -> Result<NoneqSetup> {
    let profile = DensityProfile::new(2, ProfileKind::Bimodal { beta: 1.5, shift: 1.0 })?;
    let tau = profile_mean_free_time(&profile)?;
    let grid = VelocityGrid::new(2, 6.0, 24)?;
    let q = CollisionQuadrature::new(grid, 8)?;
    let f0 = VelocityGridFn::from_profile(grid, &profile)?;
    let dt = 0.01;
    let steps = (0.5 * tau / dt).round() as usize;
    let path = KineticPath::compute(&q, &f0, steps as f64 * dt, dt)?;
    let sol = covariance_ode_solve(&path, &Basis::Nodal, &CovarianceOptions::default())?;
    let samples = NONEQ_FAMILY.iter().map(|(_, h)| grid.sample(h)).collect();
    Ok(NoneqSetup { profile, tau, path, sol, samples, checkpoints: [steps / 2, steps] })
}

fn pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..NONEQ_FAMILY.len()).flat_map(|a| (a..NONEQ_FAMILY.len()).map(move |b| (a, b)))
}

/// Equal-time covariance of hard-disc fluctuation fields at `mu = 500`
/// against the covariance ODE along the kinetic path.
pub fn clt_noneq(opts: &StudyOptions) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("clt-noneq", opts.seed);
    let setup = noneq_setup()?;
    report.push(ReportRow::info("mean free time", setup.tau));
    let times: Vec<f64> = setup.checkpoints.iter().map(|&k| setup.sol.times[k]).collect();
    let scaling = ScalingConfig::from_mu(2, MU, times[1])?;
    let replicas = opts.count(3000, 200) as u64;
    let (rows, failures) =
        map_replicas(&scaling, &setup.profile, &SamplerOptions::default(), opts.seed, 0..replicas, &times, |_, states| {
            Ok(states
                .iter()
                .map(|s| {
                    NONEQ_FAMILY.map(|(_, h)| MU.sqrt() * s.particles.iter().map(|p| h(&p.velocity)).sum::<f64>() / MU)
                })
                .collect::<Vec<_>>())
        });
    report.failures = failures;
    for (i, &k) in setup.checkpoints.iter().enumerate() {
        for (a, b) in pairs() {
            let xa: Vec<f64> = rows.iter().map(|(_, v)| v[i][a]).collect();
            let xb: Vec<f64> = rows.iter().map(|(_, v)| v[i][b]).collect();
            let (md, se) = covariance_with_se(&xa, &xb);
            let ode = setup.sol.pair(k, &setup.samples[a], &setup.samples[b])?;
            report.push(ReportRow::new(
                format!("t={:.3} cov({}, {})", times[i], NONEQ_FAMILY[a].0, NONEQ_FAMILY[b].0),
                md,
                ode,
                se,
                Check::WithinSe,
                3.0,
            ));
        }
    }
    Ok(report)
}

/// SPDE ensemble covariance along the same path against the covariance ODE.
pub fn fbe_cov(opts: &StudyOptions) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("fbe-cov", opts.seed);
    let setup = noneq_setup()?;
    let ens = spde_ensemble(&setup.path, &setup.samples, opts.count(3000, 200), opts.seed)?;
    for &k in &setup.checkpoints {
        for (a, b) in pairs() {
            let (spde, se) = covariance_with_se(&ens.samples(k, a), &ens.samples(k, b));
            let ode = setup.sol.pair(k, &setup.samples[a], &setup.samples[b])?;
            report.push(ReportRow::new(
                format!("t={:.3} cov({}, {})", setup.sol.times[k], NONEQ_FAMILY[a].0, NONEQ_FAMILY[b].0),
                spde,
                ode,
                se,
                Check::WithinSe,
                3.0,
            ));
        }
    }
    Ok(report)
}
