use super::{profile_mean_free_time, StudyOptions};
use crate::boltzmann::{collision_operator, solve, CollisionQuadrature, Dsmc, VelocityGrid, VelocityGridFn};
use crate::error::Result;
use crate::estimators::TestFunction;
use crate::harness::ensemble::map_replicas;
use crate::harness::report::{Check, ExperimentReport, ReportRow};
use crate::hs_dynamics::ScalingConfig;
use crate::init_gc::{DensityProfile, ProfileKind, SamplerOptions};
use crate::ldp::{
    hamiltonian, hamiltonian_grad_p, hj_residual, initial_rate, path_rate, DensityPath, EmpiricalCgf, HjOptions,
    PathRateOptions,
};
use crate::rng::sub_rng;
use crate::stats::summarize;
use crate::trees::{mc_moment_estimate, DuhamelOptions};
use crate::vector::Vector;

const DSMC_PURPOSE: u64 = 0xd5c;
const SERIES_PURPOSE: u64 = 0x7ee;

fn anisotropic(betas: [f64; 2]) -> Result<DensityProfile> {
    DensityProfile::new(2, ProfileKind::Anisotropic { betas: betas.to_vec() })
}

type Observable = (&'static str, fn(&Vector) -> f64);

const TREE_MOMENTS: [Observable; 4] = [
    ("vx^2", |v| v.0[0] * v.0[0]),
    ("vy^2", |v| v.0[1] * v.0[1]),
    ("vx^4", |v| v.0[0].powi(4)),
    ("vx^2 vy^2", |v| v.0[0] * v.0[0] * v.0[1] * v.0[1]),
];

/// Point-particle tree series (orders up to four) for moment changes at a
/// fifth of a mean free time against DSMC, and the decay of the absolute
/// term sizes with time.
pub fn trees(opts: &StudyOptions) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("trees", opts.seed);
    let profile = anisotropic([0.6, 2.0])?;
    let tau = profile_mean_free_time(&profile)?;
    let t = 0.2 * tau;
    report.push(ReportRow::info("mean free time", tau));

    let mut sim = Dsmc::new(&profile, opts.count(200_000, 20_000), sub_rng(opts.seed, 0, DSMC_PURPOSE))?;
    let initial = sim.velocities.clone();
    sim.advance_to(t)?;

    let series = DuhamelOptions { m_max: 4, samples: opts.count(200_000, 5000), ..Default::default() };
    let mut rng = sub_rng(opts.seed, 0, SERIES_PURPOSE);
    let x = Vector::new2(0.5, 0.5);
    for (name, phi) in TREE_MOMENTS {
        let est = mc_moment_estimate(&profile, t, x, phi, &series, &mut rng)?;
        // change over [0, t]: orders one and up against per-particle DSMC differences
        let change: f64 = est.terms[1..].iter().map(|s| s.mean).sum();
        let change_se = est.terms[1..].iter().map(|s| s.se * s.se).sum::<f64>().sqrt();
        let dsmc = summarize(&sim.velocities.iter().zip(&initial).map(|(a, b)| phi(a) - phi(b)).collect::<Vec<_>>());
        let se = (change_se.powi(2) + dsmc.se.powi(2)).sqrt();
        report.push(ReportRow::new(format!("change of {name}"), change, dsmc.mean, se, Check::WithinSe, 3.0));
        report.push(ReportRow::new(format!("{name} growth * t"), est.growth * t, 1.0, 0.0, Check::AtMost, 0.0));

        // absolute order-m sizes scale like t^m: at t/2 they stay under the
        // bound fitted at t
        let half = mc_moment_estimate(&profile, 0.5 * t, x, phi, &series, &mut rng)?;
        let a0 = half.terms[0].magnitude;
        for term in &half.terms[1..] {
            let bound = a0 * (est.growth * 0.5 * t).powi(term.m as i32);
            report.push(ReportRow::new(
                format!("{name} order {} size at t/2", term.m),
                term.magnitude,
                bound,
                term.magnitude_se,
                Check::AtMost,
                3.0,
            ));
        }
    }
    Ok(report)
}

/// Structural checks of the Hamiltonian and the rate functional on a
/// velocity grid.
pub fn ldp_boltzmann(opts: &StudyOptions) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("ldp-boltzmann", opts.seed);
    let grid = VelocityGrid::new(2, 5.0, 16)?;
    let q = CollisionQuadrature::new(grid, 8)?;
    let zero = VelocityGridFn::zeros(grid);
    let densities = [
        ("maxwellian", VelocityGridFn::from_profile(grid, &DensityProfile::maxwellian(2, 1.0)?)?),
        ("bimodal", VelocityGridFn::from_profile(grid, &DensityProfile::new(2, ProfileKind::Bimodal { beta: 1.5, shift: 1.0 })?)?),
        ("anisotropic", VelocityGridFn::from_profile(grid, &anisotropic([0.8, 1.5])?)?),
    ];
    let test = grid.sample(|v| v.0[0] * v.0[0] - v.0[1] * v.0[1] + 0.1 * v.0[0].powi(4) + (0.7 * v.0[0]).sin());
    for (name, phi) in &densities {
        report.push(ReportRow::new(format!("H({name}, 0)"), hamiltonian(&q, phi, &zero)?, 0.0, f64::NAN, Check::Absolute, 0.0));
        let grad = hamiltonian_grad_p(&q, phi, &zero)?;
        let collision = collision_operator(&q, phi)?;
        let scale: f64 = grid.integrate(&test.iter().zip(&collision).map(|(a, b)| (a * b).abs()).collect::<Vec<_>>());
        let gap = (grid.pairing(&test, &grad) - grid.pairing(&test, &collision)).abs() / scale;
        report.push(ReportRow::new(format!("{name} grad H at p=0 vs collision pairing"), gap, 0.0, f64::NAN, Check::Absolute, 1e-5));
    }

    let f0 = densities[2].1.clone();
    let dt = 0.01;
    let times: Vec<f64> = (1..=5).map(|k| k as f64 * dt).collect();
    let mut path = vec![f0.clone()];
    path.extend(solve(&q, &f0, &times, dt)?);
    let rate = path_rate(&q, &DensityPath::new(path)?, &f0, &PathRateOptions::default())?;
    report.push(ReportRow::new("Boltzmann path rate", rate.value, 0.0, f64::NAN, Check::Absolute, 1e-6));
    report.push(ReportRow::flag("Boltzmann path optimizer converged", rate.converged()));

    let bimodal = &densities[1].1;
    for c in [0.5, 2.0, 3.7] {
        let scaled = VelocityGridFn::new(grid, bimodal.values.iter().map(|x| c * x).collect(), 0.0)?;
        let exact = c * f64::ln(c) - c + 1.0;
        report.push(ReportRow::new(format!("initial rate of {c} f0"), initial_rate(&scaled, bimodal)?, exact, f64::NAN, Check::Absolute, 1e-8));
    }
    Ok(report)
}

/// Hamilton-Jacobi residual of the empirical generating function of a
/// hard-disc ensemble at `mu = 500`, for collision invariants and for a small
/// generic tilt.
pub fn hj_residual_study(opts: &StudyOptions) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("hj-residual", opts.seed);
    let profile = anisotropic([0.6, 2.0])?;
    let tau = profile_mean_free_time(&profile)?;
    let mu = 500.0;
    let t = 0.2 * tau;
    let dt = 0.05 * tau;
    let times: Vec<f64> = (-2..=2).map(|k| t + k as f64 * dt).collect();
    let scaling = ScalingConfig::from_mu(2, mu, times[4])?;
    let (rows, failures) = map_replicas(
        &scaling,
        &profile,
        &SamplerOptions::default(),
        opts.seed,
        0..opts.count(2000, 100) as u64,
        &times,
        |_, states| Ok(states.iter().map(|s| s.particles.iter().map(|p| p.velocity).collect::<Vec<_>>()).collect::<Vec<_>>()),
    );
    report.failures = failures;
    let snapshots: Vec<Vec<Vec<Vector>>> = (0..times.len()).map(|i| rows.iter().map(|(_, s)| s[i].clone()).collect()).collect();
    let cgf = EmpiricalCgf::new(mu, times.clone(), snapshots)?;

    let fine = CollisionQuadrature::new(VelocityGrid::new(2, 6.0, 24)?, 8)?;
    let coarse = CollisionQuadrature::new(VelocityGrid::new(2, 6.0, 12)?, 8)?;
    let hj = HjOptions { dt, kappa: 1e-4, blocks: 20 };
    let tilts = [
        TestFunction::invariant(0.0, Vector::new2(0.005, 0.0), 0.01),
        TestFunction::energy(-0.01),
        TestFunction::of_velocity("0.01 (vx^2 - vy^2)", 0.0, 0.01, |v| 0.01 * (v.0[0] * v.0[0] - v.0[1] * v.0[1])),
    ];
    for h in &tilts {
        let r = hj_residual(&cgf, h, t, &fine, Some(&coarse), &hj)?;
        report.push(ReportRow::info(format!("{} lhs", h.name), r.lhs));
        report.push(ReportRow::info(format!("{} rhs", h.name), r.rhs));
        report.push(ReportRow::new(format!("{} residual", h.name), r.residual, 0.0, r.uncertainty, Check::WithinSe, 2.0));
    }
    Ok(report)
}
