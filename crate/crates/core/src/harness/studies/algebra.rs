use rand::Rng;
use rayon::prelude::*;

use super::{profile_mean_free_time, StudyOptions};
use crate::boltzmann::VelocityGrid;
use crate::error::Result;
use crate::estimators::{
    cgf_from_exponents, cumulants_from_moments, empirical_measure, moments_from_cumulants, multisets,
    variance_identity_check, Fourier, MomentTable, TestFamily, TestFunction, MAX_ORDER,
};
use crate::harness::ensemble::map_replicas;
use crate::harness::report::{Check, ExperimentReport, ReportRow};
use crate::hs_dynamics::ScalingConfig;
use crate::init_gc::{sample_configuration_with, DensityProfile, ProfileKind, SamplerOptions};
use crate::rng::{replica_rng, sub_rng};
use crate::vector::Vector;

const TABLE_PURPOSE: u64 = 0x7ab1e;

fn bimodal() -> Result<DensityProfile> {
    DensityProfile::new(2, ProfileKind::Bimodal { beta: 1.5, shift: 1.0 })
}

/// Moment/cumulant round trip on random tables and the variance identity on
/// hard-disc ensembles.
pub fn cumulants(opts: &StudyOptions) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("cumulants", opts.seed);
    let mut rng = sub_rng(opts.seed, 0, TABLE_PURPOSE);
    let tables = opts.count(200, 20);
    let mut worst: f64 = 0.0;
    for _ in 0..tables {
        let k = rng.random_range(1..=3);
        let mut table = MomentTable { mu: 10f64.powf(rng.random_range(1.0..3.0)), ..Default::default() };
        for n in 1..=MAX_ORDER {
            for ks in multisets(k, n) {
                table.insert(&ks, rng.random_range(-1.0..1.0));
            }
        }
        let back = moments_from_cumulants(&cumulants_from_moments(&table)?)?;
        for (ks, e) in &table.entries {
            let err = (back.value(ks)? - e.value).abs() / e.value.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    report.push(ReportRow::info("random tables", tables as f64));
    report.push(ReportRow::new("round trip max relative error", worst, 0.0, f64::NAN, Check::Absolute, 1e-12));

    let profile = bimodal()?;
    let tau = profile_mean_free_time(&profile)?;
    let times = [0.0, 0.5 * tau];
    let mu = 500.0;
    let scaling = ScalingConfig::from_mu(2, mu, times[1])?;
    let family = TestFamily::hermite(2, 1.0, 2, &[Fourier::One, Fourier::Cos(1)], false, false);
    let (rows, failures) =
        map_replicas(&scaling, &profile, &SamplerOptions::default(), opts.seed, 0..opts.count(200, 20) as u64, &times, |_, s| {
            Ok(s.to_vec())
        });
    report.failures = failures;
    for (i, t) in times.iter().enumerate() {
        let states: Vec<_> = rows.iter().map(|(_, s)| s[i].clone()).collect();
        let worst = family
            .members
            .iter()
            .map(|h| variance_identity_check(&states, h, mu).residual)
            .fold(0.0, f64::max);
        report.push(ReportRow::new(format!("t={t:.3} variance identity residual"), worst, 0.0, f64::NAN, Check::Absolute, 1e-12));
    }
    Ok(report)
}

/// Ideal-gas generating function at time zero against its closed form, and
/// the time independence of conserved observables along hard-disc runs.
pub fn cgf(opts: &StudyOptions) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("cgf", opts.seed);
    let profile = bimodal()?;
    let mu = 500.0;
    let scaling = ScalingConfig::from_mu(2, mu, 1.0)?;
    let ideal = SamplerOptions { exclusion: false, ..Default::default() };
    let tilts = [
        TestFunction::momentum(0, 0.05),
        TestFunction::energy(0.02),
        TestFunction::of_velocity("-0.03 vx vy", 0.0, 0.03, |v| -0.03 * v.0[0] * v.0[1]),
    ];
    let replicas = opts.count(4000, 200) as u64;
    let configs = (0..replicas)
        .into_par_iter()
        .map(|r| sample_configuration_with(&scaling, &profile, &mut replica_rng(opts.seed, r), &ideal).map(|s| s.state))
        .collect::<Result<Vec<_>>>()?;
    // fine Riemann sum; the integrands are Gaussian-tailed
    let grid = VelocityGrid::new(2, 10.0, 200)?;
    for h in &tilts {
        let exps = configs.iter().map(|s| empirical_measure(s, h, 1.0)).collect();
        let est = cgf_from_exponents(exps, mu)?;
        let exact = grid.integrate(&grid.sample(|v| profile.velocity_density(v) * h.eval_v(v).exp_m1()));
        report.push(ReportRow::new(format!("t=0 ideal gas cgf({})", h.name), est.value, exact, est.se, Check::WithinSe, 3.0));
    }

    let tau = profile_mean_free_time(&profile)?;
    let times = [0.0, 0.5 * tau, tau];
    let run_scaling = ScalingConfig::from_mu(2, mu, tau)?;
    let conserved = [TestFunction::energy(0.02), TestFunction::invariant(0.0, Vector::new2(0.05, -0.02), 0.01)];
    let (rows, failures) = map_replicas(
        &run_scaling,
        &profile,
        &SamplerOptions::default(),
        opts.seed,
        0..opts.count(100, 10) as u64,
        &times,
        |_, states| {
            Ok(conserved
                .iter()
                .map(|h| {
                    let e0 = empirical_measure(&states[0], h, 1.0);
                    let scale = states[0].particles.iter().map(|p| h.eval_v(&p.velocity).abs()).sum::<f64>();
                    states[1..].iter().map(|s| (empirical_measure(s, h, 1.0) - e0).abs() / scale).fold(0.0, f64::max)
                })
                .collect::<Vec<_>>())
        },
    );
    report.failures.extend(failures);
    for (k, h) in conserved.iter().enumerate() {
        let worst = rows.iter().map(|(_, v)| v[k]).fold(0.0, f64::max);
        report.push(ReportRow::new(format!("conserved {} exponent drift", h.name), worst, 0.0, f64::NAN, Check::Absolute, 1e-12));
    }
    Ok(report)
}
