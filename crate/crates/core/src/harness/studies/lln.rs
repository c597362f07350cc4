use super::{profile_mean_free_time, weighted_slope, StudyOptions};
use crate::boltzmann::Dsmc;
use crate::error::Result;
use crate::harness::ensemble::map_replicas;
use crate::harness::report::{Check, ExperimentReport, ReportRow};
use crate::hs_dynamics::ScalingConfig;
use crate::init_gc::{DensityProfile, ProfileKind, SamplerOptions};
use crate::rng::sub_rng;
use crate::stats::summarize;
use crate::vector::Vector;

type Moment = (&'static str, fn(&Vector) -> f64);

/// Velocity moments of order at most four.
pub(crate) const MOMENTS: [Moment; 7] = [
    ("vx", |v| v.0[0]),
    ("vx^2", |v| v.0[0] * v.0[0]),
    ("vy^2", |v| v.0[1] * v.0[1]),
    ("vx vy", |v| v.0[0] * v.0[1]),
    ("vx^4", |v| v.0[0].powi(4)),
    ("vy^4", |v| v.0[1].powi(4)),
    ("vx^2 vy^2", |v| v.0[0] * v.0[0] * v.0[1] * v.0[1]),
];

const DSMC_PURPOSE: u64 = 0xd5c;

/// Per-particle moments `π(h) / π(1)` of a hard-disc ensemble at `mu = 500`
/// against DSMC, and the `mu^{-1/2}` shrinkage of their spread.
pub fn lln(opts: &StudyOptions) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("lln", opts.seed);
    let profile = DensityProfile::new(2, ProfileKind::Bimodal { beta: 1.5, shift: 1.0 })?;
    let tau = profile_mean_free_time(&profile)?;
    let times = [0.0, 0.25 * tau, 0.5 * tau];
    let replicas = opts.count(200, 20) as u64;
    report.push(ReportRow::info("mean free time", tau));

    // DSMC reference with many particles
    let n_dsmc = opts.count(200_000, 20_000);
    let mut sim = Dsmc::new(&profile, n_dsmc, sub_rng(opts.seed, 0, DSMC_PURPOSE))?;
    let mut reference = Vec::new();
    for &t in &times {
        sim.advance_to(t)?;
        reference.push(
            MOMENTS
                .iter()
                .map(|(_, h)| summarize(&sim.velocities.iter().map(h).collect::<Vec<_>>()))
                .collect::<Vec<_>>(),
        );
    }

    let mut spreads = Vec::new();
    for mu in [125.0, 250.0, 500.0] {
        let scaling = ScalingConfig::from_mu(2, mu, times[2])?;
        let (rows, failures) = map_replicas(&scaling, &profile, &SamplerOptions::default(), opts.seed, 0..replicas, &times, |_, states| {
            Ok(states
                .iter()
                .map(|s| {
                    let n = s.particles.len().max(1) as f64;
                    MOMENTS.map(|(_, h)| s.particles.iter().map(|p| h(&p.velocity)).sum::<f64>() / n)
                })
                .collect::<Vec<_>>())
        });
        report.failures.extend(failures.into_iter().map(|(r, e)| (r, format!("mu={mu}: {e}"))));
        // spread of vx^2 at the last time, for the scaling fit
        let last: Vec<f64> = rows.iter().map(|(_, v)| v[2][1]).collect();
        let sd = summarize(&last).variance.sqrt();
        spreads.push((mu, sd, last.len()));
        if mu != 500.0 {
            continue;
        }
        for (i, &t) in times.iter().enumerate().skip(1) {
            for (k, (name, _)) in MOMENTS.iter().enumerate() {
                let md = summarize(&rows.iter().map(|(_, v)| v[i][k]).collect::<Vec<_>>());
                let dsmc = &reference[i][k];
                let se = (md.se * md.se + dsmc.se * dsmc.se).sqrt();
                report.push(ReportRow::new(format!("t={:.2}tau {name}", t / tau), md.mean, dsmc.mean, se, Check::WithinSe, 3.0));
            }
        }
    }
    // log sd against log mu: slope -1/2, with se(log sd) = 1 / sqrt(2 (R - 1))
    let xs: Vec<f64> = spreads.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = spreads.iter().map(|s| s.1.ln()).collect();
    let ses: Vec<f64> = spreads.iter().map(|s| 1.0 / (2.0 * (s.2 as f64 - 1.0f64)).sqrt()).collect();
    for s in &spreads {
        report.push(ReportRow::info(format!("mu={} sd of vx^2 at 0.5tau", s.0), s.1));
    }
    let (slope, slope_se) = weighted_slope(&xs, &ys, &ses);
    report.push(ReportRow::new("log sd vs log mu slope", slope, -0.5, slope_se, Check::WithinSe, 3.0));
    Ok(report)
}
