use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;

use super::config::RunConfig;
use super::report::{ExperimentReport, ReportRow};
use crate::error::Result;
use crate::estimators::{empirical_measure, EnsembleAccumulator};
use crate::hs_dynamics::{run, states_at, ScalingConfig, SystemState};
use crate::init_gc::{sample_configuration_with, DensityProfile, SamplerOptions};
use crate::rng::replica_rng;

/// Samples replica `replica` of base seed `seed` and returns its states at
/// `times` (nondecreasing, within `[0, scaling.t_max]`).
pub fn replica_states(
    scaling: &ScalingConfig,
    profile: &DensityProfile,
    sampler: &SamplerOptions,
    seed: u64,
    replica: u64,
    times: &[f64],
) -> Result<Vec<SystemState>> {
    let mut rng = replica_rng(seed, replica);
    let state = sample_configuration_with(scaling, profile, &mut rng, sampler)?.state;
    let horizon = times.last().copied().unwrap_or(0.0);
    let mut traj = run(&state, horizon, scaling)?;
    traj.seed = seed;
    states_at(&traj, times)
}

/// Per-replica results in replica order plus the failed replicas.
pub type ReplicaResults<T> = (Vec<(u64, T)>, Vec<(u64, String)>);

/// Runs the replicas in `range` in parallel and applies `measure` to each
/// one's snapshot states. Output order is the replica order regardless of
/// scheduling; a failing replica is recorded and skipped.
pub fn map_replicas<T, F>(
    scaling: &ScalingConfig,
    profile: &DensityProfile,
    sampler: &SamplerOptions,
    seed: u64,
    range: Range<u64>,
    times: &[f64],
    measure: F,
) -> ReplicaResults<T>
where
    T: Send,
    F: Fn(u64, &[SystemState]) -> Result<T> + Sync,
{
    let results: Vec<(u64, Result<T>)> = range
        .into_par_iter()
        .map(|r| (r, replica_states(scaling, profile, sampler, seed, r, times).and_then(|s| measure(r, &s))))
        .collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (r, res) in results {
        match res {
            Ok(v) => ok.push((r, v)),
            Err(e) => failed.push((r, e.to_string())),
        }
    }
    (ok, failed)
}

/// Empirical measures `π(h)` of every family member at every snapshot time,
/// one accumulator row per replica (time-major, then family order).
pub fn run_ensemble_range(cfg: &RunConfig, range: Range<u64>) -> (EnsembleAccumulator, Vec<(u64, String)>) {
    let family = cfg.family.build(cfg.scaling.d);
    let times = cfg.snapshot_times();
    let mu = cfg.scaling.mu;
    let (rows, failures) = map_replicas(&cfg.scaling, &cfg.profile, &SamplerOptions::default(), cfg.seed, range, &times, |_, states| {
        Ok(states
            .iter()
            .flat_map(|s| family.members.iter().map(move |h| empirical_measure(s, h, mu)))
            .collect::<Vec<f64>>())
    });
    let mut acc = EnsembleAccumulator::new(times.len() * family.len());
    for (r, values) in rows {
        acc.push(r, values).expect("row width fixed by construction");
    }
    (acc, failures)
}

/// Report rows from an accumulator filled by [`run_ensemble_range`]: mean of
/// `π(h)` with its standard error and the variance of `ζ(h) = sqrt(mu) π(h)`.
pub fn ensemble_report(cfg: &RunConfig, acc: &EnsembleAccumulator, failures: Vec<(u64, String)>) -> ExperimentReport {
    let family = cfg.family.build(cfg.scaling.d);
    let mut report = ExperimentReport::new("ensemble", cfg.seed);
    for (i, t) in cfg.snapshot_times().iter().enumerate() {
        for (k, h) in family.members.iter().enumerate() {
            let col = i * family.len() + k;
            let mut mean = ReportRow::info(format!("t={t:.6} pi({})", h.name), acc.mean(col));
            mean.se = acc.se(col);
            report.push(mean);
            let mut var = ReportRow::info(format!("t={t:.6} var zeta({})", h.name), cfg.scaling.mu * acc.variance(col));
            var.se = cfg.scaling.mu * acc.covariance_se(col, col);
            report.push(var);
        }
    }
    report.failures = failures;
    report
}

/// Runs all `cfg.replicas` replicas and reports per-time family statistics.
pub fn run_ensemble(cfg: &RunConfig) -> ExperimentReport {
    let start = Instant::now();
    let (acc, failures) = run_ensemble_range(cfg, 0..cfg.replicas as u64);
    let mut report = ensemble_report(cfg, &acc, failures);
    report.runtime = start.elapsed();
    report
}
