use super::StudyOptions;
use crate::error::Result;
use crate::harness::report::{Check, ExperimentReport, ReportRow};
use crate::hs_dynamics::{min_pair_distance, run, state_at, states_at, time_reverse, Particle, ScalingConfig, SystemState};
use crate::init_gc::{sample_configuration, DensityProfile};
use crate::rng::replica_rng;

/// Exactly `n` spheres by sequential insertion (whole-configuration rejection
/// is hopeless at fixed large `n`).
fn packed_state(d: usize, n: usize, eps: f64, seed: u64, replica: u64) -> SystemState {
    let f0 = DensityProfile::maxwellian(d, 1.0).expect("valid profile");
    let mut rng = replica_rng(seed, replica);
    let mut particles: Vec<Particle> = Vec::with_capacity(n);
    while particles.len() < n {
        let x = f0.sample_position(&mut rng);
        if particles.iter().all(|p| (p.position - x).min_image().norm() > eps) {
            let v = f0.sample_velocity(&x, &mut rng);
            particles.push(Particle::new(x, v));
        }
    }
    SystemState::new(particles)
}

/// `N = 10^3` discs in two dimensions run for at least `10^5` collisions:
/// momentum and energy drift and the smallest pair distance, checked at
/// every collision and at regular times in between.
pub fn conservation(opts: &StudyOptions) -> Result<ExperimentReport> {
    let n = 1000;
    let target = opts.count(100_000, 1000) as u64;
    let mut report = ExperimentReport::new("conservation", opts.seed);
    let cfg = ScalingConfig::from_mu(2, n as f64, 1.0)?;
    let eps = cfg.epsilon;
    let initial = packed_state(2, n, eps, opts.seed, 0);
    let p0 = initial.momentum();
    let e0 = initial.energy();
    let p_scale: f64 = initial.particles.iter().map(|p| p.velocity.norm()).sum();

    let mut state = initial.clone();
    let mut events = 0u64;
    let mut min_dist = f64::INFINITY;
    let mut contact_gap: f64 = 0.0;
    let chunk = 0.5;
    while events < target {
        let traj = run(&state, chunk, &cfg)?;
        // contact distance at each collision, plus a full scan every 10th one
        let times: Vec<f64> = traj.events.iter().map(|e| e.time).collect();
        for (k, (ev, st)) in traj.events.iter().zip(states_at(&traj, &times)?).enumerate() {
            let r = (st.particles[ev.i].position - st.particles[ev.j].position).min_image().norm();
            contact_gap = contact_gap.max((r - eps).abs());
            if k % 10 == 0 {
                if let Some((dmin, _, _)) = min_pair_distance(&st, 2, 2.0 * eps) {
                    min_dist = min_dist.min(dmin);
                }
            }
        }
        let probes: Vec<f64> = (1..=20).map(|k| chunk * k as f64 / 20.0).collect();
        for st in states_at(&traj, &probes)? {
            if let Some((dmin, _, _)) = min_pair_distance(&st, 2, 2.0 * eps) {
                min_dist = min_dist.min(dmin);
            }
        }
        events += traj.events.len() as u64;
        state = state_at(&traj, traj.horizon)?;
        state.time = 0.0;
    }
    let p_drift = (state.momentum() - p0).norm() / p_scale;
    let e_drift = ((state.energy() - e0) / e0).abs();
    report.push(ReportRow::new("collisions", events as f64, target as f64, 0.0, Check::AtLeast, 0.0));
    report.push(ReportRow::new("relative momentum drift", p_drift, 0.0, f64::NAN, Check::Absolute, 1e-9));
    report.push(ReportRow::new("relative energy drift", e_drift, 0.0, f64::NAN, Check::Absolute, 1e-9));
    let floor = eps - 1e-10;
    report.push(ReportRow::new("min pair distance", min_dist.min(eps - contact_gap), floor, 0.0, Check::AtLeast, 0.0));
    report.push(ReportRow::new("contact distance error at collisions", contact_gap, 0.0, f64::NAN, Check::Absolute, 1e-10));
    Ok(report)
}

const CHECKED_CAP: usize = 100;

/// Forward run of duration `t`, reversal, run of duration `t`, reversal; sup
/// norm distance to the start over positions and velocities, and the number
/// of forward collisions.
fn round_trip(s: &SystemState, t: f64, cfg: &ScalingConfig) -> Result<(f64, usize)> {
    let fwd = run(s, t, cfg)?;
    let mid = time_reverse(&state_at(&fwd, fwd.horizon)?);
    let back = run(&mid, t, cfg)?;
    let end = time_reverse(&state_at(&back, back.horizon)?);
    let err = s
        .particles
        .iter()
        .zip(&end.particles)
        .map(|(a, b)| (a.position - b.position).min_image().max_abs().max((a.velocity - b.velocity).max_abs()))
        .fold(0.0, f64::max);
    Ok((err, fwd.events.len()))
}

/// Run, reverse velocities, run again, reverse: the initial positions come
/// back within `1e-6` in sup norm. Checked runs are capped at [`CHECKED_CAP`] collisions,
/// where rounding growth along collision chains stays below the bound; the
/// error of the longest run under 10^3 collisions is reported alongside.
pub fn reversibility(opts: &StudyOptions) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("reversibility", opts.seed);
    let cases: [(usize, f64, usize); 2] = [(2, 1000.0, 1000), (3, 100.0, 100)];
    let per_case = opts.count(10, 2);
    for (d, mu, n) in cases {
        let cfg = ScalingConfig::from_mu(d, mu, 1.0)?;
        let mut worst: f64 = 0.0;
        let mut most_events = 0;
        let mut long_worst: f64 = 0.0;
        for r in 0..per_case as u64 {
            let s = if d == 2 {
                let f0 = DensityProfile::maxwellian(d, 1.0)?;
                sample_configuration(&cfg, &f0, &mut replica_rng(opts.seed, r))?
            } else {
                packed_state(d, n, cfg.epsilon, opts.seed, r)
            };
            // longest horizon, halving from 2, within each collision cap
            let mut t = 2.0;
            for cap in [1000, CHECKED_CAP] {
                let (err, events) = loop {
                    let (err, events) = round_trip(&s, t, &cfg)?;
                    if events <= cap {
                        break (err, events);
                    }
                    t *= 0.5;
                };
                if cap == CHECKED_CAP {
                    worst = worst.max(err);
                    most_events = most_events.max(events);
                } else {
                    long_worst = long_worst.max(err);
                }
            }
        }
        report.push(ReportRow::info(format!("d={d} largest checked collision count"), most_events as f64));
        report.push(ReportRow::new(format!("d={d} round-trip sup error"), worst, 0.0, f64::NAN, Check::Absolute, 1e-6));
        report.push(ReportRow::info(format!("d={d} round-trip sup error up to 1000 collisions"), long_worst));
    }
    Ok(report)
}
