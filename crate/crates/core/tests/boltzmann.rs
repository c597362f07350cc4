//! The grid solver and DSMC are independent routes to the same homogeneous
//! Boltzmann solution; their moments must agree within DSMC sampling error.

use hsbg::boltzmann::{maxwellian_mean_free_time, solve, CollisionQuadrature, Dsmc, VelocityGrid, VelocityGridFn};
use hsbg::init_gc::{DensityProfile, ProfileKind};
use hsbg::rng::replica_rng;
use hsbg::stats::summarize;
use hsbg::Vector;

fn observables() -> Vec<(&'static str, fn(&Vector) -> f64)> {
    vec![
        ("vx^2", |v| v.0[0] * v.0[0]),
        ("vy^2", |v| v.0[1] * v.0[1]),
        ("vx^4", |v| v.0[0].powi(4)),
        ("vx^2 vy^2", |v| v.0[0] * v.0[0] * v.0[1] * v.0[1]),
    ]
}

fn compare(f0: DensityProfile, v_max: f64) {
    let t = 0.5 * maxwellian_mean_free_time(2, 1.0);
    let grid = VelocityGrid::new(2, v_max, 24).unwrap();
    let q = CollisionQuadrature::standard(grid).unwrap();
    let g0 = VelocityGridFn::from_profile(grid, &f0).unwrap();
    let gt = solve(&q, &g0, &[t], 0.01).expect("grid solve").pop().unwrap();

    // Compare the change over [0, t]: per-particle differences remove most of
    // the initial sampling noise from the DSMC side.
    let n = 200_000;
    let mut sim = Dsmc::new(&f0, n, replica_rng(42, 0)).unwrap();
    let initial = sim.velocities.clone();
    sim.advance_to(t).unwrap();
    for (name, phi) in observables() {
        let diffs: Vec<f64> = sim.velocities.iter().zip(&initial).map(|(a, b)| phi(a) - phi(b)).collect();
        let s = summarize(&diffs);
        let grid_change = gt.moment(phi) - g0.moment(phi);
        eprintln!("{name}: grid {grid_change:.5} dsmc {:.5} ± {:.5}", s.mean, s.se);
        assert!((grid_change - s.mean).abs() < 4.0 * s.se, "{name}");
    }
}

#[test]
fn anisotropic_relaxation_grid_vs_dsmc() {
    compare(DensityProfile::new(2, ProfileKind::Anisotropic { betas: vec![0.6, 2.0] }).unwrap(), 6.5);
}

#[test]
fn bimodal_relaxation_grid_vs_dsmc() {
    compare(DensityProfile::new(2, ProfileKind::Bimodal { beta: 1.5, shift: 1.0 }).unwrap(), 5.0);
}
