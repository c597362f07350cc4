use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use hsbg::boltzmann::{solve, Dsmc, VelocityGridFn};
use hsbg::fbe::{covariance_ode_solve, spde_ensemble, Basis, CovarianceOptions, KineticPath};
use hsbg::harness::{parse_config, run_ensemble, run_study, write_table, RunConfig, StudyOptions, CRITERIA, STUDIES};
use hsbg::hs_dynamics::{run, states_at, write_trajectory};
use hsbg::init_gc::sample_configuration;
use hsbg::ldp::{initial_rate, path_rate, DensityPath, PathRateOptions};
use hsbg::rng::{replica_rng, sub_rng};
use hsbg::trees::{mc_moment_estimate, DuhamelOptions};
use hsbg::Vector;

#[derive(Parser)]
#[command(name = "hsbg", version, about = "Hard-sphere gas simulations and fluctuation statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// One replica of the hard-sphere dynamics: binary trajectory plus
    /// conserved quantities at the snapshot times.
    Simulate(Common),
    /// All replicas; mean and fluctuation variance of each family member.
    Ensemble(Common),
    /// Particle simulation of the homogeneous Boltzmann equation.
    Dsmc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        particles: usize,
    },
    /// Covariance ODE and SPDE ensemble along the kinetic path.
    Fbe(Common),
    /// Truncated tree series for the family moments at the horizon.
    Trees {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        m_max: usize,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
    /// Rate of the kinetic solution path and of scaled initial data.
    Ldp(Common),
    /// Runs a registered study (or `all`) and writes its report.
    Experiment {
        name: String,
        #[command(flatten)]
        common: Common,
        /// Scales replica and sample counts.
        #[arg(long, default_value_t = 1.0)]
        effort: f64,
    },
}

/// A statistical verdict (exit 1) as opposed to a hard error (exit 2).
enum Outcome {
    Pass,
    Fail,
}

fn load(common: &Common) -> anyhow::Result<RunConfig> {
    let Some(path) = &common.config else { bail!("--config is required for this command") };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

fn simulate(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let state = sample_configuration(&cfg.scaling, &cfg.profile, &mut replica_rng(cfg.seed, 0))?;
    let mut traj = run(&state, cfg.scaling.t_max, &cfg.scaling)?;
    traj.seed = cfg.seed;
    fs::create_dir_all(&cfg.output)?;
    let bin = cfg.output.join("trajectory.bin");
    let mut w = BufWriter::new(File::create(&bin)?);
    write_trajectory(&mut w, &traj)?;
    let times = cfg.snapshot_times();
    let rows: Vec<Vec<f64>> = times
        .iter()
        .zip(states_at(&traj, &times)?)
        .map(|(t, s)| {
            let p = s.momentum();
            vec![*t, s.particles.len() as f64, s.energy(), p.0[0], p.0[1], p.0[2]]
        })
        .collect();
    write_table(&cfg.output.join("conserved.csv"), &["t", "particles", "energy", "px", "py", "pz"], &rows)?;
    println!("{} particles, {} collisions, trajectory in {}", state.particles.len(), traj.events.len(), bin.display());
    Ok(Outcome::Pass)
}

fn ensemble(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let report = run_ensemble(cfg);
    let path = report.write(&cfg.output)?;
    println!("{} -> {}", report.summary(), path.display());
    Ok(if report.passed() { Outcome::Pass } else { Outcome::Fail })
}

fn dsmc(cfg: &RunConfig, particles: usize) -> anyhow::Result<Outcome> {
    let family = cfg.family.build(cfg.scaling.d);
    let mut sim = Dsmc::new(&cfg.profile, particles, sub_rng(cfg.seed, 0, 0xd5c))?;
    let zero = Vector::ZERO;
    let mut rows = Vec::new();
    for t in cfg.snapshot_times() {
        sim.advance_to(t)?;
        let mut row = vec![t];
        row.extend(family.members.iter().map(|h| sim.mean(|v| h.eval(&zero, v))));
        rows.push(row);
    }
    let mut header = vec!["t"];
    header.extend(family.members.iter().map(|h| h.name.as_str()));
    let path = cfg.output.join("dsmc.csv");
    write_table(&path, &header, &rows)?;
    println!("{particles} particles to t = {} -> {}", cfg.scaling.t_max, path.display());
    Ok(Outcome::Pass)
}

fn fbe(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let d = cfg.scaling.d;
    let q = cfg.grid.quadrature(d)?;
    let f0 = VelocityGridFn::from_profile(q.grid, &cfg.profile)?;
    let dt = cfg.grid.dt;
    let t_end = (cfg.scaling.t_max / dt).round() * dt;
    let path = KineticPath::compute(&q, &f0, t_end, dt)?;
    let sol = covariance_ode_solve(&path, &Basis::Nodal, &CovarianceOptions::default())?;
    let family = cfg.family.build(d);
    let samples: Vec<Vec<f64>> = family.members.iter().map(|h| q.grid.sample(|v| h.eval_v(v))).collect();
    let ens = spde_ensemble(&path, &samples, cfg.replicas.max(2), cfg.seed)?;
    let mut rows = Vec::new();
    for (i, t) in sol.times.iter().enumerate() {
        let ode = sol.family_matrix(i, &samples)?;
        for a in 0..samples.len() {
            for b in a..samples.len() {
                rows.push(vec![*t, a as f64, b as f64, ode[(a, b)], ens.covariance(i, a, b)]);
            }
        }
    }
    let path = cfg.output.join("fbe_covariance.csv");
    write_table(&path, &["t", "a", "b", "ode", "spde"], &rows)?;
    println!("{} steps, {} SPDE replicas -> {}", sol.times.len() - 1, cfg.replicas.max(2), path.display());
    Ok(Outcome::Pass)
}

fn trees(cfg: &RunConfig, m_max: usize, samples: usize) -> anyhow::Result<Outcome> {
    let family = cfg.family.build(cfg.scaling.d);
    let opts = DuhamelOptions { m_max, samples, ..Default::default() };
    let mut rng = sub_rng(cfg.seed, 0, 0x7ee);
    let x = Vector::ZERO;
    let mut rows = Vec::new();
    for (k, h) in family.members.iter().enumerate() {
        let est = mc_moment_estimate(&cfg.profile, cfg.scaling.t_max, x, |v| h.eval(&x, v), &opts, &mut rng)?;
        for term in &est.terms {
            rows.push(vec![k as f64, term.m as f64, term.mean, term.se, term.magnitude, term.rejected as f64]);
        }
        println!("{}: {:.6} ± {:.6} (growth t = {:.3})", h.name, est.estimate, est.se, est.growth * cfg.scaling.t_max);
    }
    write_table(&cfg.output.join("trees.csv"), &["member", "m", "mean", "se", "magnitude", "rejected"], &rows)?;
    Ok(Outcome::Pass)
}

fn ldp(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let q = cfg.grid.quadrature(cfg.scaling.d)?;
    let f0 = VelocityGridFn::from_profile(q.grid, &cfg.profile)?;
    let dt = cfg.grid.dt;
    let steps = (cfg.scaling.t_max / dt).round().max(1.0) as usize;
    let times: Vec<f64> = (1..=steps).map(|k| k as f64 * dt).collect();
    let mut densities = vec![f0.clone()];
    densities.extend(solve(&q, &f0, &times, dt)?);
    let rate = path_rate(&q, &DensityPath::new(densities)?, &f0, &PathRateOptions::default())?;
    let rows: Vec<Vec<f64>> = rate
        .intervals
        .iter()
        .map(|i| vec![i.start, i.end, i.value, i.iterations as f64, i.grad_norm, i.converged as u8 as f64])
        .collect();
    write_table(&cfg.output.join("ldp_path.csv"), &["start", "end", "value", "iterations", "grad_norm", "converged"], &rows)?;
    let scaled: Vec<Vec<f64>> = [0.5, 2.0]
        .iter()
        .map(|&c| {
            let phi = VelocityGridFn::new(f0.grid, f0.values.iter().map(|x| c * x).collect(), 0.0)?;
            Ok(vec![c, initial_rate(&phi, &f0)?])
        })
        .collect::<hsbg::Result<_>>()?;
    write_table(&cfg.output.join("ldp_initial.csv"), &["c", "rate"], &scaled)?;
    println!("Boltzmann path rate {:e} (initial {:e}, converged {})", rate.value, rate.initial, rate.converged());
    Ok(Outcome::Pass)
}

fn experiment(name: &str, common: &Common, effort: f64) -> anyhow::Result<Outcome> {
    let cfg = match &common.config {
        Some(_) => Some(load(common)?),
        None => None,
    };
    let seed = common.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(StudyOptions::default().seed);
    let out = common.out.clone().or(cfg.map(|c| c.output)).unwrap_or_else(|| PathBuf::from("out"));
    let opts = StudyOptions { seed, effort };
    let names: Vec<&str> = if name == "all" { STUDIES.to_vec() } else { vec![name] };
    let mut all_pass = true;
    for n in names {
        let report = run_study(n, &opts)?;
        let path = report.write(&out)?;
        println!("{} -> {}", report.summary(), path.display());
        for row in report.failed_rows() {
            println!("  failed: {} observed {:e} reference {:e} se {:e}", row.name, row.observed, row.reference, row.se);
        }
        if let Some((criterion, _)) = CRITERIA.iter().find(|(_, s)| s.contains(&n)) {
            log::info!("{n} feeds criterion '{criterion}'");
        }
        all_pass &= report.passed();
    }
    Ok(if all_pass { Outcome::Pass } else { Outcome::Fail })
}

fn dispatch(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Simulate(c) => simulate(&load(&c)?),
        Command::Ensemble(c) => ensemble(&load(&c)?),
        Command::Dsmc { common, particles } => dsmc(&load(&common)?, particles),
        Command::Fbe(c) => fbe(&load(&c)?),
        Command::Trees { common, m_max, samples } => trees(&load(&common)?, m_max, samples),
        Command::Ldp(c) => ldp(&load(&c)?),
        Command::Experiment { name, common, effort } => experiment(&name, &common, effort),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
