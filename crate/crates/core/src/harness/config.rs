//! Run configuration: a TOML document with `[scaling]`, `[profile]`,
//! `[family]` and `[grid]` sections.
//!
//! ```toml
//! replicas = 200
//! seed = 7
//! output = "out/lln"
//! experiment = "lln"          # optional
//! snapshots = 5               # observation times in [0, horizon]
//!
//! [scaling]
//! d = 2
//! mu = 500.0                  # or epsilon = 0.002, never both
//! horizon = 0.2
//!
//! [profile]
//! kind = "bimodal"            # maxwellian | anisotropic | bimodal | modulated | tabulated
//! beta = 1.5
//! shift = 1.0
//!
//! [family]                    # Hermite test family, velocity only
//! beta = 1.0
//! max_degree = 2
//! include_constant = false
//!
//! [grid]                      # velocity grid for kinetic references
//! v_max = 6.0
//! points = 24
//! angles = 8
//! dt = 0.01
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::boltzmann::{CollisionQuadrature, VelocityGrid};
use crate::error::{Error, Result};
use crate::estimators::{Fourier, TestFamily};
use crate::hs_dynamics::ScalingConfig;
use crate::init_gc::{DensityProfile, ProfileKind};

/// Which of the two scaling parameters the document fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleSpec {
    Epsilon(f64),
    Mu(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub beta: f64,
    pub max_degree: usize,
    #[serde(default)]
    pub include_constant: bool,
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec { beta: 1.0, max_degree: 2, include_constant: false }
    }
}

impl FamilySpec {
    pub fn build(&self, d: usize) -> TestFamily {
        TestFamily::hermite(d, self.beta, self.max_degree, &[Fourier::One], self.include_constant, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub v_max: f64,
    pub points: usize,
    pub angles: usize,
    pub dt: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { v_max: 6.0, points: 24, angles: 8, dt: 0.01 }
    }
}

impl GridSpec {
    pub fn quadrature(&self, d: usize) -> Result<CollisionQuadrature> {
        CollisionQuadrature::new(VelocityGrid::new(d, self.v_max, self.points)?, self.angles)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scale: ScaleSpec,
    /// Derived from `scale` via `mu epsilon^(d-1) = 1`.
    pub scaling: ScalingConfig,
    pub profile: DensityProfile,
    pub replicas: usize,
    pub seed: u64,
    pub snapshots: usize,
    pub family: FamilySpec,
    pub grid: GridSpec,
    pub experiment: Option<String>,
    pub output: PathBuf,
}

impl RunConfig {
    /// Observation times `k horizon / (snapshots - 1)`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let t = self.scaling.t_max;
        if self.snapshots < 2 {
            return vec![t];
        }
        (0..self.snapshots).map(|k| t * k as f64 / (self.snapshots - 1) as f64).collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalingDoc {
    d: Spanned<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<Spanned<f64>>,
    horizon: Spanned<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default = "one")]
    replicas: Spanned<usize>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_snapshots")]
    snapshots: Spanned<usize>,
    #[serde(default = "default_output")]
    output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    experiment: Option<String>,
    scaling: Spanned<ScalingDoc>,
    profile: Spanned<ProfileKind>,
    #[serde(default)]
    family: FamilySpec,
    #[serde(default = "default_grid")]
    grid: Spanned<GridSpec>,
}

fn one() -> Spanned<usize> {
    Spanned::new(0..0, 1)
}

fn default_snapshots() -> Spanned<usize> {
    Spanned::new(0..0, 5)
}

fn default_grid() -> Spanned<GridSpec> {
    Spanned::new(0..0, GridSpec::default())
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn at<T>(text: &str, s: &Spanned<T>, message: String) -> Error {
    let span = s.span();
    let line = (span.end > 0).then(|| line_of(text, span.start));
    Error::Config { line, message }
}

/// Parses and validates a configuration document, filling in derived
/// quantities. Every error carries the line it refers to when known.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc: Document = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let sc = doc.scaling.get_ref();
    let d = *sc.d.get_ref();
    if !(d == 2 || d == 3) {
        return Err(at(text, &sc.d, format!("dimension must be 2 or 3, got {d}")));
    }
    let horizon = *sc.horizon.get_ref();
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(at(text, &sc.horizon, format!("horizon must be finite and nonnegative, got {horizon}")));
    }
    let (scale, scaling) = match (&sc.epsilon, &sc.mu) {
        (Some(e), Some(m)) => {
            return Err(at(
                text,
                m,
                format!("give exactly one of epsilon ({}) and mu ({}); the other follows from mu epsilon^(d-1) = 1", e.get_ref(), m.get_ref()),
            ))
        }
        (None, None) => return Err(at(text, &doc.scaling, "scaling needs epsilon or mu".into())),
        (Some(e), None) => (
            ScaleSpec::Epsilon(*e.get_ref()),
            ScalingConfig::from_epsilon(d, *e.get_ref(), horizon).map_err(|err| at(text, e, err.to_string()))?,
        ),
        (None, Some(m)) => (
            ScaleSpec::Mu(*m.get_ref()),
            ScalingConfig::from_mu(d, *m.get_ref(), horizon).map_err(|err| at(text, m, err.to_string()))?,
        ),
    };
    let replicas = *doc.replicas.get_ref();
    if replicas == 0 {
        return Err(at(text, &doc.replicas, "replicas must be at least 1".into()));
    }
    let profile = DensityProfile::new(d, doc.profile.get_ref().clone()).map_err(|e| at(text, &doc.profile, e.to_string()))?;
    let g = doc.grid.get_ref();
    if !(g.v_max > 0.0 && g.points >= 2 && g.angles >= 1 && g.dt > 0.0) {
        return Err(at(text, &doc.grid, format!("grid needs v_max > 0, points >= 2, angles >= 1, dt > 0, got {g:?}")));
    }
    if !(doc.family.beta > 0.0) {
        return Err(Error::Config { line: None, message: format!("family beta must be positive, got {}", doc.family.beta) });
    }
    Ok(RunConfig {
        scale,
        scaling,
        profile,
        replicas,
        seed: doc.seed,
        snapshots: *doc.snapshots.get_ref(),
        family: doc.family,
        grid: *g,
        experiment: doc.experiment,
        output: doc.output,
    })
}

/// Writes a configuration back as a document that [`parse_config`] accepts.
pub fn serialize_config(cfg: &RunConfig) -> Result<String> {
    let s = |x| Spanned::new(0..0, x);
    let (epsilon, mu) = match cfg.scale {
        ScaleSpec::Epsilon(e) => (Some(s(e)), None),
        ScaleSpec::Mu(m) => (None, Some(s(m))),
    };
    let doc = Document {
        replicas: Spanned::new(0..0, cfg.replicas),
        seed: cfg.seed,
        snapshots: Spanned::new(0..0, cfg.snapshots),
        output: cfg.output.clone(),
        experiment: cfg.experiment.clone(),
        scaling: Spanned::new(
            0..0,
            ScalingDoc { d: Spanned::new(0..0, cfg.scaling.d), epsilon, mu, horizon: s(cfg.scaling.t_max) },
        ),
        profile: Spanned::new(0..0, cfg.profile.kind.clone()),
        family: cfg.family,
        grid: Spanned::new(0..0, cfg.grid),
    };
    toml::to_string(&doc).map_err(|e| Error::Config { line: None, message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "[scaling]\nd = 2\nmu = 500.0\nhorizon = 0.1\n\n[profile]\nkind = \"maxwellian\"\nbeta = 1.0\n";

    #[test]
    fn minimal_config_derives_epsilon() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.scaling.epsilon, 1.0 / 500.0);
        assert_eq!(cfg.replicas, 1);
        assert_eq!(cfg.grid, GridSpec::default());
        for (t, want) in cfg.snapshot_times().iter().zip([0.0, 0.025, 0.05, 0.075, 0.1]) {
            assert!((t - want).abs() < 1e-15);
        }
        assert_eq!(cfg.snapshot_times().len(), 5);
    }

    #[test]
    fn both_scales_is_an_error_with_a_line() {
        let text = MINIMAL.replace("mu = 500.0", "mu = 500.0\nepsilon = 0.002");
        match parse_config(&text) {
            Err(Error::Config { line: Some(3), message }) => assert!(message.contains("exactly one")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_missing_keys_are_located() {
        let text = MINIMAL.replace("horizon = 0.1", "horizon = 0.1\ncolour = 3");
        let Err(Error::Config { line: Some(5), .. }) = parse_config(&text) else { panic!() };
        let text = MINIMAL.replace("horizon = 0.1\n", "");
        let Err(Error::Config { line: Some(_), message }) = parse_config(&text) else { panic!() };
        assert!(message.contains("horizon"), "{message}");
        let text = format!("replicas = 0\n{MINIMAL}");
        let Err(Error::Config { line: Some(1), .. }) = parse_config(&text) else { panic!() };
        let text = MINIMAL.replace("beta = 1.0", "beta = -1.0");
        let Err(Error::Config { line: Some(6), .. }) = parse_config(&text) else { panic!() };
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip(d in 2usize..=3, use_mu in any::<bool>(), scale in 0.001f64..0.2, replicas in 1usize..10_000,
                      seed in any::<u64>(), beta in 0.2f64..5.0, shift in 0.0f64..2.0, points in 4usize..40) {
            let scaling = if use_mu {
                format!("mu = {:?}", scale.powi(1 - d as i32))
            } else {
                format!("epsilon = {scale:?}")
            };
            let text = format!(
                "replicas = {replicas}\nseed = {seed}\nexperiment = \"lln\"\n[scaling]\nd = {d}\n{scaling}\nhorizon = 0.5\n\
                 [profile]\nkind = \"bimodal\"\nbeta = {beta:?}\nshift = {shift:?}\n[grid]\nv_max = 5.0\npoints = {points}\nangles = 6\ndt = 0.02\n"
            );
            let cfg = parse_config(&text).unwrap();
            let again = parse_config(&serialize_config(&cfg).unwrap()).unwrap();
            prop_assert_eq!(cfg, again);
        }
    }
}
