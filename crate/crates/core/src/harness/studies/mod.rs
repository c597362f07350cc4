//! Registered end-to-end studies. Each returns an [`ExperimentReport`] whose
//! rows carry their own tolerances; the study passes when every row does.

mod algebra;
mod clt;
mod dynamics;
mod kinetic;
mod lln;

use std::time::Instant;

use super::report::ExperimentReport;
use crate::boltzmann::{mean_free_time, VelocityGrid, VelocityGridFn};
use crate::error::{Error, Result};
use crate::init_gc::DensityProfile;

pub use clt::{clt_equilibrium, clt_noneq, fbe_cov};
pub use dynamics::{conservation, reversibility};
pub use kinetic::{hj_residual_study, ldp_boltzmann, trees};
pub use lln::lln;
pub use algebra::{cgf, cumulants};

/// Registered study names.
pub const STUDIES: &[&str] = &[
    "conservation",
    "reversibility",
    "lln",
    "clt-equilibrium",
    "clt-noneq",
    "fbe-cov",
    "cumulants",
    "cgf",
    "trees",
    "ldp-boltzmann",
    "hj-residual",
];

/// Acceptance criteria in order, each with the studies that must all pass.
pub const CRITERIA: &[(&str, &[&str])] = &[
    ("conservation and exclusion", &["conservation"]),
    ("reversibility", &["reversibility"]),
    ("law of large numbers", &["lln"]),
    ("equilibrium fluctuations", &["clt-equilibrium"]),
    ("non-equilibrium covariance", &["clt-noneq", "fbe-cov"]),
    ("cumulant algebra", &["cumulants"]),
    ("generating function sanity", &["cgf"]),
    ("Duhamel tree series", &["trees"]),
    ("large-deviation structure", &["ldp-boltzmann"]),
    ("Hamilton-Jacobi residual", &["hj-residual"]),
];

#[derive(Debug, Clone, Copy)]
pub struct StudyOptions {
    pub seed: u64,
    /// Multiplies replica and sample counts; 1 is the full study.
    pub effort: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions { seed: 1, effort: 1.0 }
    }
}

impl StudyOptions {
    fn count(&self, full: usize, floor: usize) -> usize {
        ((full as f64 * self.effort).ceil() as usize).max(floor)
    }
}

pub fn run_study(name: &str, opts: &StudyOptions) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = match name {
        "conservation" => conservation(opts),
        "reversibility" => reversibility(opts),
        "lln" => lln(opts),
        "clt-equilibrium" => clt_equilibrium(opts),
        "clt-noneq" => clt_noneq(opts),
        "fbe-cov" => fbe_cov(opts),
        "cumulants" => cumulants(opts),
        "cgf" => cgf(opts),
        "trees" => trees(opts),
        "ldp-boltzmann" => ldp_boltzmann(opts),
        "hj-residual" => hj_residual_study(opts),
        _ => Err(Error::InvalidParam(format!("unknown study '{name}'; registered: {}", STUDIES.join(", ")))),
    }?;
    report.runtime = start.elapsed();
    Ok(report)
}

/// Mean free time of a homogeneous profile, from a fine velocity grid.
pub(crate) fn profile_mean_free_time(profile: &DensityProfile) -> Result<f64> {
    let (v_max, m) = if profile.d == 2 { (8.0, 64) } else { (7.0, 22) };
    let f = VelocityGridFn::from_profile(VelocityGrid::new(profile.d, v_max, m)?, profile)?;
    Ok(mean_free_time(&f))
}

/// Least-squares slope of `ys` on `xs` and its standard error given the
/// standard errors of the `ys`.
pub(crate) fn weighted_slope(xs: &[f64], ys: &[f64], ses: &[f64]) -> (f64, f64) {
    let w: Vec<f64> = ses.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let mx = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&w).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).zip(&w).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    (sxy / sxx, (1.0 / sxx).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_study_is_an_error() {
        assert!(run_study("nope", &StudyOptions::default()).is_err());
    }

    #[test]
    fn every_criterion_names_registered_studies() {
        for (_, studies) in CRITERIA {
            assert!(studies.iter().all(|s| STUDIES.contains(s)));
        }
        assert_eq!(CRITERIA.len(), 10);
    }

    #[test]
    fn slope_of_exact_line() {
        let (s, se) = weighted_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0], &[0.1, 0.1, 0.1]);
        assert!((s - 2.0).abs() < 1e-12 && se > 0.0);
    }

    #[test]
    fn maxwellian_mean_free_time_matches_closed_form() {
        let p = DensityProfile::maxwellian(2, 1.0).unwrap();
        let exact = crate::boltzmann::maxwellian_mean_free_time(2, 1.0);
        let tau = profile_mean_free_time(&p).unwrap();
        // the |v - w| cusp limits the grid sum to about 1e-4
        assert!((tau - exact).abs() < 1e-3 * exact, "{tau} vs {exact}");
    }
}
