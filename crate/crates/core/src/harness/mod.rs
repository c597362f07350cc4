//! Configuration, replica orchestration, reports and the registered studies.
//!
//! Replica `k` of a run with base seed `s` draws all of its randomness from
//! the counter-based stream `(s, k)` (see [`crate::rng`]), so ensembles can
//! be split, reordered or parallelized without changing any replica.
//! Per-replica results are merged in replica order with compensated sums,
//! which makes reports byte-identical across reruns.

mod config;
mod ensemble;
mod report;
pub mod studies;

pub use config::{parse_config, serialize_config, FamilySpec, GridSpec, RunConfig, ScaleSpec};
pub use ensemble::{ensemble_report, map_replicas, replica_states, run_ensemble, run_ensemble_range, ReplicaResults};
pub use report::{write_table, Check, ExperimentReport, ReportRow};
pub use studies::{run_study, StudyOptions, CRITERIA, STUDIES};
