//! Constrained minimum energy designs: candidate generation on nonconvex
//! feasible regions, the benchmark catalog, and the comparison baselines.

pub mod archive;
pub mod benchmarks;
pub mod comined;
pub mod design;
pub mod error;
pub mod experiment;
pub mod fmt;
pub mod lowdisc;
pub mod metrics;
pub mod points;
pub mod problem;
pub mod relax;
pub mod scmc;

pub use archive::{CandidateArchive, Origin};
pub use benchmarks::{catalog, BenchmarkEntry};
pub use comined::{comined_run, CominedConfig, CominedResult};
pub use design::{greedy_select, maximin_score, maxpro_score, Criterion, Design, DistanceMeasure, Exponent};
pub use error::{Error, Result};
pub use experiment::{budget_match, lhs_reject, ExperimentSpec, Method};
pub use lowdisc::{latin_hypercube, lattice, sobol, LatticeSet};
pub use metrics::{build_reference, estimate_feasibility_ratio, fill_distance, QualityReport, ReferenceCloud};
pub use points::PointSet;
pub use problem::{ConstrainedProblem, ConstraintValues, Evaluator, Normalization};
pub use relax::{log_rho, RigiditySchedule, TargetDensity};
pub use scmc::{scmc_run, ScmcConfig, ScmcResult};
