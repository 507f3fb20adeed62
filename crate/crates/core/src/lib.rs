//! Exact and Monte Carlo analysis of the simple exclusion process and the
//! chameleon process used to bound its mixing time.
//!
//! - [`graph`]: tori, hypercubes and small general graphs.
//! - [`processes`]: event-driven exclusion, interchange and chameleon runs.
//! - [`exact`]: enumerated chains, uniformization, mixing times, hitting
//!   times, heat kernels and exact identity checks.
//! - [`analysis`]: importance-weighted Monte Carlo estimators.
//! - [`bounds`]: the bound constants, functionals and time integrals.
//! - [`lowerbound`]: the half-torus occupancy experiment.

pub mod analysis;
pub mod bounds;
pub mod error;
pub mod exact;
pub mod graph;
pub mod lowerbound;
pub mod processes;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{Graph, GraphKind, GraphSpec};
pub use report::{ExperimentReport, Verdict, WeightKind, WeightedEstimate};
pub use rng::RngSeed;
