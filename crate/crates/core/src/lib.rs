//! Hybrid meta-solvers for variable-coefficient Poisson problems and the
//! multi-objective tooling used to pick among them.
//!
//! The numerical side composes relaxation smoothers, a trunk-basis coarse
//! correction `M2 = P (Pᵀ A P)⁻¹ Pᵀ`, flexible Krylov methods and geometric
//! multigrid into two parameterized solver families. Every run is
//! instrumented with an [`linalg::OpLedger`] so that its cost can be
//! reported as a seven-criterion [`metrics::PerformanceRecord`].
//!
//! The selection side ([`pareto`], [`lp`]) extracts strong and weak Pareto
//! sets, ranks front members with preference functions, and recovers
//! weighted-sum weights for a chosen solver by linear programming.

pub mod coarse;
pub mod error;
pub mod krylov;
pub mod linalg;
pub mod lp;
pub mod meta;
pub mod metrics;
pub mod multigrid;
pub mod pareto;
pub mod problems;
pub mod smoothers;

pub use error::{Error, Result};
