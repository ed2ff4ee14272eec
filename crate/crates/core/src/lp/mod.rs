//! Linear programming and weight rediscovery.

pub mod rediscovery;
pub mod simplex;

pub use rediscovery::{build_rediscovery_lp, rediscover, RediscoveryResult, CERTIFICATE_TOL};
pub use simplex::{solve_lp, Constraint, LpOutcome, LpProblem, Relation, LP_TOL};
