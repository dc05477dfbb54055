//! Exact solver suite for the valued workflow satisfiability problem with
//! user-independent weighted constraints.
//!
//! Given a set of workflow steps, a population of users, a weighted
//! authorisation policy and weighted counting constraints, the solver finds
//! a complete step-to-user plan of minimum total violation weight. The
//! weight is zero exactly when the workflow is satisfiable outright, so the
//! optimiser subsumes the decision problem.
//!
//! The search works over *patterns* (partitions of the steps into same-user
//! blocks) rather than raw plans: user-independent constraints cannot tell
//! equivalent plans apart, and the best realisation of a complete pattern
//! reduces to a minimum-weight bipartite matching. Branch and bound over
//! patterns with per-constraint lower bounds prunes the rest.
//!
//! The crate also ships the pseudo-random benchmark instance generator,
//! two exhaustive oracles used as ground truth in tests, an LP-format MIP
//! exporter for cross-validation with external solvers, and a CLI
//! (`vwsp`) wrapping all of it.

pub mod assignment;
pub mod authorisation;
pub mod bench;
pub mod constraints;
pub mod error;
pub mod generator;
pub mod instance;
pub mod io;
pub mod mip;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod solver;

pub use authorisation::{AuthorisationModel, UserAuthorisation};
pub use constraints::{ConstraintKind, ScopeStats, WeightedConstraint};
pub use error::Error;
pub use instance::{GeneratorParams, WorkflowInstance};
pub use model::{Pattern, Plan, StepId, StepSet, UserId, Weight};
pub use solver::{solve, SolveConfig, SolveReport, Termination};
