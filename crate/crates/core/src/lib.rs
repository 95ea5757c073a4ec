//! Perturbation-robust matchings for two-sided markets in which one agent
//! may leave after the matching is fixed.
//!
//! The stable variant searches the rotation lattice of the market with a
//! minimum cut; the relaxed variant drops stability and solves an assignment
//! problem. [`oracle`] holds brute-force references for small markets.

pub mod assignment;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod format;
pub mod lattice;
pub mod model;
pub mod objective;
pub mod oracle;
pub mod rational;
pub mod relaxed;
pub mod stable_opt;

pub use error::{Error, Result};
pub use lattice::{build_rotation_digraph, propose_da, Rotation, RotationDigraph, Side};
pub use model::{is_stable, random_instance, Instance, LeaveDistribution, Leaver, Matching, Sex};
pub use objective::{psi, BaselineSet, Convention, ConventionPair, ObjectiveParams};
pub use rational::Rational;
pub use relaxed::solve_relaxed;
pub use stable_opt::{min_sumsq_stable, solve_robust, RobustSolution};
