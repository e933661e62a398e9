//! Decentralized consensus optimization over a simulated network of agents.
//!
//! The crate implements EXTRA and bundle EXTRA as synchronous multi-agent
//! iterations. Bundle EXTRA replaces the linearization in the EXTRA primal
//! update with a piecewise-linear bundle model (a max of affine cuts), and
//! each agent solves the resulting proximal subproblem through its
//! low-dimensional dual over the probability simplex.
//!
//! Module map:
//!
//! - [`graph`]: communication topology, random connected generators, edge lists.
//! - [`mixing`]: Metropolis and Laplacian weight matrices, `W̃ = (W + I)/2`
//!   and the checks the convergence analysis needs from them.
//! - [`problem`]: per-agent smooth objectives and the least-squares workload.
//! - [`bundle`]: cut sets for the Polyak, cutting-plane, Polyak cutting-plane
//!   and two-cut models.
//! - [`subsolver`]: the prox-of-max-of-affine subproblem and simplex projection.
//! - [`algorithms`]: EXTRA (recursion and primal-dual forms) and bundle EXTRA.
//! - [`metrics`]: KKT residuals, the summability bound and rate statistics.
//! - [`experiment`]: config files, run/sweep drivers and CSV output.

pub mod algorithms;
pub mod bundle;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod mixing;
pub mod problem;
pub mod subsolver;

pub use error::{Error, Result};
