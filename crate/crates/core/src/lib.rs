//! Spectral analysis of continuous-time branching random walks on `Z^d`
//! with finitely many particle-generation sources.
//!
//! The crate computes lattice Green functions `G_lambda(x, y)` by adaptive
//! Brillouin-zone quadrature, critical source intensities `beta_c`, the
//! positive eigenvalues of the evolution operator `H_beta`, and checks the
//! small-`lambda` / near-critical asymptotic laws (power, logarithmic and
//! Lambert-W regimes) against truncated-operator and Monte Carlo oracles.

pub mod asymptotics;
pub mod config;
pub mod green;
pub mod lattice_walk;
pub mod scenarios;
pub mod simulator;
pub mod spectral;

mod quad;

pub use lattice_walk::{BranchingLaw, Recurrence, WalkSpec};
pub use spectral::SourceConfig;
