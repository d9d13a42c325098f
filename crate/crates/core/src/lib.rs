//! Analysis toolkit for nonconventional sums S_N = sum_{n<=N} F(xi_n,
//! xi_{2n}, ..., xi_{ln}) of a function F evaluated along a finite-state
//! stationary Markov chain at arithmetically coupled times.
//!
//! The crate computes the chain-level mixing coefficients, the telescoping
//! decomposition F = F_1 + ... + F_l, the lattice/non-lattice span
//! classification of the centered observable, exact and Monte Carlo
//! asymptotic variances with positivity verdicts, characteristic-function
//! decay scans based on finite-state Fourier operators, and the local
//! limit comparison between scaled point masses of S_N and the Gaussian
//! density. Every Monte Carlo estimator is cross-validated against an
//! exact path-enumeration oracle at desk scale.

// dense matrix code reads better with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod chain;
pub mod error;
pub mod exact;
pub mod fourier;
pub mod instance;
pub mod lattice;
pub mod linalg;
pub mod observable;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod variance;

pub use chain::{FiniteChain, MixingProfile};
pub use error::{Error, Result};
pub use lattice::{LatticeClassification, LatticeKind};
pub use observable::{Decomposition, Observable};
pub use sim::{EmpiricalDistribution, NonconvInstance, SimConfig};
pub use variance::{PositivityVerdict, VarianceReport};
