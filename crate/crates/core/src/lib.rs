//! Age-of-information optimal real codeword lengths for selective encoding.
//!
//! A source emits i.i.d. realizations from a known pmf; updates reach an
//! idle transmitter as a Poisson stream and are blocked while it is busy.
//! Only some realizations are encoded, and the service time of an update is
//! its codeword length. This crate provides:
//!
//! - [`pmf`]: source distributions and the policy-conditional pmfs,
//! - [`lambert`]: the principal branch of the Lambert W function,
//! - [`age`]: closed-form average age for every policy,
//! - [`solver`]: age-optimal lengths via a parametric fractional transform,
//! - [`search`]: sweeps over `k`, `alpha`, the empty-symbol length and
//!   brute-force subset selection,
//! - [`sim`]: a renewal-cycle Monte Carlo estimator and an event-driven
//!   trajectory integrator used as independent oracles.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod age;
pub mod error;
pub mod lambert;
mod math;
pub mod pmf;
pub mod policy;
pub mod search;
pub mod sim;
pub mod solver;

pub use age::{CycleMoments, LengthMoments, WaitingMoments};
pub use error::{Error, Result};
pub use lambert::{lambert_w0, WEvalReport};
pub use pmf::{Pmf, SelectionSet};
pub use policy::{Policy, PolicyConfig, PolicyKind};
pub use search::{SelectionResult, SweepResult};
pub use sim::{AgeEstimate, SimConfig};
pub use solver::{CodebookSolution, SolverSettings};
