//! Bandits with mediator feedback.
//!
//! A learner picks a policy (a distribution over outcomes), an outcome is
//! drawn from it, and only that outcome's loss is revealed. This crate
//! provides:
//!
//! - exact f-divergence and mutual-information primitives ([`divergence`]),
//! - policy-set constructors and coarse size measures ([`policy`]),
//! - the chi-squared policy-set capacity and the KL capacity ([`capacity`]),
//! - EXP4 with fixed, adaptive and best-of-both-worlds rates, a
//!   full-information OMD learner and an EXP3 baseline ([`learners`]),
//! - stochastic, adversarial and lower-bound environments ([`env`]),
//! - a deterministic, replicate-parallel simulation harness ([`harness`]).
//!
//! Indices are 0-based in the API and 1-based in every file format.

pub mod capacity;
pub mod divergence;
pub mod env;
mod error;
mod hull;
pub mod harness;
pub mod learners;
pub mod matrix_io;
pub mod par;
pub mod policy;
mod prob;
pub mod rng;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use prob::{ExtendedReal, MixtureWeights, OutcomeDistribution, PROB_TOLERANCE};
