//! Goodness-of-fit tests for uniformity built on sum-functions of
//! overlapping and disjoint m-spacings.
//!
//! The crate covers the statistics themselves ([`spacings`]), the tuning
//! functions that define them ([`tuning`]), their asymptotic moments,
//! efficacies, critical points and Pitman efficiencies ([`asymptotics`]),
//! the contamination alternatives used for power ([`alternatives`]), and a
//! seeded Monte-Carlo harness that checks the asymptotic claims
//! ([`montecarlo`]).

pub mod alternatives;
pub mod asymptotics;
pub mod error;
pub mod json;
pub mod montecarlo;
pub mod rng;
pub mod spacings;
pub mod special_math;
pub mod tuning;

pub use error::{Error, Result};
