#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Frequency-secure two-stage stochastic unit commitment for low-inertia
//! power systems.
//!
//! * [`freq_dynamics`]: uniform frequency model, closed-form metrics and a
//!   time-domain simulator used to check them.
//! * [`nadir_linearization`]: linear surrogates of the nadir constraint
//!   (bound extraction over commitment patterns and max-affine fitting).
//! * [`scenarios`]: contingency probabilities and the wind × outage tree.
//! * [`uc_core`]: the MILP model, solver abstraction and brute-force oracle.
//! * [`study_harness`]: rolling multi-day studies and report files.
//! * [`synthetic`]: small deterministic fleets for tests and examples.

pub mod error;
pub mod freq_dynamics;
pub mod nadir_linearization;
pub mod scenarios;
pub mod study_harness;
pub mod synthetic;
pub mod uc_core;

pub use error::{GridError, Result};
