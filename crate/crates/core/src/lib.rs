//! Restricted mean time lost (RMTL) inference for competing risks data in
//! factorial designs.
//!
//! The crate covers tie-aware Aalen-Johansen estimation per group, the
//! Wald-type statistic with a Moore-Penrose studentization, its asymptotic
//! and studentized permutation calibrations, Monte-Carlo calibrated multiple
//! contrast tests with simultaneous confidence intervals, and a simulation
//! harness for type-I error and power studies.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contrasts;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod io;
pub mod numerics;
pub mod simulation;

pub use error::{Error, Result};
