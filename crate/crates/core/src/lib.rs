//! Numerical engine for finite-dimensional history (temporal) quantum theories.
//!
//! The crate evaluates the standard decoherence functional in several
//! equivalent representations (class-operator trace, basis-sum form, and the
//! operator on the doubled tensor space), builds the Wright operator on each
//! fixed-support sector of the propositions Hilbert space, searches for
//! consistent windows, evaluates window entropies, and reproduces the two
//! infinite-dimensional divergence witnesses at finite truncation.
//!
//! Conventions: the leftmost tensor factor belongs to the earliest time,
//! inner products are conjugate-linear in the first slot, and logarithms are
//! natural.

pub mod consistency;
pub mod decoherence;
pub mod divergence;
pub mod entropy;
mod error;
pub mod histories;
pub mod linalg;
pub mod model;
pub mod numeric;
pub mod partitions;
pub mod propositions;
pub mod sampling;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};
pub use numeric::Tolerances;
