//! Pretty good measurement (square-root measurement) toolkit.
//!
//! Builds the PGM for finite ensembles of density matrices, evaluates its
//! confusion matrix two independent ways, checks the worst-case
//! discrimination bounds and copy-count formulas against measured values, and
//! simulates the multi-copy discrimination strategies.
//!
//! Module map:
//! - [`linalg`]: Hermitian eigendecomposition, support square roots, Schatten norms.
//! - [`state`] and [`generators`]: density matrices, ensembles, fidelity, tensor powers.
//! - [`gram`]: Gram matrix, PGM, confusion matrix.
//! - [`bounds`]: bound reports and copy budgets.
//! - [`protocol`]: multi-copy PGM and the two-stage protocol simulator.

pub mod bounds;
pub mod error;
pub mod generators;
pub mod gram;
pub mod linalg;
pub mod protocol;
pub mod state;

#[doc(hidden)]
pub mod testutil;

pub use error::{Error, Result};
