//! Octonion equivalence classes, spin/Lorentz/derivation identity checks and
//! eigenvalue invariance for wave functions built from exponentials in the
//! normed division algebras.

pub mod algebra;
pub mod catalog;
pub mod derivations;
mod error;
pub mod invariance;
pub mod physics;
pub mod report;
pub mod transforms;

pub mod cli;

pub use error::{Error, Result};
