//! Local metrizability of connections in plane bundles over surfaces.

// `!(r <= tol)` is used on purpose so that NaN residuals fail checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod connection;
pub mod error;
pub mod expr;
pub mod forms;
pub mod gallery;
pub mod grid;
pub mod mat;
pub mod metrizability;
pub mod tolerance;
pub mod volume_euler;

pub use error::{Error, Result, SpecError};
pub use tolerance::Tolerances;
