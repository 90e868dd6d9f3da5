//! Optimal unambiguous discrimination of two mixed quantum states.
//!
//! Given weighted density operators `γ1 = p1 ρ1` and `γ2 = p2 ρ2`, the crate
//! finds the unique optimal proper USD measurement `(E1, E2, E?)`:
//!
//! * [`reductions`] strips the parallel and mutually orthogonal parts of the
//!   supports, leaving a strictly skew core.
//! * [`closed_form`] covers single-state detection and the fidelity form.
//! * [`solver4d`] solves every strictly skew pair on a four-dimensional support.
//! * [`optimality`] checks optimality operationally and builds a certificate.
//! * [`oracle`] is an independent interior-point optimizer used for verification.
//! * [`pipeline`] chains all of the above and handles file formats and sweeps.

pub mod closed_form;
pub mod error;
pub mod instances;
pub mod linalg;
pub mod model;
pub mod optimality;
pub mod oracle;
pub mod outcome;
pub mod pipeline;
pub mod random;
pub mod reductions;
pub mod solver4d;

pub use error::{Error, Result};
