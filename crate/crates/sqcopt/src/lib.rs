//! Proximal point, gradient-type and equilibrium solvers for strongly
//! quasiconvex problems, together with sampled verifiers for the structural
//! properties the solvers rely on.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod functions;
pub mod verify;
pub mod prox;
pub mod minimize;
pub mod dynamics;
pub mod equilibrium;
pub mod harness;

pub use error::{Error, Result};
pub use geometry::{FeasibleSet, Point, SetSpec};
pub use functions::{Bifunction, BregmanFunction, Objective, Params};
