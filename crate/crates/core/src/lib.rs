//! Axisymmetric critical points of the sharp-interface Ohta-Kawasaki energy
//! on the unit sphere: closed-form energies, Euler-Lagrange solvers, a
//! descent minimizer built on elementary moves, and second-variation tests.

// Negated float comparisons below deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criticality;
pub mod energy;
pub mod error;
pub mod grid;
pub mod minimizer;
pub mod pattern;
pub mod potential;
pub mod quadrature;
pub mod registry;
pub mod stability;
pub mod verify;

pub use error::{Error, Result};
pub use pattern::{make_pattern, AxisymPattern, XiProfile};
