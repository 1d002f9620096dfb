//! Numerical laboratory for periodic variational problems and the
//! Allen–Cahn double well: grid fields with rational slope, the lattice
//! translation action and its ordering, energy relaxation, invariant
//! extraction for solutions without self-intersections, and the explicit
//! foliation by one-dimensional heteroclinic profiles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod field;
pub mod foliation;
pub mod heteroclinic;
pub mod integrand;
pub mod io;
pub mod lattice;
pub mod minimize;
pub mod orbit;
pub mod registry;

pub use error::{Error, Result};
pub use field::{compare, sup_distance, Grid, GridAxis, Order, OrderRelation, ScalarField, TranslationVector};
pub use integrand::Integrand;
