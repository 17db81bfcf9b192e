//! Numerical laboratory for differences and linear combinations of weighted
//! composition operators on weighted Bergman spaces of the unit disk.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod carleson;
pub mod config;
pub mod criteria;
pub mod error;
pub mod geometry;
pub mod operators;
pub mod quadrature;
pub mod report;
pub mod run;
pub mod spaces;
pub mod symbols;

pub use error::{Error, Result};
