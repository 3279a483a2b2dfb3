//! Analysis of generalized one-dimensional diffusions.
//!
//! A diffusion is described by a [`DiffusionSpec`]: regular intervals with a
//! scale function and speed measure, one-way (shunt) segments and points,
//! and traps. From it the crate derives point classes, the reach relation,
//! Hunt's hypothesis (H), symmetrizability with symmetrizing measures,
//! Dirichlet forms, and a Monte Carlo birth–death approximation used to
//! corroborate the structural verdicts.

// NaN-rejecting guards are written as `!(a < b)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod boundary;
pub mod builtin;
pub mod classification;
pub mod dirichlet;
pub mod error;
pub mod expr;
pub mod extreal;
pub mod hunt;
pub mod measure;
pub mod quadrature;
pub mod reachability;
pub mod report;
pub mod sets;
pub mod simulator;
pub mod spec_model;
pub mod symmetry;

pub use error::{Error, Result};
pub use expr::Expr;
pub use extreal::ExtReal;
pub use spec_model::{parse_spec, DiffusionSpec, Piece};
