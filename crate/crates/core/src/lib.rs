//! Symbolic verification of sheaves of smooth functions and Poisson
//! structures on manifolds with corners.
//!
//! * [`expr`]: expressions, parsing, differentiation, canonical forms.
//! * [`corners`]: model spaces, box regions, smooth maps, fibre products.
//! * [`sheaf`]: open lattices, sections, the sheaf axioms, germs, pullbacks.
//! * [`poisson`]: bivector fields, brackets, Jacobi and Schouten checks.
//! * [`manifest`], [`report`] and [`cli`]: JSON manifests, reports and the
//!   command batteries.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod corners;
pub mod expr;
pub mod manifest;
pub mod poisson;
pub mod report;
pub mod sampling;
pub mod sheaf;
