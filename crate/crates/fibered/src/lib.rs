//! A numerical laboratory for quasilinear elliptic systems in fibered
//! media: the medium is nonhomogeneous only in the first m coordinates x
//! of X = (x, y) in R^m x R^{N-m}. The crate solves systems of the form
//!
//! ```text
//! -div(a_i(x, |grad u^i|) grad u^i) = F_i(x, u^1, ..., u^n),   i = 1..n
//! ```
//!
//! on structured boxes and turns the structural theory around them —
//! level-set geometry of the solutions, stability quadratic forms,
//! monotonicity, Poincare-type inequalities, energy growth and
//! one-dimensional symmetry — into executable, testable diagnostics.
//!
//! The guide under `book/` walks through the concepts; its code snippets
//! are compiled as doc-tests of this crate (see [`book`]).

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod solver;

pub mod book;

pub use error::{Error, Result};
