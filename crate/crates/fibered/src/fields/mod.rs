//! Grids, fields and derivative machinery over fibered boxes.

pub mod analytic;
pub mod deriv;
pub mod field;
pub mod grid;
pub mod io;
pub mod quad;

pub use analytic::{Analytic, Extended1d, LinearProfile, Profile, TanhProfile, TrigPoly};
pub use deriv::{grad, hess, y_grad, DerivMode};
pub use field::{sample, MatrixField, ScalarField, VectorField};
pub use grid::{make_grid, AxisSpec, Boundary, Grid};
pub use quad::{annulus_mask, ball_mask, inradius, integrate, integrate_masked, node_weights};
