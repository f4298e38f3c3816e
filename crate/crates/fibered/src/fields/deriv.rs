//! Finite-difference and exact derivative operators.
//!
//! Second-order central stencils in the interior, second-order one-sided
//! stencils at non-periodic boundaries, index wrap-around on periodic axes.
//! The boundary flag does not change how a field is differentiated; it only
//! matters to solvers and quadratic-form assembly.

use crate::error::{Error, Result};
use crate::fields::field::{MatrixField, ScalarField, VectorField};
use crate::fields::grid::{Boundary, Grid};

/// Which derivative backend to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivMode {
    /// Finite differences of the stored node values.
    Fd,
    /// The attached closed-form callbacks.
    Analytic,
}

#[inline]
fn wrap_offset(grid: &Grid, axis: usize, idx: usize, pos: usize, step: isize) -> usize {
    let n = grid.axis(axis).nodes;
    let stride = grid.strides()[axis] as isize;
    let mut p = pos as isize + step;
    // periodic identification: node n-1 aliases node 0
    if p < 0 {
        p += n as isize - 1;
    } else if p >= n as isize {
        p -= n as isize - 1;
    }
    (idx as isize + (p - pos as isize) * stride) as usize
}

/// First derivative of raw values along one axis.
pub fn d1_axis(values: &[f64], grid: &Grid, axis: usize) -> Vec<f64> {
    let n = grid.axis(axis).nodes;
    let h = grid.spacing(axis);
    let stride = grid.strides()[axis];
    let periodic = grid.axis(axis).boundary == Boundary::Periodic;
    let mut out = vec![0.0; values.len()];
    for idx in 0..values.len() {
        let pos = grid.axis_position(idx, axis);
        out[idx] = if periodic {
            let l = wrap_offset(grid, axis, idx, pos, -1);
            let r = wrap_offset(grid, axis, idx, pos, 1);
            (values[r] - values[l]) / (2.0 * h)
        } else if pos == 0 {
            (-3.0 * values[idx] + 4.0 * values[idx + stride] - values[idx + 2 * stride])
                / (2.0 * h)
        } else if pos == n - 1 {
            (3.0 * values[idx] - 4.0 * values[idx - stride] + values[idx - 2 * stride])
                / (2.0 * h)
        } else {
            (values[idx + stride] - values[idx - stride]) / (2.0 * h)
        };
    }
    out
}

/// Adjoint of `d1_axis`: `out[j] = sum_k c_kj q[k]` where d1 has rows
/// `(D v)[k] = sum_j c_kj v[j]`. Used by variational-gradient assembly.
pub fn d1_axis_transpose(q: &[f64], grid: &Grid, axis: usize) -> Vec<f64> {
    let n = grid.axis(axis).nodes;
    let h = grid.spacing(axis);
    let stride = grid.strides()[axis];
    let periodic = grid.axis(axis).boundary == Boundary::Periodic;
    let mut out = vec![0.0; q.len()];
    for idx in 0..q.len() {
        let pos = grid.axis_position(idx, axis);
        let qk = q[idx];
        if qk == 0.0 {
            continue;
        }
        if periodic {
            let l = wrap_offset(grid, axis, idx, pos, -1);
            let r = wrap_offset(grid, axis, idx, pos, 1);
            out[r] += qk / (2.0 * h);
            out[l] -= qk / (2.0 * h);
        } else if pos == 0 {
            out[idx] += -3.0 * qk / (2.0 * h);
            out[idx + stride] += 4.0 * qk / (2.0 * h);
            out[idx + 2 * stride] += -qk / (2.0 * h);
        } else if pos == n - 1 {
            out[idx] += 3.0 * qk / (2.0 * h);
            out[idx - stride] += -4.0 * qk / (2.0 * h);
            out[idx - 2 * stride] += qk / (2.0 * h);
        } else {
            out[idx + stride] += qk / (2.0 * h);
            out[idx - stride] -= qk / (2.0 * h);
        }
    }
    out
}

/// Compact second derivative of raw values along one axis.
pub fn d2_axis(values: &[f64], grid: &Grid, axis: usize) -> Vec<f64> {
    let n = grid.axis(axis).nodes;
    let h2 = grid.spacing(axis).powi(2);
    let stride = grid.strides()[axis];
    let periodic = grid.axis(axis).boundary == Boundary::Periodic;
    let mut out = vec![0.0; values.len()];
    for idx in 0..values.len() {
        let pos = grid.axis_position(idx, axis);
        out[idx] = if periodic {
            let l = wrap_offset(grid, axis, idx, pos, -1);
            let r = wrap_offset(grid, axis, idx, pos, 1);
            (values[l] - 2.0 * values[idx] + values[r]) / h2
        } else if pos == 0 {
            (2.0 * values[idx] - 5.0 * values[idx + stride] + 4.0 * values[idx + 2 * stride]
                - values[idx + 3 * stride])
                / h2
        } else if pos == n - 1 {
            (2.0 * values[idx] - 5.0 * values[idx - stride] + 4.0 * values[idx - 2 * stride]
                - values[idx - 3 * stride])
                / h2
        } else {
            (values[idx - stride] - 2.0 * values[idx] + values[idx + stride]) / h2
        };
    }
    out
}

/// Gradient of a scalar field.
pub fn grad(field: &ScalarField, mode: DerivMode) -> Result<VectorField> {
    let grid = field.grid().clone();
    let n = grid.dim_total();
    match mode {
        DerivMode::Fd => {
            let mut out = VectorField::zeros(grid.clone(), n);
            for a in 0..n {
                let da = d1_axis(field.values(), &grid, a);
                for idx in 0..grid.len() {
                    out.at_mut(idx)[a] = da[idx];
                }
            }
            Ok(out)
        }
        DerivMode::Analytic => {
            let cb = field
                .analytic()
                .ok_or_else(|| Error::Mode("analytic mode without callbacks".into()))?;
            let mut out = VectorField::zeros(grid.clone(), n);
            let mut coords = vec![0.0; n];
            for idx in 0..grid.len() {
                grid.coords(idx, &mut coords);
                cb.gradient(&coords, out.at_mut(idx));
            }
            Ok(out)
        }
    }
}

/// Hessian of a scalar field; mixed partials by nested central differences,
/// diagonal entries by the compact three-point stencil.
pub fn hess(field: &ScalarField, mode: DerivMode) -> Result<MatrixField> {
    let grid = field.grid().clone();
    let n = grid.dim_total();
    match mode {
        DerivMode::Fd => {
            let len = grid.len();
            let mut values = vec![0.0; len * n * n];
            let mut firsts: Vec<Option<Vec<f64>>> = vec![None; n];
            for a in 0..n {
                let daa = d2_axis(field.values(), &grid, a);
                for idx in 0..len {
                    values[idx * n * n + a * n + a] = daa[idx];
                }
                for b in (a + 1)..n {
                    if firsts[a].is_none() {
                        firsts[a] = Some(d1_axis(field.values(), &grid, a));
                    }
                    let dab = d1_axis(firsts[a].as_ref().unwrap(), &grid, b);
                    for idx in 0..len {
                        values[idx * n * n + a * n + b] = dab[idx];
                        values[idx * n * n + b * n + a] = dab[idx];
                    }
                }
            }
            MatrixField::new(grid, n, values)
        }
        DerivMode::Analytic => {
            let cb = field
                .analytic()
                .ok_or_else(|| Error::Mode("analytic mode without callbacks".into()))?;
            let len = grid.len();
            let mut values = vec![0.0; len * n * n];
            let mut coords = vec![0.0; n];
            let mut h = vec![0.0; n * n];
            for idx in 0..len {
                grid.coords(idx, &mut coords);
                cb.hessian(&coords, &mut h);
                values[idx * n * n..(idx + 1) * n * n].copy_from_slice(&h);
            }
            MatrixField::new(grid, n, values)
        }
    }
}

/// Gradient restricted to the homogeneous directions (dimension N - m).
pub fn y_grad(field: &ScalarField, mode: DerivMode) -> Result<VectorField> {
    let grid = field.grid().clone();
    let n = grid.dim_total();
    let m = grid.dim_x();
    let full = grad(field, mode)?;
    let mut out = VectorField::zeros(grid.clone(), n - m);
    for idx in 0..grid.len() {
        out.at_mut(idx).copy_from_slice(&full.at(idx)[m..]);
    }
    Ok(out)
}
