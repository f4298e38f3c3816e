//! Node-indexed fields. Fields are immutable after construction; derivative
//! operations return fresh fields.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::analytic::Analytic;
use crate::fields::grid::Grid;

/// Scalar values on a grid, optionally backed by closed-form callbacks.
#[derive(Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    analytic: Option<Arc<dyn Analytic>>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("nodes", &self.values.len())
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    coords: grid.coords_vec(i),
                    value: v,
                });
            }
        }
        Ok(ScalarField {
            grid,
            values,
            analytic: None,
        })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> ScalarField {
        ScalarField {
            values: vec![c; grid.len()],
            grid,
            analytic: None,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn analytic(&self) -> Option<&Arc<dyn Analytic>> {
        self.analytic.as_ref()
    }

    pub fn is_analytic(&self) -> bool {
        self.analytic.is_some()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    /// Node-wise linear combination on a shared grid.
    pub fn lin_comb(&self, alpha: f64, other: &ScalarField, beta: f64) -> Result<ScalarField> {
        if !self.grid.same_layout(other.grid()) {
            return Err(Error::GridMismatch("lin_comb over different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(other.values())
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        ScalarField::from_values(self.grid.clone(), values)
    }

    pub fn scale(&self, alpha: f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| alpha * v).collect(),
            analytic: None,
        }
    }
}

/// Samples an analytic field on a grid, retaining the callbacks so later
/// derivative calls can run in exact mode.
pub fn sample(analytic: Arc<dyn Analytic>, grid: Arc<Grid>) -> Result<ScalarField> {
    if analytic.dim() != grid.dim_total() {
        return Err(Error::DimensionMismatch(format!(
            "field dimension {} vs grid dimension {}",
            analytic.dim(),
            grid.dim_total()
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut coords = vec![0.0; grid.dim_total()];
    for idx in 0..grid.len() {
        grid.coords(idx, &mut coords);
        let v = analytic.value(&coords);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample {
                coords: coords.clone(),
                value: v,
            });
        }
        values.push(v);
    }
    Ok(ScalarField {
        grid,
        values,
        analytic: Some(analytic),
    })
}

/// A vector in R^dim at each node, components contiguous per node.
#[derive(Clone)]
pub struct VectorField {
    grid: Arc<Grid>,
    dim: usize,
    values: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Arc<Grid>, dim: usize, values: Vec<f64>) -> Result<VectorField> {
        if values.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} nodes x {} components",
                values.len(),
                grid.len(),
                dim
            )));
        }
        Ok(VectorField { grid, dim, values })
    }

    pub fn zeros(grid: Arc<Grid>, dim: usize) -> VectorField {
        VectorField {
            values: vec![0.0; grid.len() * dim],
            grid,
            dim,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    #[inline]
    pub fn at_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm_at(&self, idx: usize) -> f64 {
        self.at(idx).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len()).fold(0.0f64, |a, i| a.max(self.norm_at(i)))
    }
}

/// A symmetric dim x dim matrix at each node (row-major per node).
#[derive(Clone)]
pub struct MatrixField {
    grid: Arc<Grid>,
    dim: usize,
    values: Vec<f64>,
}

impl MatrixField {
    /// Verifies node-wise symmetry to 1e-12 relative tolerance.
    pub fn new(grid: Arc<Grid>, dim: usize, values: Vec<f64>) -> Result<MatrixField> {
        if values.len() != grid.len() * dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} nodes x {}x{} matrices",
                values.len(),
                grid.len(),
                dim,
                dim
            )));
        }
        let f = MatrixField { grid, dim, values };
        let mut scale = 0.0f64;
        let mut asym = 0.0f64;
        for idx in 0..f.grid.len() {
            let m = f.at(idx);
            for i in 0..dim {
                for j in (i + 1)..dim {
                    asym = asym.max((m[i * dim + j] - m[j * dim + i]).abs());
                    scale = scale.max(m[i * dim + j].abs());
                }
                scale = scale.max(m[i * dim + i].abs());
            }
        }
        if asym > 1e-12 * (1.0 + scale) {
            return Err(Error::Asymmetric(asym));
        }
        Ok(f)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, idx: usize) -> &[f64] {
        let s = self.dim * self.dim;
        &self.values[idx * s..(idx + 1) * s]
    }
}
