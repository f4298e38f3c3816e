//! Structured box grids over a fibered domain R^m x R^{N-m}.
//!
//! Axes are listed x_1..x_m first, then y_1..y_{N-m}; node ordering is
//! row-major in declaration order (last axis fastest). Every linear
//! algebra assembly in the crate references this ordering.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-axis boundary treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Values pinned on the two end planes of the axis.
    Dirichlet,
    /// End planes identified: node `nodes-1` aliases node 0.
    Periodic,
    /// Zero normal flux through the end planes.
    NeumannZero,
}

#[derive(Debug, Clone)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
    pub boundary: Boundary,
}

impl AxisSpec {
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes - 1) as f64
    }
}

/// A structured grid on a box in R^N with a fibered split at `dim_x`.
#[derive(Debug, Clone)]
pub struct Grid {
    axes: Vec<AxisSpec>,
    dim_x: usize,
    strides: Vec<usize>,
    len: usize,
}

/// Minimum nodes per axis; second-order one-sided boundary stencils for
/// second derivatives reach four nodes deep.
pub const MIN_NODES: usize = 5;

pub fn make_grid(
    extents: &[[f64; 2]],
    nodes_per_axis: &[usize],
    m: usize,
    boundary: &[Boundary],
) -> Result<Arc<Grid>> {
    Grid::new(extents, nodes_per_axis, m, boundary).map(Arc::new)
}

impl Grid {
    pub fn new(
        extents: &[[f64; 2]],
        nodes_per_axis: &[usize],
        m: usize,
        boundary: &[Boundary],
    ) -> Result<Grid> {
        let n = extents.len();
        if nodes_per_axis.len() != n || boundary.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "extents ({}), nodes ({}) and boundary flags ({}) must agree",
                n,
                nodes_per_axis.len(),
                boundary.len()
            )));
        }
        if m < 1 || m >= n {
            return Err(Error::Domain(format!(
                "m must satisfy 1 <= m < N, got m = {m}, N = {n}"
            )));
        }
        let mut axes = Vec::with_capacity(n);
        for (a, (&[lo, hi], &nodes)) in extents.iter().zip(nodes_per_axis).enumerate() {
            if hi <= lo || hi.is_nan() || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Domain(format!(
                    "axis {a}: extent [{lo}, {hi}] is not a proper interval"
                )));
            }
            if nodes < MIN_NODES {
                return Err(Error::Domain(format!(
                    "axis {a}: {nodes} nodes, need at least {MIN_NODES}"
                )));
            }
            axes.push(AxisSpec {
                lo,
                hi,
                nodes,
                boundary: boundary[a],
            });
        }
        let mut strides = vec![0usize; n];
        let mut s = 1usize;
        for a in (0..n).rev() {
            strides[a] = s;
            s *= axes[a].nodes;
        }
        Ok(Grid {
            axes,
            dim_x: m,
            strides,
            len: s,
        })
    }

    /// Total spatial dimension N.
    pub fn dim_total(&self) -> usize {
        self.axes.len()
    }

    /// Fiber base dimension m.
    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    /// Homogeneous dimension N - m.
    pub fn dim_y(&self) -> usize {
        self.axes.len() - self.dim_x
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &AxisSpec {
        &self.axes[a]
    }

    pub fn spacing(&self, a: usize) -> f64 {
        self.axes[a].spacing()
    }

    pub fn max_spacing(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| a.spacing())
            .fold(0.0f64, f64::max)
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    #[inline]
    pub fn node_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.strides)
            .map(|(i, s)| i * s)
            .sum()
    }

    #[inline]
    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for a in 0..self.axes.len() {
            out[a] = idx / self.strides[a];
            idx %= self.strides[a];
        }
    }

    #[inline]
    pub fn axis_position(&self, idx: usize, a: usize) -> usize {
        (idx / self.strides[a]) % self.axes[a].nodes
    }

    /// Physical coordinates of a node.
    pub fn coords(&self, idx: usize, out: &mut [f64]) {
        for a in 0..self.axes.len() {
            let i = self.axis_position(idx, a);
            out[a] = self.axes[a].lo + i as f64 * self.axes[a].spacing();
        }
    }

    pub fn coords_vec(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_total()];
        self.coords(idx, &mut out);
        out
    }

    /// True when the node lies on a non-periodic axis end plane.
    pub fn is_boundary_node(&self, idx: usize) -> bool {
        for a in 0..self.axes.len() {
            if self.axes[a].boundary == Boundary::Periodic {
                continue;
            }
            let i = self.axis_position(idx, a);
            if i == 0 || i == self.axes[a].nodes - 1 {
                return true;
            }
        }
        false
    }

    /// True when the node lies on a Dirichlet end plane.
    pub fn is_dirichlet_node(&self, idx: usize) -> bool {
        for a in 0..self.axes.len() {
            if self.axes[a].boundary != Boundary::Dirichlet {
                continue;
            }
            let i = self.axis_position(idx, a);
            if i == 0 || i == self.axes[a].nodes - 1 {
                return true;
            }
        }
        false
    }

    /// Grids are interchangeable when their geometry matches exactly.
    pub fn same_layout(&self, other: &Grid) -> bool {
        self.dim_x == other.dim_x
            && self.axes.len() == other.axes.len()
            && self.axes.iter().zip(&other.axes).all(|(a, b)| {
                a.lo == b.lo && a.hi == b.hi && a.nodes == b.nodes && a.boundary == b.boundary
            })
    }
}
