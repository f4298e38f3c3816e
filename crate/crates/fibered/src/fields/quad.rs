//! Trapezoidal quadrature on the box, node masks for balls and annuli.
//!
//! Ball regions are node-inclusion masks (no partial cells): a node
//! belongs to B_R(c) when |X - c| <= R. Masked integrals are plain
//! weighted sums restricted to the mask.

use crate::fields::grid::Grid;

/// Per-node product trapezoid weights.
pub fn node_weights(grid: &Grid) -> Vec<f64> {
    let n = grid.dim_total();
    let mut w = vec![1.0; grid.len()];
    for a in 0..n {
        let h = grid.spacing(a);
        let last = grid.axis(a).nodes - 1;
        for idx in 0..grid.len() {
            let pos = grid.axis_position(idx, a);
            let wa = if pos == 0 || pos == last { 0.5 * h } else { h };
            w[idx] *= wa;
        }
    }
    w
}

pub fn integrate(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum()
}

pub fn integrate_masked(values: &[f64], weights: &[f64], mask: &[bool]) -> f64 {
    values
        .iter()
        .zip(weights)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((v, w), _)| v * w)
        .sum()
}

/// Mask of nodes inside the closed ball of radius `r` around `center`.
pub fn ball_mask(grid: &Grid, center: &[f64], r: f64) -> Vec<bool> {
    let n = grid.dim_total();
    let mut coords = vec![0.0; n];
    let r2 = r * r;
    (0..grid.len())
        .map(|idx| {
            grid.coords(idx, &mut coords);
            let d2: f64 = coords
                .iter()
                .zip(center)
                .map(|(c, o)| (c - o) * (c - o))
                .sum();
            d2 <= r2
        })
        .collect()
}

/// Mask of the annulus r_in < |X| <= r_out around the origin.
pub fn annulus_mask(grid: &Grid, r_in: f64, r_out: f64) -> Vec<bool> {
    let n = grid.dim_total();
    let mut coords = vec![0.0; n];
    (0..grid.len())
        .map(|idx| {
            grid.coords(idx, &mut coords);
            let d2: f64 = coords.iter().map(|c| c * c).sum();
            d2 > r_in * r_in && d2 <= r_out * r_out
        })
        .collect()
}

/// Largest ball radius around `center` contained in the grid box.
pub fn inradius(grid: &Grid, center: &[f64]) -> f64 {
    grid.axes()
        .iter()
        .zip(center)
        .map(|(ax, &c)| (c - ax.lo).min(ax.hi - c))
        .fold(f64::INFINITY, f64::min)
}
