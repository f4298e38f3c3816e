//! Seeded generators of compactly supported test tuples: squared-sine
//! envelopes (zero value at every boundary plane) modulated by random
//! waves. Fixing the seed fixes every randomized audit.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::fields::{Grid, ScalarField};

/// One random bump: prod_a sin^2(pi (x_a - lo)/(hi - lo)) * (trig factor).
pub fn random_bump(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> ScalarField {
    let n = grid.dim_total();
    let amp: f64 = rng.random_range(0.5..1.5);
    let freqs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.2..1.2)).collect();
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let vals: Vec<f64> = (0..grid.len())
        .map(|idx| {
            if grid.is_boundary_node(idx) {
                return 0.0;
            }
            let c = grid.coords_vec(idx);
            let mut v = amp;
            for a in 0..n {
                let ax = grid.axis(a);
                let t = (c[a] - ax.lo) / (ax.hi - ax.lo);
                let s = (std::f64::consts::PI * t).sin();
                v *= s * s;
            }
            let arg: f64 = freqs.iter().zip(&c).map(|(f, x)| f * x).sum::<f64>() + phase;
            v * (1.0 + 0.5 * arg.sin())
        })
        .collect();
    ScalarField::from_values(grid.clone(), vals).expect("bump values are finite")
}

/// A tuple of independent random bumps.
pub fn random_bump_tuple(grid: &Arc<Grid>, n: usize, rng: &mut ChaCha8Rng) -> Vec<ScalarField> {
    (0..n).map(|_| random_bump(grid, rng)).collect()
}

/// Convenience: a seeded generator.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
