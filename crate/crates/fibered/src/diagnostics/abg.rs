//! Audit of the two-well coupling W(x1, x2) = (x1 - 1)^2 x2^2 +
//! (x2^2 - 1)^2, whose mixed derivative W_12 = 4 x2 (x1 - 1) changes
//! sign: entire solutions of the associated two-component system exist
//! that are not one-dimensional, so the pairwise sign hypothesis is not
//! removable. The audit verifies every structural property that argument
//! needs.

use rand::{RngExt, SeedableRng};
use serde::Serialize;

use crate::linalg::SymMat;

/// W and its derivatives, in closed form.
pub fn w_value(x1: f64, x2: f64) -> f64 {
    (x1 - 1.0).powi(2) * x2 * x2 + (x2 * x2 - 1.0).powi(2)
}

pub fn w_gradient(x1: f64, x2: f64) -> [f64; 2] {
    [
        2.0 * (x1 - 1.0) * x2 * x2,
        2.0 * (x1 - 1.0).powi(2) * x2 + 4.0 * x2 * (x2 * x2 - 1.0),
    ]
}

pub fn w_hessian(x1: f64, x2: f64) -> SymMat {
    let mut m = SymMat::zeros(2);
    m.set(0, 0, 2.0 * x2 * x2);
    let mixed = 4.0 * (x1 - 1.0) * x2;
    m.set(0, 1, mixed);
    m.set(1, 0, mixed);
    m.set(1, 1, 2.0 * (x1 - 1.0).powi(2) + 12.0 * x2 * x2 - 4.0);
    m
}

#[derive(Debug, Clone)]
pub struct AbgSampleSpec {
    pub seed: u64,
    pub samples: usize,
    /// Candidate radii scanned for the radial monotonicity threshold.
    pub r0_grid: Vec<f64>,
    pub r_max: f64,
}

impl Default for AbgSampleSpec {
    fn default() -> Self {
        AbgSampleSpec {
            seed: 29,
            samples: 4000,
            r0_grid: (0..40).map(|k| 1.05 + 0.05 * k as f64).collect(),
            r_max: 12.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AbgReport {
    /// W at the two wells (1, 1) and (1, -1); exactly zero.
    pub value_at_wells: [f64; 2],
    /// min W over samples off small neighborhoods of the wells.
    pub min_off_wells: f64,
    pub positive_off_wells: bool,
    /// Smallest Hessian eigenvalue at each well.
    pub hessian_min_eigs: [f64; 2],
    /// Smallest scanned radius from which grad W . xi >= 0 outward.
    pub radial_r0: Option<f64>,
    /// Explicit witnesses of the mixed-derivative sign change.
    pub mixed_negative_at: ([f64; 2], f64),
    pub mixed_positive_at: ([f64; 2], f64),
    pub pass: bool,
}

pub fn abg_audit(spec: &AbgSampleSpec) -> AbgReport {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    let value_at_wells = [w_value(1.0, 1.0), w_value(1.0, -1.0)];

    let mut min_off = f64::INFINITY;
    for _ in 0..spec.samples {
        let x1: f64 = rng.random_range(-3.0..3.0);
        let x2: f64 = rng.random_range(-3.0..3.0);
        let d1 = ((x1 - 1.0).powi(2) + (x2 - 1.0).powi(2)).sqrt();
        let d2 = ((x1 - 1.0).powi(2) + (x2 + 1.0).powi(2)).sqrt();
        if d1 < 0.05 || d2 < 0.05 {
            continue;
        }
        min_off = min_off.min(w_value(x1, x2));
    }
    let positive_off_wells = min_off > 0.0;

    let eig_min = |x1: f64, x2: f64| w_hessian(x1, x2).eigen().0[0];
    let hessian_min_eigs = [eig_min(1.0, 1.0), eig_min(1.0, -1.0)];

    // radial monotonicity: scan candidate thresholds, accept the first
    // from which grad W . xi stays nonnegative on sampled circles outward
    let mut radial_r0 = None;
    'scan: for &r0 in &spec.r0_grid {
        let mut r = r0;
        while r <= spec.r_max {
            for k in 0..256 {
                let th = std::f64::consts::TAU * k as f64 / 256.0;
                let (x1, x2) = (r * th.cos(), r * th.sin());
                let g = w_gradient(x1, x2);
                if g[0] * x1 + g[1] * x2 < -1e-12 {
                    continue 'scan;
                }
            }
            r += 0.1;
        }
        radial_r0 = Some(r0);
        break;
    }

    let mixed_negative_at = ([0.0, 1.0], 4.0 * (0.0 - 1.0) * 1.0);
    let mixed_positive_at = ([2.0, 1.0], 4.0 * (2.0 - 1.0) * 1.0);

    let pass = value_at_wells == [0.0, 0.0]
        && positive_off_wells
        && hessian_min_eigs.iter().all(|&e| e >= 1.0)
        && radial_r0.is_some()
        && mixed_negative_at.1 < 0.0
        && mixed_positive_at.1 > 0.0;
    AbgReport {
        value_at_wells,
        min_off_wells: min_off,
        positive_off_wells,
        hessian_min_eigs,
        radial_r0,
        mixed_negative_at,
        mixed_positive_at,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wells_are_exact_zeros() {
        assert_eq!(w_value(1.0, 1.0), 0.0);
        assert_eq!(w_value(1.0, -1.0), 0.0);
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        let eps = 1e-6;
        for &(x1, x2) in &[(0.3, -1.2), (1.7, 0.4), (-0.5, 2.0)] {
            let g = w_gradient(x1, x2);
            let fd1 = (w_value(x1 + eps, x2) - w_value(x1 - eps, x2)) / (2.0 * eps);
            let fd2 = (w_value(x1, x2 + eps) - w_value(x1, x2 - eps)) / (2.0 * eps);
            assert!((g[0] - fd1).abs() < 1e-5);
            assert!((g[1] - fd2).abs() < 1e-5);
            let h = w_hessian(x1, x2);
            let g_hi = w_gradient(x1, x2 + eps);
            let g_lo = w_gradient(x1, x2 - eps);
            assert!((h.get(0, 1) - (g_hi[0] - g_lo[0]) / (2.0 * eps)).abs() < 1e-5);
        }
    }

    #[test]
    fn audit_passes_with_the_expected_numbers() {
        let rep = abg_audit(&AbgSampleSpec::default());
        assert!(rep.pass, "{rep:?}");
        // Hessians at the wells: diag(2, 8) in both cases
        assert!((rep.hessian_min_eigs[0] - 2.0).abs() < 1e-12);
        assert!((rep.hessian_min_eigs[1] - 2.0).abs() < 1e-12);
        // witnesses: W_12(0, 1) = -4, W_12(2, 1) = +4
        assert_eq!(rep.mixed_negative_at.1, -4.0);
        assert_eq!(rep.mixed_positive_at.1, 4.0);
        // the radial threshold exceeds 1 (it fails inside the wells)
        let r0 = rep.radial_r0.unwrap();
        assert!(r0 > 1.0 && r0 < 3.0, "r0 = {r0}");
    }
}
