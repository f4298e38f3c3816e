//! Coupling potentials F(x, xi^1, ..., xi^n) with gradients and Hessians
//! in xi. The right-hand sides of the system are F_i = dF/dxi^i.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Custom potential from closures; the Hessian falls back to finite
/// differences of the gradient when not supplied.
pub struct CustomPotential {
    pub label: String,
    pub n: usize,
    pub f: Box<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
    pub grad: Box<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>,
    pub hess: Option<Box<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>>,
}

#[derive(Clone)]
pub enum Potential {
    /// F = 0 (decoupled, source-free).
    Zero,
    /// F = (c/2) sum_i (xi^i)^2, so F_i = c xi^i and F_ij = c delta_ij.
    Quadratic { c: f64 },
    /// Phase-separation coupling F = -(xi^1 xi^2)^2 / 2, n = 2.
    /// F_1 = -xi^1 (xi^2)^2 reproduces laplace u = u v^2.
    Blwz,
    /// Scalar double well F = -(1 - xi^2)^2 / 4, n = 1.
    AllenCahn,
    /// Two double wells with a quartic coupling, n = 2:
    /// F = -(1-(xi^1)^2)^2/4 - (1-(xi^2)^2)^2/4 - (kappa/2)(xi^1 xi^2)^2.
    CoupledDoubleWell { kappa: f64 },
    /// Sign-flipped two-component double well (xi_1-1)^2 xi_2^2 + (xi_2^2-1)^2,
    /// entering the system as F = -that, n = 2.
    Abg,
    /// F = -scale (1 - |xi|^2)^2: nonpositive, vanishing on the unit
    /// sphere, n = 2.
    SphereWell { scale: f64 },
    Custom(Arc<CustomPotential>),
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Potential({})", self.label())
    }
}

impl Potential {
    pub fn label(&self) -> String {
        match self {
            Potential::Zero => "zero".into(),
            Potential::Quadratic { c } => format!("quadratic c={c}"),
            Potential::Blwz => "blwz".into(),
            Potential::AllenCahn => "allen-cahn".into(),
            Potential::CoupledDoubleWell { kappa } => format!("coupled-double-well kappa={kappa}"),
            Potential::Abg => "abg".into(),
            Potential::SphereWell { scale } => format!("sphere-well scale={scale}"),
            Potential::Custom(c) => c.label.clone(),
        }
    }

    /// Component count this potential requires, None when any n works.
    pub fn required_n(&self) -> Option<usize> {
        match self {
            Potential::Zero | Potential::Quadratic { .. } => None,
            Potential::AllenCahn => Some(1),
            Potential::Blwz
            | Potential::CoupledDoubleWell { .. }
            | Potential::Abg
            | Potential::SphereWell { .. } => Some(2),
            Potential::Custom(c) => Some(c.n),
        }
    }

    pub fn value(&self, x: &[f64], xi: &[f64]) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Quadratic { c } => 0.5 * c * xi.iter().map(|v| v * v).sum::<f64>(),
            Potential::Blwz => -0.5 * (xi[0] * xi[1]).powi(2),
            Potential::AllenCahn => {
                let w = 1.0 - xi[0] * xi[0];
                -0.25 * w * w
            }
            Potential::CoupledDoubleWell { kappa } => {
                let w1 = 1.0 - xi[0] * xi[0];
                let w2 = 1.0 - xi[1] * xi[1];
                -0.25 * w1 * w1 - 0.25 * w2 * w2 - 0.5 * kappa * (xi[0] * xi[1]).powi(2)
            }
            Potential::Abg => {
                let a = (xi[0] - 1.0).powi(2) * xi[1] * xi[1];
                let b = (xi[1] * xi[1] - 1.0).powi(2);
                -(a + b)
            }
            Potential::SphereWell { scale } => {
                let w = 1.0 - xi.iter().map(|v| v * v).sum::<f64>();
                -scale * w * w
            }
            Potential::Custom(c) => (c.f)(x, xi),
        }
    }

    pub fn gradient(&self, x: &[f64], xi: &[f64], out: &mut [f64]) {
        match self {
            Potential::Zero => out.fill(0.0),
            Potential::Quadratic { c } => {
                for (o, v) in out.iter_mut().zip(xi) {
                    *o = c * v;
                }
            }
            Potential::Blwz => {
                out[0] = -xi[0] * xi[1] * xi[1];
                out[1] = -xi[1] * xi[0] * xi[0];
            }
            Potential::AllenCahn => {
                out[0] = xi[0] * (1.0 - xi[0] * xi[0]);
            }
            Potential::CoupledDoubleWell { kappa } => {
                out[0] = xi[0] * (1.0 - xi[0] * xi[0]) - kappa * xi[0] * xi[1] * xi[1];
                out[1] = xi[1] * (1.0 - xi[1] * xi[1]) - kappa * xi[1] * xi[0] * xi[0];
            }
            Potential::Abg => {
                out[0] = -2.0 * (xi[0] - 1.0) * xi[1] * xi[1];
                out[1] = -(2.0 * (xi[0] - 1.0).powi(2) * xi[1]
                    + 4.0 * xi[1] * (xi[1] * xi[1] - 1.0));
            }
            Potential::SphereWell { scale } => {
                let w = 1.0 - xi.iter().map(|v| v * v).sum::<f64>();
                for (o, v) in out.iter_mut().zip(xi) {
                    *o = 4.0 * scale * w * v;
                }
            }
            Potential::Custom(c) => (c.grad)(x, xi, out),
        }
    }

    /// Symmetric n x n Hessian in xi (row-major).
    pub fn hessian(&self, x: &[f64], xi: &[f64], out: &mut [f64]) {
        let n = xi.len();
        match self {
            Potential::Zero => out.fill(0.0),
            Potential::Quadratic { c } => {
                out.fill(0.0);
                for i in 0..n {
                    out[i * n + i] = *c;
                }
            }
            Potential::Blwz => {
                out[0] = -xi[1] * xi[1];
                out[1] = -2.0 * xi[0] * xi[1];
                out[2] = -2.0 * xi[0] * xi[1];
                out[3] = -xi[0] * xi[0];
            }
            Potential::AllenCahn => {
                out[0] = 1.0 - 3.0 * xi[0] * xi[0];
            }
            Potential::CoupledDoubleWell { kappa } => {
                out[0] = 1.0 - 3.0 * xi[0] * xi[0] - kappa * xi[1] * xi[1];
                out[1] = -2.0 * kappa * xi[0] * xi[1];
                out[2] = out[1];
                out[3] = 1.0 - 3.0 * xi[1] * xi[1] - kappa * xi[0] * xi[0];
            }
            Potential::Abg => {
                out[0] = -2.0 * xi[1] * xi[1];
                out[1] = -4.0 * (xi[0] - 1.0) * xi[1];
                out[2] = out[1];
                out[3] = -(2.0 * (xi[0] - 1.0).powi(2) + 12.0 * xi[1] * xi[1] - 4.0);
            }
            Potential::SphereWell { scale } => {
                let w = 1.0 - xi.iter().map(|v| v * v).sum::<f64>();
                for i in 0..n {
                    for j in 0..n {
                        let mut v = -8.0 * scale * xi[i] * xi[j];
                        if i == j {
                            v += 4.0 * scale * w;
                        }
                        out[i * n + j] = v;
                    }
                }
            }
            Potential::Custom(c) => match &c.hess {
                Some(h) => h(x, xi, out),
                None => fd_hessian_of_gradient(self, x, xi, out),
            },
        }
    }

    /// Checks gradient/Hessian self-consistency at seeded random points:
    /// F_ij symmetric and central differences of F_i matching F_ij.
    pub fn self_test(&self, n: usize, m: usize, samples: usize, seed: u64) -> Result<f64> {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let mut g_hi = vec![0.0; n];
        let mut g_lo = vec![0.0; n];
        let mut h = vec![0.0; n * n];
        for _ in 0..samples {
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
            let xi: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            self.hessian(&x, &xi, &mut h);
            for i in 0..n {
                for j in 0..n {
                    let asym = (h[i * n + j] - h[j * n + i]).abs();
                    if asym > 1e-9 {
                        return Err(Error::Asymmetric(asym));
                    }
                }
            }
            let xin: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            let eps = 1e-5 * (1.0 + xin);
            for j in 0..n {
                let mut hi = xi.clone();
                let mut lo = xi.clone();
                hi[j] += eps;
                lo[j] -= eps;
                self.gradient(&x, &hi, &mut g_hi);
                self.gradient(&x, &lo, &mut g_lo);
                for i in 0..n {
                    let fd = (g_hi[i] - g_lo[i]) / (2.0 * eps);
                    worst = worst.max((fd - h[i * n + j]).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Central differences of the gradient, step 1e-5 (1 + |xi|).
fn fd_hessian_of_gradient(p: &Potential, x: &[f64], xi: &[f64], out: &mut [f64]) {
    let n = xi.len();
    let xin: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let eps = 1e-5 * (1.0 + xin);
    let mut hi = vec![0.0; n];
    let mut lo = vec![0.0; n];
    let mut raw = vec![0.0; n * n];
    for j in 0..n {
        let mut xh = xi.to_vec();
        let mut xl = xi.to_vec();
        xh[j] += eps;
        xl[j] -= eps;
        p.gradient(x, &xh, &mut hi);
        p.gradient(x, &xl, &mut lo);
        for i in 0..n {
            raw[i * n + j] = (hi[i] - lo[i]) / (2.0 * eps);
        }
    }
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = 0.5 * (raw[i * n + j] + raw[j * n + i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_self_tests_pass() {
        for (p, n) in [
            (Potential::Zero, 2),
            (Potential::Quadratic { c: -1.0 }, 3),
            (Potential::Blwz, 2),
            (Potential::AllenCahn, 1),
            (Potential::CoupledDoubleWell { kappa: 0.7 }, 2),
            (Potential::Abg, 2),
            (Potential::SphereWell { scale: 1.0 }, 2),
        ] {
            let worst = p.self_test(n, 1, 200, 4).unwrap();
            assert!(worst < 2e-4, "{}: {worst}", p.label());
        }
    }

    #[test]
    fn blwz_right_hand_side() {
        let p = Potential::Blwz;
        let mut g = [0.0; 2];
        p.gradient(&[0.0], &[2.0, 3.0], &mut g);
        // F_1 = -u v^2 so that -laplace u = F_1 gives laplace u = u v^2
        assert_eq!(g[0], -2.0 * 9.0);
        assert_eq!(g[1], -3.0 * 4.0);
        let mut h = [0.0; 4];
        p.hessian(&[0.0], &[2.0, 3.0], &mut h);
        assert_eq!(h[1], -12.0); // F_12 = -2 u v
    }

    #[test]
    fn custom_fd_hessian_fallback() {
        let c = Potential::Custom(Arc::new(CustomPotential {
            label: "cubic".into(),
            n: 2,
            f: Box::new(|_x, xi| xi[0] * xi[0] * xi[1]),
            grad: Box::new(|_x, xi, out| {
                out[0] = 2.0 * xi[0] * xi[1];
                out[1] = xi[0] * xi[0];
            }),
            hess: None,
        }));
        let mut h = [0.0; 4];
        c.hessian(&[0.0], &[1.5, -0.5], &mut h);
        assert!((h[0] - 2.0 * -0.5).abs() < 1e-7);
        assert!((h[1] - 3.0).abs() < 1e-7);
        assert!((h[3] - 0.0).abs() < 1e-7);
    }
}
