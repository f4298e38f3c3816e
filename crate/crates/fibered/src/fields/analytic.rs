//! Closed-form fields with exact derivative callbacks.
//!
//! These drive the manufactured-solution oracles: geometric identity
//! checks run against exact gradients and Hessians so that formula bugs
//! are not hidden under discretization error.

use std::sync::Arc;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use crate::linalg::CubicSpline;

/// A scalar function on R^N with closed-form value, gradient and Hessian.
pub trait Analytic: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Writes the N gradient components into `out`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Writes the N*N Hessian (row-major, symmetric) into `out`.
    fn hessian(&self, x: &[f64], out: &mut [f64]);
}

/// c0 + <lin, X> + sum_k amp_k sin(<k_k, X> + phase_k)
#[derive(Debug, Clone)]
pub struct TrigPoly {
    pub dim: usize,
    pub c0: f64,
    pub lin: Vec<f64>,
    pub waves: Vec<Wave>,
}

#[derive(Debug, Clone)]
pub struct Wave {
    pub amp: f64,
    pub k: Vec<f64>,
    pub phase: f64,
}

impl TrigPoly {
    /// Seeded generic smooth field. Wavenumbers stay below `k_max` so the
    /// field is resolved on the study grids.
    pub fn random(dim: usize, rng: &mut ChaCha8Rng, waves: usize, k_max: f64) -> TrigPoly {
        let lin: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        let waves = (0..waves)
            .map(|_| Wave {
                amp: rng.random_range(0.3..1.0),
                k: (0..dim).map(|_| rng.random_range(-k_max..k_max)).collect(),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        TrigPoly {
            dim,
            c0: rng.random_range(-1.0..1.0),
            lin,
            waves,
        }
    }

    /// Adds a linear ramp, handy to keep gradients away from zero.
    pub fn with_ramp(mut self, ramp: &[f64]) -> TrigPoly {
        for (l, r) in self.lin.iter_mut().zip(ramp) {
            *l += r;
        }
        self
    }
}

impl Analytic for TrigPoly {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.c0;
        for (l, xi) in self.lin.iter().zip(x) {
            v += l * xi;
        }
        for w in &self.waves {
            let arg: f64 = w.k.iter().zip(x).map(|(k, xi)| k * xi).sum::<f64>() + w.phase;
            v += w.amp * arg.sin();
        }
        v
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.lin);
        for w in &self.waves {
            let arg: f64 = w.k.iter().zip(x).map(|(k, xi)| k * xi).sum::<f64>() + w.phase;
            let c = w.amp * arg.cos();
            for (o, k) in out.iter_mut().zip(&w.k) {
                *o += c * k;
            }
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let n = self.dim;
        for w in &self.waves {
            let arg: f64 = w.k.iter().zip(x).map(|(k, xi)| k * xi).sum::<f64>() + w.phase;
            let s = -w.amp * arg.sin();
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] += s * w.k[i] * w.k[j];
                }
            }
        }
    }
}

/// One-dimensional profile with two derivatives, the building block of
/// extended fields u(x, y) = ubar(<omega, y>).
pub trait Profile: Send + Sync {
    fn value(&self, s: f64) -> f64;
    fn d1(&self, s: f64) -> f64;
    fn d2(&self, s: f64) -> f64;
}

/// tanh(s / width)
#[derive(Debug, Clone)]
pub struct TanhProfile {
    pub width: f64,
}

impl Profile for TanhProfile {
    fn value(&self, s: f64) -> f64 {
        (s / self.width).tanh()
    }
    fn d1(&self, s: f64) -> f64 {
        let c = (s / self.width).cosh();
        1.0 / (self.width * c * c)
    }
    fn d2(&self, s: f64) -> f64 {
        let t = (s / self.width).tanh();
        -2.0 * t * (1.0 - t * t) / (self.width * self.width)
    }
}

/// slope * s + offset
#[derive(Debug, Clone)]
pub struct LinearProfile {
    pub slope: f64,
    pub offset: f64,
}

impl Profile for LinearProfile {
    fn value(&self, s: f64) -> f64 {
        self.slope * s + self.offset
    }
    fn d1(&self, _s: f64) -> f64 {
        self.slope
    }
    fn d2(&self, _s: f64) -> f64 {
        0.0
    }
}

impl Profile for CubicSpline {
    fn value(&self, s: f64) -> f64 {
        CubicSpline::value(self, s)
    }
    fn d1(&self, s: f64) -> f64 {
        CubicSpline::d1(self, s)
    }
    fn d2(&self, s: f64) -> f64 {
        CubicSpline::d2(self, s)
    }
}

/// u(x, y) = mu(x) * ubar(<omega, y>), with `omega` a unit vector of the
/// homogeneous directions and `mu` an optional fiber-base modulation.
pub struct Extended1d {
    pub dim: usize,
    pub m: usize,
    pub omega: Vec<f64>,
    pub profile: Arc<dyn Profile>,
    pub modulation: Option<Arc<dyn Analytic>>,
}

impl Extended1d {
    pub fn new(dim: usize, m: usize, omega: Vec<f64>, profile: Arc<dyn Profile>) -> Extended1d {
        assert_eq!(omega.len(), dim - m);
        Extended1d {
            dim,
            m,
            omega,
            profile,
            modulation: None,
        }
    }

    fn s(&self, x: &[f64]) -> f64 {
        self.omega
            .iter()
            .zip(&x[self.m..])
            .map(|(w, y)| w * y)
            .sum()
    }

    fn mu(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        match &self.modulation {
            None => (1.0, vec![0.0; self.m], vec![0.0; self.m * self.m]),
            Some(f) => {
                let xb = &x[..self.m];
                let mut g = vec![0.0; self.m];
                let mut h = vec![0.0; self.m * self.m];
                f.gradient(xb, &mut g);
                f.hessian(xb, &mut h);
                (f.value(xb), g, h)
            }
        }
    }
}

impl Analytic for Extended1d {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (mu, _, _) = self.mu(x);
        mu * self.profile.value(self.s(x))
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let s = self.s(x);
        let (mu, gmu, _) = self.mu(x);
        let u = self.profile.value(s);
        let du = self.profile.d1(s);
        for i in 0..self.m {
            out[i] = gmu[i] * u;
        }
        for (o, w) in out[self.m..].iter_mut().zip(&self.omega) {
            *o = mu * du * w;
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        let s = self.s(x);
        let (mu, gmu, hmu) = self.mu(x);
        let u = self.profile.value(s);
        let du = self.profile.d1(s);
        let ddu = self.profile.d2(s);
        out.fill(0.0);
        for i in 0..self.m {
            for j in 0..self.m {
                out[i * n + j] = hmu[i * self.m + j] * u;
            }
            for (j, w) in self.omega.iter().enumerate() {
                let v = gmu[i] * du * w;
                out[i * n + self.m + j] = v;
                out[(self.m + j) * n + i] = v;
            }
        }
        for (i, wi) in self.omega.iter().enumerate() {
            for (j, wj) in self.omega.iter().enumerate() {
                out[(self.m + i) * n + (self.m + j)] = mu * ddu * wi * wj;
            }
        }
    }
}

/// u(x, y) = |y|^2; level sets in y are spheres, the standard curvature
/// counter-example to one-dimensional symmetry.
#[derive(Debug, Clone)]
pub struct RadialYSquared {
    pub dim: usize,
    pub m: usize,
}

impl Analytic for RadialYSquared {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        x[self.m..].iter().map(|y| y * y).sum()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out[..self.m].fill(0.0);
        for (o, y) in out[self.m..].iter_mut().zip(&x[self.m..]) {
            *o = 2.0 * y;
        }
    }
    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        out.fill(0.0);
        for i in self.m..n {
            out[i * n + i] = 2.0;
        }
        let _ = x;
    }
}

/// Wraps another field with an orthogonal change of the y-coordinates:
/// value(x, y) = inner(x, R^T y). Used by the rotation-equivariance tests.
pub struct YRotated {
    pub inner: Arc<dyn Analytic>,
    pub m: usize,
    /// Row-major (N-m) x (N-m) orthogonal matrix R.
    pub rot: Vec<f64>,
}

impl YRotated {
    fn pullback(&self, x: &[f64]) -> Vec<f64> {
        let dy = self.inner.dim() - self.m;
        let mut out = x.to_vec();
        for i in 0..dy {
            let mut acc = 0.0;
            for j in 0..dy {
                // (R^T y)_i = sum_j R_{ji} y_j
                acc += self.rot[j * dy + i] * x[self.m + j];
            }
            out[self.m + i] = acc;
        }
        out
    }
}

impl Analytic for YRotated {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.pullback(x))
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let dy = n - self.m;
        let mut g = vec![0.0; n];
        self.inner.gradient(&self.pullback(x), &mut g);
        out[..self.m].copy_from_slice(&g[..self.m]);
        for i in 0..dy {
            let mut acc = 0.0;
            for j in 0..dy {
                acc += self.rot[i * dy + j] * g[self.m + j];
            }
            out[self.m + i] = acc;
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let dy = n - self.m;
        let mut h = vec![0.0; n * n];
        self.inner.hessian(&self.pullback(x), &mut h);
        // out = J H J^T where J = diag(I_m, R)
        let jrow = |i: usize, k: usize| -> f64 {
            if i < self.m {
                if i == k {
                    1.0
                } else {
                    0.0
                }
            } else if k < self.m {
                0.0
            } else {
                self.rot[(i - self.m) * dy + (k - self.m)]
            }
        };
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    let ja = jrow(i, a);
                    if ja == 0.0 {
                        continue;
                    }
                    for b in 0..n {
                        acc += ja * h[a * n + b] * jrow(j, b);
                    }
                }
                out[i * n + j] = acc;
            }
        }
    }
}

/// Closure-backed analytic field.
pub struct FnField {
    pub dim: usize,
    pub f: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub g: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    pub h: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
}

impl Analytic for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (self.g)(x, out)
    }
    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        (self.h)(x, out)
    }
}

/// Max deviation between the callback gradient and a central difference of
/// the callback value at `points`, step `h`. Used by the self-consistency
/// tests that gate every analytic oracle.
pub fn gradient_consistency(f: &dyn Analytic, points: &[Vec<f64>], h: f64) -> f64 {
    let n = f.dim();
    let mut worst = 0.0f64;
    let mut g = vec![0.0; n];
    for p in points {
        f.gradient(p, &mut g);
        for a in 0..n {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[a] += h;
            lo[a] -= h;
            let fd = (f.value(&hi) - f.value(&lo)) / (2.0 * h);
            worst = worst.max((fd - g[a]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn points(dim: usize, rng: &mut ChaCha8Rng, count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect()
    }

    #[test]
    fn trigpoly_callbacks_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = TrigPoly::random(3, &mut rng, 4, 1.5);
        let pts = points(3, &mut rng, 20);
        // gradient vs FD of value at two steps: second order
        let e1 = gradient_consistency(&f, &pts, 1e-3);
        let e2 = gradient_consistency(&f, &pts, 5e-4);
        assert!(e1 < 1e-5);
        assert!(e2 < e1);
    }

    #[test]
    fn extended_field_gradient_parallel_to_omega() {
        let omega = vec![0.6, 0.8];
        let f = Extended1d::new(
            3,
            1,
            omega.clone(),
            Arc::new(TanhProfile {
                width: 2f64.sqrt(),
            }),
        );
        let mut g = vec![0.0; 3];
        f.gradient(&[0.3, 1.0, -0.5], &mut g);
        assert_eq!(g[0], 0.0);
        // y-part parallel to omega
        let cross = g[1] * omega[1] - g[2] * omega[0];
        assert!(cross.abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = points(3, &mut rng, 10);
        assert!(gradient_consistency(&f, &pts, 1e-4) < 1e-6);
    }

    #[test]
    fn rotated_field_matches_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inner = Arc::new(TrigPoly::random(3, &mut rng, 3, 1.0));
        let th = 0.7f64;
        let rot = vec![th.cos(), -th.sin(), th.sin(), th.cos()];
        let f = YRotated {
            inner: inner.clone(),
            m: 1,
            rot,
        };
        let pts = points(3, &mut rng, 10);
        assert!(gradient_consistency(&f, &pts, 1e-4) < 1e-6);
        // value agrees with manual composition
        let p = &pts[0];
        let y = [p[1], p[2]];
        let ry = [
            th.cos() * y[0] + th.sin() * y[1],
            -th.sin() * y[0] + th.cos() * y[1],
        ];
        let q = vec![p[0], ry[0], ry[1]];
        assert!((f.value(p) - inner.value(&q)).abs() < 1e-14);
    }
}
