//! Level-set differential geometry of a scalar field on a fibered grid.
//!
//! For fixed x and level c the regular level set L = {y : u(x,y) = c,
//! grad_y u != 0} is a smooth (N-m-1)-manifold. This module computes, node
//! by node on the active region {grad_y u != 0}:
//!
//! * the quadratic defects S, T, U built from second derivatives of u and
//!   derivatives of |grad_y u|,
//! * the tangential gradient along L,
//! * the length K of the second fundamental form of L, from the spectrum
//!   of the projected shape operator (an independent computation, never
//!   back-solved from the identities it is tested against),
//!
//! and runs the two pointwise identities tying them together:
//!
//! ```text
//! (i)  sum_j <A grad u_{y_j}, grad u_{y_j}> - <A grad|grad_y u|, grad|grad_y u|>
//!        = a U + (da/dt / |grad u|) T
//! (ii) U - S = K^2 |grad_y u|^2 + |grad_L |grad_y u||^2
//! ```

use std::io::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::deriv::d1_axis;
use crate::fields::{grad, hess, y_grad, DerivMode, Grid, MatrixField, ScalarField, VectorField};
use crate::linalg::SymMat;
use crate::model::{assemble_a, Coefficient};

/// Nodes where the y-gradient exceeds the degeneracy threshold.
#[derive(Debug, Clone)]
pub struct ActiveMask {
    pub mask: Vec<bool>,
    pub eps: f64,
    pub active_fraction: f64,
    /// Fraction of nodes with |grad_y u| in (eps, 10 eps]: too close to
    /// the threshold for pointwise claims, reported separately.
    pub near_threshold_fraction: f64,
}

impl ActiveMask {
    pub fn require(&self, idx: usize) -> Result<()> {
        if self.mask[idx] {
            Ok(())
        } else {
            Err(Error::MaskedNode(idx))
        }
    }
}

/// Default threshold: 1e-8 (1 + sup ||grad u||).
pub fn default_eps_grad(u: &ScalarField, mode: DerivMode) -> Result<f64> {
    let g = grad(u, mode)?;
    Ok(1e-8 * (1.0 + g.max_norm()))
}

pub fn active_region(
    u: &ScalarField,
    mode: DerivMode,
    eps_grad: Option<f64>,
) -> Result<ActiveMask> {
    let eps = match eps_grad {
        Some(e) => e,
        None => default_eps_grad(u, mode)?,
    };
    let yg = y_grad(u, mode)?;
    let len = u.grid().len();
    let mut mask = vec![false; len];
    let mut active = 0usize;
    let mut near = 0usize;
    for idx in 0..len {
        let g = yg.norm_at(idx);
        if g > eps {
            mask[idx] = true;
            active += 1;
            if g <= 10.0 * eps {
                near += 1;
            }
        }
    }
    Ok(ActiveMask {
        mask,
        eps,
        active_fraction: active as f64 / len as f64,
        near_threshold_fraction: near as f64 / len as f64,
    })
}

/// Precomputed derivative data for the per-node geometry kernel.
///
/// `grad_g` is the full N-gradient of |grad_y u|: the exact quotient
/// (hess . grad_y u)/|grad_y u| in analytic mode, the finite-difference
/// gradient of the smoothed magnitude sqrt(|grad_y u|^2 + eps^2) in fd
/// mode (|grad_y u| is not differentiable at its zeros).
pub struct GeometryData {
    pub grid: Arc<Grid>,
    pub mode: DerivMode,
    pub eps: f64,
    pub mask: ActiveMask,
    grad: VectorField,
    hess: MatrixField,
    grad_g: VectorField,
    y_norm: Vec<f64>,
}

impl GeometryData {
    pub fn build(u: &ScalarField, mode: DerivMode, eps_grad: Option<f64>) -> Result<GeometryData> {
        let grid = u.grid().clone();
        let n = grid.dim_total();
        let m = grid.dim_x();
        let gu = grad(u, mode)?;
        let hu = hess(u, mode)?;
        let mask = active_region(u, mode, eps_grad)?;
        let eps = mask.eps;
        let len = grid.len();
        let y_norm: Vec<f64> = (0..len)
            .map(|idx| gu.at(idx)[m..].iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let mut gg = vec![0.0; len * n];
        match mode {
            DerivMode::Analytic => {
                for idx in 0..len {
                    let g = y_norm[idx];
                    if g <= eps {
                        continue;
                    }
                    let h = hu.at(idx);
                    let gy = &gu.at(idx)[m..];
                    for a in 0..n {
                        let mut acc = 0.0;
                        for (j, gyj) in gy.iter().enumerate() {
                            acc += h[a * n + (m + j)] * gyj;
                        }
                        gg[idx * n + a] = acc / g;
                    }
                }
            }
            DerivMode::Fd => {
                let smoothed: Vec<f64> = y_norm
                    .iter()
                    .map(|&g| (g * g + eps * eps).sqrt())
                    .collect();
                for a in 0..n {
                    let da = d1_axis(&smoothed, &grid, a);
                    for idx in 0..len {
                        gg[idx * n + a] = da[idx];
                    }
                }
            }
        }
        let grad_g = VectorField::new(grid.clone(), n, gg)?;
        Ok(GeometryData {
            grid,
            mode,
            eps,
            mask,
            grad: gu,
            hess: hu,
            grad_g,
            y_norm,
        })
    }

    #[inline]
    pub fn is_active(&self, idx: usize) -> bool {
        self.mask.mask[idx]
    }

    pub fn gradient(&self, idx: usize) -> &[f64] {
        self.grad.at(idx)
    }

    pub fn hessian(&self, idx: usize) -> &[f64] {
        self.hess.at(idx)
    }

    pub fn grad_of_y_norm(&self, idx: usize) -> &[f64] {
        self.grad_g.at(idx)
    }

    pub fn y_norm(&self, idx: usize) -> f64 {
        self.y_norm[idx]
    }

    /// Unit normal nu = grad_y u / |grad_y u| of the level set.
    pub fn normal(&self, idx: usize, out: &mut [f64]) {
        let m = self.grid.dim_x();
        let g = self.y_norm[idx];
        for (o, v) in out.iter_mut().zip(&self.grad.at(idx)[m..]) {
            *o = v / g;
        }
    }

    /// The quadratic defects (S, T, U) at an active node.
    pub fn stu_at(&self, idx: usize) -> (f64, f64, f64) {
        let n = self.grid.dim_total();
        let m = self.grid.dim_x();
        let h = self.hessian(idx);
        let eta = self.gradient(idx);
        let gg = self.grad_of_y_norm(idx);
        let dy = n - m;
        // S = sum_{i<=m, j} (u_{x_i y_j})^2 - |grad_x |grad_y u||^2
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..dy {
                s += h[i * n + (m + j)].powi(2);
            }
            s -= gg[i] * gg[i];
        }
        // T = sum_j <grad u, grad u_{y_j}>^2 - <grad u, grad |grad_y u|>^2
        let mut t = 0.0;
        for j in 0..dy {
            let mut dotv = 0.0;
            for (a, e) in eta.iter().enumerate() {
                dotv += e * h[a * n + (m + j)];
            }
            t += dotv * dotv;
        }
        let dot_gg: f64 = eta.iter().zip(gg).map(|(a, b)| a * b).sum();
        t -= dot_gg * dot_gg;
        // U = sum_j |grad u_{y_j}|^2 - |grad |grad_y u||^2
        let mut u = 0.0;
        for j in 0..dy {
            for a in 0..n {
                u += h[a * n + (m + j)].powi(2);
            }
        }
        u -= gg.iter().map(|v| v * v).sum::<f64>();
        (s, t, u)
    }

    /// Principal curvatures of the level set through an active node, from
    /// the spectrum of the shape operator projected on the tangent space.
    pub fn principal_curvatures(&self, idx: usize) -> Vec<f64> {
        let n = self.grid.dim_total();
        let m = self.grid.dim_x();
        let dy = n - m;
        if dy < 2 {
            return Vec::new();
        }
        let g = self.y_norm[idx];
        let h = self.hessian(idx);
        let mut nu = vec![0.0; dy];
        self.normal(idx, &mut nu);
        // Householder basis of the tangent space nu-perp
        let q = householder_complement(&nu);
        let k = dy - 1;
        let mut msub = SymMat::zeros(k);
        for a in 0..k {
            for b in 0..k {
                let mut acc = 0.0;
                for i in 0..dy {
                    for j in 0..dy {
                        acc += q[i * k + a] * h[(m + i) * n + (m + j)] * q[j * k + b];
                    }
                }
                msub.set(a, b, -acc / g);
            }
        }
        // symmetrize rounding
        for a in 0..k {
            for b in (a + 1)..k {
                let v = 0.5 * (msub.get(a, b) + msub.get(b, a));
                msub.set(a, b, v);
                msub.set(b, a, v);
            }
        }
        let (vals, _) = msub.eigen();
        vals
    }

    /// Length of the second fundamental form: sqrt(sum k_j^2); zero by
    /// convention when the level sets are points (N - m = 1).
    pub fn curvature_length_at(&self, idx: usize) -> f64 {
        self.principal_curvatures(idx)
            .iter()
            .map(|k| k * k)
            .sum::<f64>()
            .sqrt()
    }

    /// Tangential part of a y-vector: v - <v, nu> nu.
    pub fn project_tangent(&self, idx: usize, v: &[f64], out: &mut [f64]) {
        let dy = self.grid.dim_y();
        let mut nu = vec![0.0; dy];
        self.normal(idx, &mut nu);
        let d: f64 = v.iter().zip(&nu).map(|(a, b)| a * b).sum();
        for i in 0..dy {
            out[i] = v[i] - d * nu[i];
        }
    }

    /// |grad_L |grad_y u||^2 at an active node.
    pub fn tangential_norm_grad_sq(&self, idx: usize) -> f64 {
        let m = self.grid.dim_x();
        let dy = self.grid.dim_y();
        let gy = &self.grad_of_y_norm(idx)[m..];
        let mut t = vec![0.0; dy];
        self.project_tangent(idx, gy, &mut t);
        t.iter().map(|v| v * v).sum()
    }

    /// Flux-matrix form of the level-set defect at an active node:
    /// sum_j <A grad u_{y_j}, grad u_{y_j}> - <A grad|grad_y u|, grad|grad_y u|>.
    pub fn a_form_lhs(&self, idx: usize, amat: &SymMat) -> f64 {
        let n = self.grid.dim_total();
        let m = self.grid.dim_x();
        let dy = n - m;
        let h = self.hessian(idx);
        let gg = self.grad_of_y_norm(idx);
        let mut col = vec![0.0; n];
        let mut acol = vec![0.0; n];
        let mut lhs = 0.0;
        for j in 0..dy {
            for a in 0..n {
                col[a] = h[a * n + (m + j)];
            }
            amat.apply(&col, &mut acol);
            lhs += col.iter().zip(&acol).map(|(x, y)| x * y).sum::<f64>();
        }
        amat.apply(gg, &mut acol);
        lhs -= gg.iter().zip(&acol).map(|(x, y)| x * y).sum::<f64>();
        lhs
    }

    /// Geometric form of the same defect:
    /// a (S + K^2 |grad_y u|^2 + |grad_L |grad_y u||^2) + (da/dt / |grad u|) T.
    pub fn geometric_form_lhs(&self, idx: usize, a_val: f64, da_val: f64) -> f64 {
        let (s, t, _) = self.stu_at(idx);
        let g = self.y_norm(idx);
        let kappa = self.curvature_length_at(idx);
        let tg2 = self.tangential_norm_grad_sq(idx);
        let eta = self.gradient(idx);
        let tnorm: f64 = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        a_val * (s + kappa * kappa * g * g + tg2) + da_val / tnorm * t
    }
}

/// Orthonormal basis of the complement of unit vector `nu`, as a d x (d-1)
/// row-major matrix: columns 1..d-1 of the Householder reflection that
/// exchanges e_1 with -sign(nu_1) nu.
fn householder_complement(nu: &[f64]) -> Vec<f64> {
    let d = nu.len();
    let k = d - 1;
    let s = if nu[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w: Vec<f64> = nu.to_vec();
    w[0] += s;
    let wn: f64 = w.iter().map(|v| v * v).sum();
    let mut q = vec![0.0; d * k];
    for col in 0..k {
        let e = col + 1;
        for row in 0..d {
            let id = if row == e { 1.0 } else { 0.0 };
            q[row * k + col] = id - 2.0 * w[row] * w[e] / wn;
        }
    }
    q
}

/// S, T, U fields over the active mask (zeros off-mask, raw values kept on
/// it) plus the pointwise negativity extremes.
pub struct StuFields {
    pub s: ScalarField,
    pub t: ScalarField,
    pub u: ScalarField,
    pub mask: ActiveMask,
    pub min_s: f64,
    pub min_t: f64,
}

pub fn compute_stu(u: &ScalarField, mode: DerivMode, eps_grad: Option<f64>) -> Result<StuFields> {
    let data = GeometryData::build(u, mode, eps_grad)?;
    let len = data.grid.len();
    let mut sv = vec![0.0; len];
    let mut tv = vec![0.0; len];
    let mut uv = vec![0.0; len];
    let mut min_s = f64::INFINITY;
    let mut min_t = f64::INFINITY;
    for idx in 0..len {
        if !data.is_active(idx) {
            continue;
        }
        let (s, t, uq) = data.stu_at(idx);
        sv[idx] = s;
        tv[idx] = t;
        uv[idx] = uq;
        min_s = min_s.min(s);
        min_t = min_t.min(t);
    }
    let grid = data.grid.clone();
    Ok(StuFields {
        s: ScalarField::from_values(grid.clone(), sv)?,
        t: ScalarField::from_values(grid.clone(), tv)?,
        u: ScalarField::from_values(grid, uv)?,
        mask: data.mask,
        min_s,
        min_t,
    })
}

/// Tangential gradient of G along the level sets of u at the requested
/// nodes. Errors on nodes outside the active region of u.
pub fn tangential_gradient(
    g_field: &ScalarField,
    u: &ScalarField,
    nodes: &[usize],
    mode: DerivMode,
    eps_grad: Option<f64>,
) -> Result<Vec<Vec<f64>>> {
    if !g_field.grid().same_layout(u.grid()) {
        return Err(Error::GridMismatch(
            "tangential gradient needs G and u on one grid".into(),
        ));
    }
    let data = GeometryData::build(u, mode, eps_grad)?;
    let gg = y_grad(g_field, mode)?;
    let dy = u.grid().dim_y();
    let mut out = Vec::with_capacity(nodes.len());
    for &idx in nodes {
        data.mask.require(idx)?;
        let mut t = vec![0.0; dy];
        data.project_tangent(idx, gg.at(idx), &mut t);
        out.push(t);
    }
    Ok(out)
}

/// Second-fundamental-form length as a field (zero off the active mask).
pub fn curvature_length(
    u: &ScalarField,
    mode: DerivMode,
    eps_grad: Option<f64>,
) -> Result<(ScalarField, ActiveMask)> {
    let data = GeometryData::build(u, mode, eps_grad)?;
    let len = data.grid.len();
    let mut kv = vec![0.0; len];
    for idx in 0..len {
        if data.is_active(idx) {
            kv[idx] = data.curvature_length_at(idx);
        }
    }
    let grid = data.grid.clone();
    Ok((ScalarField::from_values(grid, kv)?, data.mask))
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub sup_i: f64,
    pub l2_i: f64,
    pub sup_ii: f64,
    pub l2_ii: f64,
    pub nodes_checked: usize,
    pub active_fraction: f64,
    /// Magnitude of the largest term entering each identity, for scaling.
    pub scale_i: f64,
    pub scale_ii: f64,
    #[serde(skip)]
    pub residual_i: Vec<f64>,
    #[serde(skip)]
    pub residual_ii: Vec<f64>,
    #[serde(skip)]
    pub checked: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityOpts {
    pub eps_grad: Option<f64>,
    /// Check only nodes with |grad_y u| above this fraction of its sup;
    /// 0 checks the whole active mask (threshold 10 eps). A fixed band
    /// makes refinement studies compare the same physical points.
    pub band_fraction: f64,
    /// Skip nodes closer than this many steps to a non-periodic boundary.
    /// Composed first-derivative stencils switch between one-sided and
    /// central forms near faces and converge only at first order there;
    /// refinement studies should measure on the interior.
    pub boundary_margin: usize,
}

impl Default for IdentityOpts {
    fn default() -> Self {
        IdentityOpts {
            eps_grad: None,
            band_fraction: 0.0,
            boundary_margin: 0,
        }
    }
}

fn within_margin(grid: &Grid, idx: usize, margin: usize) -> bool {
    if margin == 0 {
        return false;
    }
    for a in 0..grid.dim_total() {
        if grid.axis(a).boundary == crate::fields::Boundary::Periodic {
            continue;
        }
        let pos = grid.axis_position(idx, a);
        let last = grid.axis(a).nodes - 1;
        if pos < margin || pos > last - margin {
            return true;
        }
    }
    false
}

/// Executable check of the two pointwise identities over the active mask.
pub fn identity_check(
    u: &ScalarField,
    coef: &Coefficient,
    mode: DerivMode,
    opts: IdentityOpts,
) -> Result<IdentityReport> {
    let data = GeometryData::build(u, mode, opts.eps_grad)?;
    let grid = data.grid.clone();
    let n = grid.dim_total();
    let m = grid.dim_x();
    let dy = n - m;
    let len = grid.len();
    let gmax = (0..len).fold(0.0f64, |a, i| a.max(data.y_norm(i)));
    let floor = (10.0 * data.eps).max(opts.band_fraction * gmax);
    let mut res_i = vec![0.0; len];
    let mut res_ii = vec![0.0; len];
    let mut checked = vec![false; len];
    let mut sup_i = 0.0f64;
    let mut sup_ii = 0.0f64;
    let mut sq_i = 0.0;
    let mut sq_ii = 0.0;
    let mut scale_i = 0.0f64;
    let mut scale_ii = 0.0f64;
    let mut count = 0usize;
    let mut xs = vec![0.0; n];
    let _ = dy;
    for idx in 0..len {
        if !data.is_active(idx) || data.y_norm(idx) <= floor {
            continue;
        }
        if within_margin(&grid, idx, opts.boundary_margin) {
            continue;
        }
        grid.coords(idx, &mut xs);
        let eta = data.gradient(idx).to_vec();
        let tnorm: f64 = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        let amat = assemble_a(coef, &xs[..m], &eta, data.eps)?;
        // identity (i)
        let lhs1 = data.a_form_lhs(idx, &amat);
        let (s, t, uq) = data.stu_at(idx);
        let a_val = coef.value(&xs[..m], tnorm);
        let da_val = coef.dt(&xs[..m], tnorm);
        let rhs1 = a_val * uq + da_val / tnorm * t;
        let r1 = (lhs1 - rhs1).abs();
        // identity (ii)
        let g = data.y_norm(idx);
        let kappa = data.curvature_length_at(idx);
        let tg2 = data.tangential_norm_grad_sq(idx);
        let lhs2 = uq - s;
        let rhs2 = kappa * kappa * g * g + tg2;
        let r2 = (lhs2 - rhs2).abs();
        res_i[idx] = r1;
        res_ii[idx] = r2;
        checked[idx] = true;
        sup_i = sup_i.max(r1);
        sup_ii = sup_ii.max(r2);
        sq_i += r1 * r1;
        sq_ii += r2 * r2;
        scale_i = scale_i.max(lhs1.abs()).max(rhs1.abs());
        scale_ii = scale_ii.max(lhs2.abs()).max(rhs2.abs());
        count += 1;
    }
    Ok(IdentityReport {
        sup_i,
        l2_i: (sq_i / count.max(1) as f64).sqrt(),
        sup_ii,
        l2_ii: (sq_ii / count.max(1) as f64).sqrt(),
        nodes_checked: count,
        active_fraction: data.mask.active_fraction,
        scale_i,
        scale_ii,
        residual_i: res_i,
        residual_ii: res_ii,
        checked,
    })
}

/// Per-node geometry table (coordinates, S, T, U, K) exported as CSV for
/// external plotting.
pub fn export_bundle_csv(
    u: &ScalarField,
    mode: DerivMode,
    eps_grad: Option<f64>,
    path: &std::path::Path,
) -> Result<()> {
    let data = GeometryData::build(u, mode, eps_grad)?;
    let grid = &data.grid;
    let n = grid.dim_total();
    let mut out = std::fs::File::create(path)?;
    let cols: Vec<String> = (0..n).map(|a| format!("x{a}")).collect();
    writeln!(out, "{},S,T,U,K", cols.join(","))?;
    let mut xs = vec![0.0; n];
    for idx in 0..grid.len() {
        if !data.is_active(idx) {
            continue;
        }
        grid.coords(idx, &mut xs);
        let (s, t, uq) = data.stu_at(idx);
        let k = data.curvature_length_at(idx);
        let coords: Vec<String> = xs.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{},{s},{t},{uq},{k}", coords.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::analytic::{
        Extended1d, LinearProfile, RadialYSquared, TanhProfile, TrigPoly, YRotated,
    };
    use crate::fields::{make_grid, sample, Boundary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid3(nodes: usize, half: f64) -> Arc<Grid> {
        make_grid(
            &[[-half, half], [-half, half], [-half, half]],
            &[nodes, nodes, nodes],
            1,
            &[
                Boundary::Dirichlet,
                Boundary::Dirichlet,
                Boundary::Dirichlet,
            ],
        )
        .unwrap()
    }

    #[test]
    fn active_mask_linear_and_x_only() {
        let g = grid3(7, 1.0);
        let lin = sample(
            Arc::new(Extended1d::new(
                3,
                1,
                vec![0.6, 0.8],
                Arc::new(LinearProfile {
                    slope: 1.0,
                    offset: 0.0,
                }),
            )),
            g.clone(),
        )
        .unwrap();
        let mask = active_region(&lin, DerivMode::Analytic, None).unwrap();
        assert_eq!(mask.active_fraction, 1.0);
        // field depending only on x
        let xonly = sample(
            Arc::new(crate::fields::analytic::FnField {
                dim: 3,
                f: Box::new(|x: &[f64]| x[0] * x[0]),
                g: Box::new(|x, out| {
                    out[0] = 2.0 * x[0];
                    out[1] = 0.0;
                    out[2] = 0.0;
                }),
                h: Box::new(|_, out| {
                    out.fill(0.0);
                    out[0] = 2.0;
                }),
            }),
            g,
        )
        .unwrap();
        let mask = active_region(&xonly, DerivMode::Analytic, None).unwrap();
        assert_eq!(mask.active_fraction, 0.0);
    }

    #[test]
    fn tanh_kink_mask_full_with_tail_report() {
        let g = make_grid(
            &[[-1.0, 1.0], [-20.0, 20.0]],
            &[5, 81],
            1,
            &[Boundary::Dirichlet, Boundary::Dirichlet],
        )
        .unwrap();
        let u = sample(
            Arc::new(Extended1d::new(
                2,
                1,
                vec![1.0],
                Arc::new(TanhProfile {
                    width: 2f64.sqrt(),
                }),
            )),
            g,
        )
        .unwrap();
        // sech^2(20/sqrt 2)/sqrt 2 ~ 4e-13 < 1e-8: the far tail is masked out
        let mask = active_region(&u, DerivMode::Analytic, Some(1e-8)).unwrap();
        assert!(mask.active_fraction < 1.0);
        assert!(mask.active_fraction > 0.5);
        // with a tiny threshold everything is active (gradient never exactly 0)
        let mask_all = active_region(&u, DerivMode::Analytic, Some(1e-16)).unwrap();
        assert_eq!(mask_all.active_fraction, 1.0);
    }

    #[test]
    fn stu_vanish_for_one_dimensional_profiles() {
        let g = grid3(9, 2.0);
        for omega in [vec![1.0, 0.0], vec![0.6, 0.8]] {
            let u = sample(
                Arc::new(Extended1d::new(
                    3,
                    1,
                    omega,
                    Arc::new(TanhProfile { width: 1.0 }),
                )),
                g.clone(),
            )
            .unwrap();
            let stu = compute_stu(&u, DerivMode::Analytic, None).unwrap();
            assert!(stu.s.max_abs() < 1e-12);
            assert!(stu.t.max_abs() < 1e-12);
            assert!(stu.u.max_abs() < 1e-12);
        }
    }

    #[test]
    fn stu_nonnegative_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = grid3(7, 2.0);
        for _ in 0..50 {
            let u = sample(Arc::new(TrigPoly::random(3, &mut rng, 4, 1.3)), g.clone()).unwrap();
            let stu = compute_stu(&u, DerivMode::Analytic, None).unwrap();
            assert!(stu.min_s >= -1e-10, "S = {}", stu.min_s);
            assert!(stu.min_t >= -1e-10, "T = {}", stu.min_t);
        }
    }

    #[test]
    fn tangential_gradient_orthogonal_and_annihilates_u() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = grid3(7, 2.0);
        let u = sample(Arc::new(TrigPoly::random(3, &mut rng, 4, 1.2)), g.clone()).unwrap();
        let gfield = sample(Arc::new(TrigPoly::random(3, &mut rng, 3, 1.0)), g.clone()).unwrap();
        let data = GeometryData::build(&u, DerivMode::Analytic, None).unwrap();
        let nodes: Vec<usize> = (0..g.len()).filter(|&i| data.is_active(i)).collect();
        let tg = tangential_gradient(&gfield, &u, &nodes, DerivMode::Analytic, None).unwrap();
        let ygu = y_grad(&u, DerivMode::Analytic).unwrap();
        let ygg = y_grad(&gfield, DerivMode::Analytic).unwrap();
        for (t, &idx) in tg.iter().zip(&nodes) {
            let dot: f64 = t.iter().zip(ygu.at(idx)).map(|(a, b)| a * b).sum();
            let bound = (1e-12 * ygg.norm_at(idx) * ygu.norm_at(idx)).max(1e-14);
            assert!(dot.abs() <= bound);
        }
        // grad_L applied to u itself gives zero
        let tg_u = tangential_gradient(&u, &u, &nodes, DerivMode::Analytic, None).unwrap();
        for t in &tg_u {
            assert!(t.iter().all(|v| v.abs() < 1e-12));
        }
        // G independent of y gives zero
        let xonly = sample(
            Arc::new(crate::fields::analytic::FnField {
                dim: 3,
                f: Box::new(|x: &[f64]| x[0].sin()),
                g: Box::new(|x, out| {
                    out.fill(0.0);
                    out[0] = x[0].cos();
                }),
                h: Box::new(|x, out| {
                    out.fill(0.0);
                    out[0] = -x[0].sin();
                }),
            }),
            g.clone(),
        )
        .unwrap();
        let tg_x = tangential_gradient(&xonly, &u, &nodes, DerivMode::Analytic, None).unwrap();
        for t in &tg_x {
            assert!(t.iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn tangential_gradient_matches_the_angular_derivative_on_circles() {
        // radial u: level sets are circles; for G = y_1 = r cos(theta) the
        // tangential gradient is the angular derivative -sin(theta) along
        // the unit tangent (-sin, cos) -- computed here from the angle as
        // an independent route
        let g = grid3(9, 2.0);
        let u = sample(Arc::new(RadialYSquared { dim: 3, m: 1 }), g.clone()).unwrap();
        let gfield = sample(
            Arc::new(crate::fields::analytic::FnField {
                dim: 3,
                f: Box::new(|x: &[f64]| x[1]),
                g: Box::new(|_, out| {
                    out.fill(0.0);
                    out[1] = 1.0;
                }),
                h: Box::new(|_, out| out.fill(0.0)),
            }),
            g.clone(),
        )
        .unwrap();
        let data = GeometryData::build(&u, DerivMode::Analytic, None).unwrap();
        let nodes: Vec<usize> = (0..g.len()).filter(|&i| data.is_active(i)).collect();
        let tg = tangential_gradient(&gfield, &u, &nodes, DerivMode::Analytic, None).unwrap();
        for (t, &idx) in tg.iter().zip(&nodes) {
            let c = g.coords_vec(idx);
            let theta = c[2].atan2(c[1]);
            let want = [
                -theta.sin() * -theta.sin(),
                -theta.sin() * theta.cos(),
            ];
            assert!((t[0] - want[0]).abs() < 1e-12, "{t:?} vs {want:?}");
            assert!((t[1] - want[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn masked_node_access_is_an_error() {
        let g = grid3(7, 1.0);
        let xonly = sample(
            Arc::new(crate::fields::analytic::FnField {
                dim: 3,
                f: Box::new(|x: &[f64]| x[0]),
                g: Box::new(|_, out| {
                    out.fill(0.0);
                    out[0] = 1.0;
                }),
                h: Box::new(|_, out| out.fill(0.0)),
            }),
            g.clone(),
        )
        .unwrap();
        let err =
            tangential_gradient(&xonly, &xonly, &[0], DerivMode::Analytic, None).unwrap_err();
        assert!(matches!(err, Error::MaskedNode(0)));
    }

    #[test]
    fn curvature_of_hyperplane_sphere_and_cylinder() {
        let g = make_grid(
            &[[-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0]],
            &[5, 7, 7, 7],
            1,
            &[
                Boundary::Dirichlet,
                Boundary::Dirichlet,
                Boundary::Dirichlet,
                Boundary::Dirichlet,
            ],
        )
        .unwrap();
        // hyperplane level sets: K = 0
        let w = 3f64.sqrt().recip();
        let plane = sample(
            Arc::new(Extended1d::new(
                4,
                1,
                vec![w, w, w],
                Arc::new(LinearProfile {
                    slope: 2.0,
                    offset: 0.3,
                }),
            )),
            g.clone(),
        )
        .unwrap();
        let (k, _) = curvature_length(&plane, DerivMode::Analytic, None).unwrap();
        assert!(k.max_abs() < 1e-12);

        // spheres in 3D y-space: two curvatures 1/r, K = sqrt(2)/r
        let rad = sample(Arc::new(RadialYSquared { dim: 4, m: 1 }), g.clone()).unwrap();
        let data = GeometryData::build(&rad, DerivMode::Analytic, None).unwrap();
        let mut xs = [0.0; 4];
        for idx in 0..g.len() {
            if !data.is_active(idx) {
                continue;
            }
            g.coords(idx, &mut xs);
            let r: f64 = xs[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if r < 0.3 {
                continue;
            }
            let kv = data.curvature_length_at(idx);
            let want = 2f64.sqrt() / r;
            assert!((kv - want).abs() < 1e-10 * (1.0 + want), "{kv} vs {want}");
        }

        // cylinder level sets u = y1^2 + y2^2 in 3D y-space: K = 1/r,
        // one vanishing principal curvature
        let cyl = sample(
            Arc::new(crate::fields::analytic::FnField {
                dim: 4,
                f: Box::new(|x: &[f64]| x[1] * x[1] + x[2] * x[2]),
                g: Box::new(|x, out| {
                    out.fill(0.0);
                    out[1] = 2.0 * x[1];
                    out[2] = 2.0 * x[2];
                }),
                h: Box::new(|_, out| {
                    out.fill(0.0);
                    out[4 + 1] = 2.0;
                    out[2 * 4 + 2] = 2.0;
                }),
            }),
            g.clone(),
        )
        .unwrap();
        let datac = GeometryData::build(&cyl, DerivMode::Analytic, None).unwrap();
        for idx in 0..g.len() {
            if !datac.is_active(idx) {
                continue;
            }
            g.coords(idx, &mut xs);
            let r = (xs[1] * xs[1] + xs[2] * xs[2]).sqrt();
            if r < 0.3 {
                continue;
            }
            let ks = datac.principal_curvatures(idx);
            let kv = datac.curvature_length_at(idx);
            assert!((kv - 1.0 / r).abs() < 1e-10 * (1.0 + 1.0 / r));
            let mut sorted: Vec<f64> = ks.iter().map(|k| k.abs()).collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!(sorted[0] < 1e-10);
        }
    }

    #[test]
    fn identity_check_radial_plus_x_square() {
        // u = |y|^2 + x^2 in R^1 x R^2, constant coefficient
        let g = grid3(9, 2.0);
        let u = sample(
            Arc::new(crate::fields::analytic::FnField {
                dim: 3,
                f: Box::new(|x: &[f64]| x[1] * x[1] + x[2] * x[2] + x[0] * x[0]),
                g: Box::new(|x, out| {
                    out[0] = 2.0 * x[0];
                    out[1] = 2.0 * x[1];
                    out[2] = 2.0 * x[2];
                }),
                h: Box::new(|_, out| {
                    out.fill(0.0);
                    out[0] = 2.0;
                    out[4] = 2.0;
                    out[8] = 2.0;
                }),
            }),
            g,
        )
        .unwrap();
        let rep = identity_check(
            &u,
            &Coefficient::constant(),
            DerivMode::Analytic,
            IdentityOpts::default(),
        )
        .unwrap();
        assert!(rep.sup_ii <= 1e-10, "identity (ii) residual {}", rep.sup_ii);
        assert!(rep.sup_i <= 1e-10);
    }

    #[test]
    fn identity_check_one_dimensional_profile_all_terms_vanish() {
        let g = grid3(7, 2.0);
        let u = sample(
            Arc::new(Extended1d::new(
                3,
                1,
                vec![0.8, 0.6],
                Arc::new(TanhProfile { width: 1.0 }),
            )),
            g,
        )
        .unwrap();
        let rep = identity_check(
            &u,
            &Coefficient::p_power(3.0).unwrap(),
            DerivMode::Analytic,
            IdentityOpts::default(),
        )
        .unwrap();
        // both sides of both identities vanish for one-dimensional fields
        assert!(rep.scale_ii < 1e-12);
        assert!(rep.sup_i < 1e-12);
        assert!(rep.sup_ii < 1e-12);
    }

    #[test]
    fn identity_check_random_fields_p_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = grid3(7, 2.0);
        let coef = Coefficient::p_power(3.0).unwrap();
        for _ in 0..10 {
            let u = sample(Arc::new(TrigPoly::random(3, &mut rng, 4, 1.2)), g.clone()).unwrap();
            let rep =
                identity_check(&u, &coef, DerivMode::Analytic, IdentityOpts::default()).unwrap();
            let scale = rep.scale_i.max(rep.scale_ii).max(1.0);
            assert!(rep.sup_i <= 1e-8 * scale, "{} vs scale {}", rep.sup_i, scale);
            assert!(rep.sup_ii <= 1e-8 * scale);
        }
    }

    #[test]
    fn identity_check_with_base_modulated_coefficient() {
        // the fibered case proper: a(x, t) = alpha(x) t^{p-2} with alpha
        // varying along the base; both identities stay exact pointwise
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = grid3(7, 2.0);
        let coef = crate::model::Coefficient::x_modulated(
            2.5,
            crate::model::AlphaProfile {
                base: 2.0,
                amp: 0.7,
                freq: 1.3,
            },
        )
        .unwrap();
        for _ in 0..5 {
            let u = sample(Arc::new(TrigPoly::random(3, &mut rng, 4, 1.2)), g.clone()).unwrap();
            let rep =
                identity_check(&u, &coef, DerivMode::Analytic, IdentityOpts::default()).unwrap();
            let scale = rep.scale_i.max(rep.scale_ii).max(1.0);
            assert!(rep.sup_i <= 1e-10 * scale, "{} vs {scale}", rep.sup_i);
            assert!(rep.sup_ii <= 1e-10 * scale);
        }
    }

    #[test]
    fn identity_check_fd_mode_refines_at_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        // a y-ramp keeps grad_y u away from zero: |grad_y u| degenerates at
        // its zeros (the magnitude has a kink there) and pointwise finite
        // differences of it do not converge across the kink
        let tp = Arc::new(TrigPoly::random(3, &mut rng, 3, 1.0).with_ramp(&[0.0, 5.0, 4.0]));
        let run = |nodes: usize| -> IdentityReport {
            let g = grid3(nodes, 2.0);
            let u = sample(tp.clone(), g).unwrap();
            identity_check(
                &u,
                &Coefficient::constant(),
                DerivMode::Fd,
                IdentityOpts {
                    eps_grad: None,
                    band_fraction: 0.0,
                    boundary_margin: 2,
                },
            )
            .unwrap()
        };
        let coarse = run(17);
        let fine = run(33);
        // compare on the coarse nodes (a subset of the fine grid)
        let gc = grid3(17, 2.0);
        let gf = grid3(33, 2.0);
        let mut worst_c = 0.0f64;
        let mut worst_f = 0.0f64;
        for idx in 0..gc.len() {
            let mut mi = [0usize; 3];
            gc.multi_index(idx, &mut mi);
            let fid = gf.node_index(&[2 * mi[0], 2 * mi[1], 2 * mi[2]]);
            if coarse.checked[idx] && fine.checked[fid] {
                worst_c = worst_c
                    .max(coarse.residual_i[idx])
                    .max(coarse.residual_ii[idx]);
                worst_f = worst_f.max(fine.residual_i[fid]).max(fine.residual_ii[fid]);
            }
        }
        let order = (worst_c / worst_f).log2();
        assert!(order > 1.6, "observed order {order}");
    }

    #[test]
    fn rotation_equivariance_of_scalar_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let inner = Arc::new(TrigPoly::random(3, &mut rng, 4, 1.1));
        // 90-degree rotation maps the symmetric y-grid onto itself
        let rot = vec![0.0, -1.0, 1.0, 0.0];
        let g = grid3(9, 2.0);
        let u = sample(inner.clone(), g.clone()).unwrap();
        let ur = sample(
            Arc::new(YRotated { inner, m: 1, rot }),
            g.clone(),
        )
        .unwrap();
        let du = GeometryData::build(&u, DerivMode::Analytic, Some(1e-8)).unwrap();
        let dr = GeometryData::build(&ur, DerivMode::Analytic, Some(1e-8)).unwrap();
        let mut mi = [0usize; 3];
        for idx in 0..g.len() {
            g.multi_index(idx, &mut mi);
            // u_rot(x, y) = u(x, R^T y); R^T (y1, y2) = (y2, -y1):
            // node (i, j, k) pulls back to y-indices (k, 8 - j)
            let src = g.node_index(&[mi[0], mi[2], 8 - mi[1]]);
            if !dr.is_active(idx) || !du.is_active(src) {
                continue;
            }
            let (s1, t1, u1) = dr.stu_at(idx);
            let (s2, t2, u2) = du.stu_at(src);
            let k1 = dr.curvature_length_at(idx);
            let k2 = du.curvature_length_at(src);
            let tol = 1e-10 * (1.0 + s2.abs() + t2.abs() + u2.abs());
            assert!((s1 - s2).abs() < tol);
            assert!((t1 - t2).abs() < tol);
            assert!((u1 - u2).abs() < tol);
            assert!((k1 - k2).abs() < 1e-9 * (1.0 + k2));
        }
    }
}

