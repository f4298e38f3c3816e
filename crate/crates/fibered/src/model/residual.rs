//! The linearized flux matrix and the strong/weak/derived residuals of the
//! system.

use crate::error::{Error, Result};
use crate::fields::deriv::d1_axis;
use crate::fields::grid::Boundary;
use crate::fields::{node_weights, DerivMode, Grid, ScalarField};
use crate::linalg::SymMat;
use crate::model::{Coefficient, Problem, SolutionTuple};

/// The matrix a(x,|eta|) I + (da/dt)(x,|eta|) eta eta^T / |eta| that
/// linearizes the quasilinear flux at gradient eta. Only defined away from
/// eta = 0; callers restrict to the active region.
pub fn assemble_a(
    coef: &Coefficient,
    x: &[f64],
    eta: &[f64],
    eps_grad: f64,
) -> Result<SymMat> {
    let t: f64 = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if t < eps_grad {
        return Err(Error::DegenerateGradient {
            magnitude: t,
            threshold: eps_grad,
        });
    }
    let n = eta.len();
    let a = coef.value(x, t);
    let da = coef.dt(x, t);
    let mut m = SymMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut v = da * eta[i] * eta[j] / t;
            if i == j {
                v += a;
            }
            m.set(i, j, v);
        }
    }
    Ok(m)
}

/// Largest eigenvalue of a symmetric matrix; asymmetry beyond tolerance is
/// an input error.
pub fn largest_eigenvalue(m: &SymMat) -> Result<f64> {
    let scale = m.data.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let asym = m.max_asymmetry();
    if asym > 1e-10 * (1.0 + scale) {
        return Err(Error::Asymmetric(asym));
    }
    let (vals, _) = m.eigen();
    Ok(*vals.last().unwrap())
}

/// Gradient of raw component values at the face between `idx` and its
/// neighbor in direction +axis: exact difference along the axis, averaged
/// central differences transversally.
fn face_gradient(
    grid: &Grid,
    values: &[f64],
    d1: &[Vec<f64>],
    idx: usize,
    nb: usize,
    axis: usize,
    out: &mut [f64],
) {
    let h = grid.spacing(axis);
    for b in 0..grid.dim_total() {
        out[b] = if b == axis {
            (values[nb] - values[idx]) / h
        } else {
            0.5 * (d1[b][idx] + d1[b][nb])
        };
    }
}

/// Strong residual r_i = -div(a_i grad u^i) - F_i(x, u) by conservative
/// face-flux differencing. Returns the residual fields and the mask of
/// nodes where the residual is defined (Dirichlet end planes excluded;
/// zero-flux and periodic end planes included via reflected and wrapped
/// stencils).
pub fn strong_residual(
    problem: &Problem,
    sol: &SolutionTuple,
) -> Result<(Vec<ScalarField>, Vec<bool>)> {
    if !problem.grid.same_layout(sol.grid()) {
        return Err(Error::GridMismatch(
            "solution grid differs from problem grid".into(),
        ));
    }
    let grid = &problem.grid;
    let ntot = grid.dim_total();
    let len = grid.len();
    let mut mask = vec![true; len];
    for idx in 0..len {
        if grid.is_dirichlet_node(idx) {
            mask[idx] = false;
        }
    }
    let mut residuals = Vec::with_capacity(problem.n);
    let mut xs = vec![0.0; ntot];
    let mut gface = vec![0.0; ntot];
    let mut uvals = vec![0.0; problem.n];
    let mut fgrad = vec![0.0; problem.n];
    for i in 0..problem.n {
        let values = sol.component(i).values();
        let d1: Vec<Vec<f64>> = (0..ntot).map(|a| d1_axis(values, grid, a)).collect();
        let coef = &problem.coefficients[i];
        let mut r = vec![0.0; len];
        for idx in 0..len {
            if !mask[idx] {
                continue;
            }
            grid.coords(idx, &mut xs);
            let m = grid.dim_x();
            let mut div = 0.0;
            for axis in 0..ntot {
                let h = grid.spacing(axis);
                let pos = grid.axis_position(idx, axis);
                let nnodes = grid.axis(axis).nodes;
                let stride = grid.strides()[axis];
                let bdry = grid.axis(axis).boundary;
                // neighbor indices with periodic wrap; usize::MAX marks a
                // zero-flux face
                let right = if pos + 1 < nnodes {
                    idx + stride
                } else {
                    match bdry {
                        Boundary::Periodic => idx - (nnodes - 2) * stride,
                        Boundary::NeumannZero => usize::MAX,
                        Boundary::Dirichlet => unreachable!("masked"),
                    }
                };
                let left = if pos > 0 {
                    idx - stride
                } else {
                    match bdry {
                        Boundary::Periodic => idx + (nnodes - 2) * stride,
                        Boundary::NeumannZero => usize::MAX,
                        Boundary::Dirichlet => unreachable!("masked"),
                    }
                };
                let flux = |nb: usize, gface: &mut [f64], xs: &[f64]| -> f64 {
                    if nb == usize::MAX {
                        return 0.0;
                    }
                    face_gradient(grid, values, &d1, idx, nb, axis, gface);
                    let t = gface.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let a = coef.value(&xs[..m], t);
                    a * (values[nb] - values[idx]) / h
                };
                let qr = flux(right, &mut gface, &xs);
                let ql = flux(left, &mut gface, &xs);
                // at a zero-flux end the control volume is half-width;
                // ghost reflection doubles the interior face contribution
                let scale = if right == usize::MAX || left == usize::MAX {
                    2.0
                } else {
                    1.0
                };
                div += scale * (qr + ql) / h;
            }
            sol.values_at(idx, &mut uvals);
            problem.potential.gradient(&xs[..m], &uvals, &mut fgrad);
            r[idx] = -div - fgrad[i];
        }
        residuals.push(ScalarField::from_values(grid.clone(), r)?);
    }
    Ok((residuals, mask))
}

/// Weak residual per component:
/// integral <a_i grad u^i, grad psi^i> - integral F_i psi^i,
/// trapezoidal quadrature with node-wise finite-difference gradients.
/// Test functions must vanish on Dirichlet end planes.
pub fn weak_residual(
    problem: &Problem,
    sol: &SolutionTuple,
    psi: &[ScalarField],
) -> Result<Vec<f64>> {
    weak_residual_mode(problem, sol, psi, DerivMode::Fd)
}

pub fn weak_residual_mode(
    problem: &Problem,
    sol: &SolutionTuple,
    psi: &[ScalarField],
    mode: DerivMode,
) -> Result<Vec<f64>> {
    if psi.len() != problem.n {
        return Err(Error::DimensionMismatch(format!(
            "{} test functions for {} components",
            psi.len(),
            problem.n
        )));
    }
    let grid = &problem.grid;
    for p in psi {
        if !p.grid().same_layout(grid) {
            return Err(Error::GridMismatch("test function grid differs".into()));
        }
    }
    let psi_scale = psi.iter().map(|p| p.max_abs()).fold(0.0, f64::max);
    for p in psi {
        for idx in 0..grid.len() {
            if grid.is_dirichlet_node(idx) && p.value(idx).abs() > 1e-12 * (1.0 + psi_scale) {
                return Err(Error::HypothesisViolation(
                    "test function does not vanish on the Dirichlet boundary".into(),
                ));
            }
        }
    }
    let w = node_weights(grid);
    let m = grid.dim_x();
    let mut xs = vec![0.0; grid.dim_total()];
    let mut uvals = vec![0.0; problem.n];
    let mut fgrad = vec![0.0; problem.n];
    let mut out = vec![0.0; problem.n];
    for i in 0..problem.n {
        let gu = sol.gradient(i, mode)?;
        let gp = crate::fields::grad(&psi[i], DerivMode::Fd)?;
        let mut acc = 0.0;
        for idx in 0..grid.len() {
            grid.coords(idx, &mut xs);
            let gui = gu.at(idx);
            let t: f64 = gui.iter().map(|v| v * v).sum::<f64>().sqrt();
            let a = problem.coefficients[i].value(&xs[..m], t);
            let dotg: f64 = gui.iter().zip(gp.at(idx)).map(|(x, y)| x * y).sum();
            sol.values_at(idx, &mut uvals);
            problem.potential.gradient(&xs[..m], &uvals, &mut fgrad);
            acc += w[idx] * (a * dotg - fgrad[i] * psi[i].value(idx));
        }
        out[i] = acc;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DerivedResidualReport {
    /// Weak residual of the differentiated system per component.
    pub residuals: Vec<f64>,
    /// Nodes inside the support of psi where the gradient is degenerate
    /// and the flux term was dropped.
    pub degenerate_in_support: usize,
}

/// Weak residual of the y_j-differentiated system:
/// integral <A^i grad u^i_{y_j}, grad psi^i> - sum_k integral F_ik u^k_{y_j} psi^i.
/// `j_y` is the zero-based index among the homogeneous directions.
pub fn derived_residual(
    problem: &Problem,
    sol: &SolutionTuple,
    j_y: usize,
    psi: &[ScalarField],
    mode: DerivMode,
) -> Result<DerivedResidualReport> {
    let grid = &problem.grid;
    let m = grid.dim_x();
    let ntot = grid.dim_total();
    if j_y >= ntot - m {
        return Err(Error::Domain(format!(
            "y-direction index {j_y} out of range (N - m = {})",
            ntot - m
        )));
    }
    if psi.len() != problem.n {
        return Err(Error::DimensionMismatch(format!(
            "{} test functions for {} components",
            psi.len(),
            problem.n
        )));
    }
    let w = node_weights(grid);
    let eps = problem.eps_grad(sol);
    let mut xs = vec![0.0; ntot];
    let mut uvals = vec![0.0; problem.n];
    let mut fh = vec![0.0; problem.n * problem.n];
    let mut residuals = vec![0.0; problem.n];
    let mut degenerate = 0usize;
    let axis = m + j_y;
    // y_j derivatives of every component, needed for the coupling term
    let uyj: Vec<Vec<f64>> = (0..problem.n)
        .map(|k| match mode {
            DerivMode::Fd => Ok(d1_axis(sol.component(k).values(), grid, axis)),
            DerivMode::Analytic => {
                let g = sol.gradient(k, DerivMode::Analytic)?;
                Ok((0..grid.len()).map(|idx| g.at(idx)[axis]).collect())
            }
        })
        .collect::<Result<_>>()?;
    for i in 0..problem.n {
        let gu = sol.gradient(i, mode)?;
        // full gradient of u^i_{y_j}
        let guyj: Vec<Vec<f64>> = match mode {
            DerivMode::Fd => (0..ntot).map(|a| d1_axis(&uyj[i], grid, a)).collect(),
            DerivMode::Analytic => {
                let h = crate::fields::hess(sol.component(i), DerivMode::Analytic)?;
                (0..ntot)
                    .map(|a| {
                        (0..grid.len())
                            .map(|idx| h.at(idx)[a * ntot + axis])
                            .collect()
                    })
                    .collect()
            }
        };
        let gp = crate::fields::grad(&psi[i], DerivMode::Fd)?;
        let mut acc = 0.0;
        for idx in 0..grid.len() {
            grid.coords(idx, &mut xs);
            let psival = psi[i].value(idx);
            let gpi = gp.at(idx);
            let eta = gu.at(idx);
            let t: f64 = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
            if t >= eps {
                let amat = assemble_a(&problem.coefficients[i], &xs[..m], eta, eps)?;
                let gj: Vec<f64> = (0..ntot).map(|a| guyj[a][idx]).collect();
                let mut ag = vec![0.0; ntot];
                amat.apply(&gj, &mut ag);
                let flux: f64 = ag.iter().zip(gpi).map(|(x, y)| x * y).sum();
                acc += w[idx] * flux;
            } else if psival.abs() > 0.0 || gpi.iter().any(|v| v.abs() > 0.0) {
                degenerate += 1;
            }
            sol.values_at(idx, &mut uvals);
            problem.potential.hessian(&xs[..m], &uvals, &mut fh);
            let mut coupling = 0.0;
            for k in 0..problem.n {
                coupling += fh[i * problem.n + k] * uyj[k][idx];
            }
            acc -= w[idx] * coupling * psival;
        }
        residuals[i] = acc;
    }
    Ok(DerivedResidualReport {
        residuals,
        degenerate_in_support: degenerate,
    })
}
