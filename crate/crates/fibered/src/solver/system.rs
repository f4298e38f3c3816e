//! Discrete Newton and gradient-flow drivers.
//!
//! The linear algebra runs on the finite-volume weighted form: node
//! weights w (trapezoid) symmetrize the flux operator including zero-flux
//! and periodic end planes, so conjugate gradients applies. The Jacobian
//! freezes the flux coefficient a(x, |grad u|) at the current iterate and
//! keeps the exact potential Hessian; for a constant coefficient this is
//! the exact Jacobian.

use crate::error::{Error, Result};
use crate::fields::deriv::d1_axis;
use crate::fields::grid::Boundary;
use crate::fields::{Grid, ScalarField};
use crate::linalg::{cg_solve, Csr};
use crate::model::{energy, strong_residual, Problem, SolutionTuple};
use crate::solver::{ConvergenceLog, LogEntry, SolverConfig};

pub(crate) struct DofMap {
    /// dof index per (component, node), usize::MAX when pinned.
    map: Vec<usize>,
    #[allow(dead_code)]
    n_comp: usize,
    len: usize,
    pub(crate) n_dof: usize,
}

impl DofMap {
    pub(crate) fn build(grid: &Grid, n_comp: usize) -> DofMap {
        let len = grid.len();
        let mut map = vec![usize::MAX; n_comp * len];
        let mut next = 0;
        for c in 0..n_comp {
            for idx in 0..len {
                if !grid.is_dirichlet_node(idx) && !is_periodic_alias(grid, idx) {
                    map[c * len + idx] = next;
                    next += 1;
                }
            }
        }
        DofMap {
            map,
            n_comp,
            len,
            n_dof: next,
        }
    }

    #[inline]
    pub(crate) fn dof(&self, comp: usize, node: usize) -> usize {
        self.map[comp * self.len + node]
    }
}

/// On periodic axes the last plane aliases the first; it never owns a dof.
pub(crate) fn is_periodic_alias(grid: &Grid, idx: usize) -> bool {
    for a in 0..grid.dim_total() {
        if grid.axis(a).boundary == Boundary::Periodic
            && grid.axis_position(idx, a) == grid.axis(a).nodes - 1
        {
            return true;
        }
    }
    false
}

/// Canonical node of a periodic alias (identity for everything else).
pub(crate) fn canonical(grid: &Grid, idx: usize) -> usize {
    let mut out = idx;
    for a in 0..grid.dim_total() {
        if grid.axis(a).boundary == Boundary::Periodic {
            let pos = grid.axis_position(out, a);
            if pos == grid.axis(a).nodes - 1 {
                out -= pos * grid.strides()[a];
            }
        }
    }
    out
}

/// Per-axis cell width: trapezoid halves at non-periodic ends, the full
/// spacing everywhere on periodic axes (canonical plane owns the seam).
pub(crate) fn axis_weight(grid: &Grid, axis: usize, pos: usize) -> f64 {
    let h = grid.spacing(axis);
    if grid.axis(axis).boundary == Boundary::Periodic {
        return h;
    }
    if pos == 0 || pos == grid.axis(axis).nodes - 1 {
        0.5 * h
    } else {
        h
    }
}

/// Control-volume node weights for the solver's weighted form.
pub(crate) fn solver_weights(grid: &Grid) -> Vec<f64> {
    let n = grid.dim_total();
    let mut w = vec![1.0; grid.len()];
    for a in 0..n {
        for (idx, wi) in w.iter_mut().enumerate() {
            *wi *= axis_weight(grid, a, grid.axis_position(idx, a));
        }
    }
    w
}

/// Weight of a face between neighbors along `axis`: the product of the
/// transverse cell widths times the axis spacing.
pub(crate) fn face_weight(grid: &Grid, w: &[f64], idx: usize, axis: usize) -> f64 {
    // w[idx] = prod_a w_a; divide out the axis factor
    let wa = axis_weight(grid, axis, grid.axis_position(idx, axis));
    w[idx] / wa * grid.spacing(axis)
}

/// Assembles the weighted flux stiffness K_flux (frozen coefficients) and
/// the weighted potential coupling; K = K_flux - W F'' is the weighted
/// Jacobian of the residual.
fn assemble_jacobian(
    problem: &Problem,
    values: &[Vec<f64>],
    dofs: &DofMap,
    include_potential: bool,
) -> Csr {
    let grid = &problem.grid;
    let ntot = grid.dim_total();
    let m = grid.dim_x();
    let w = solver_weights(grid);
    let nn = problem.n;
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut xs = vec![0.0; ntot];
    let mut gface = vec![0.0; ntot];
    for i in 0..nn {
        let d1: Vec<Vec<f64>> = (0..ntot)
            .map(|a| d1_axis(&values[i], grid, a))
            .collect();
        for axis in 0..ntot {
            let h = grid.spacing(axis);
            let nnodes = grid.axis(axis).nodes;
            let stride = grid.strides()[axis];
            // one face per adjacent pair; on periodic axes the face into the
            // alias plane is the wrap face onto the first plane
            for idx in 0..grid.len() {
                let pos = grid.axis_position(idx, axis);
                if pos + 1 >= nnodes || is_periodic_alias(grid, idx) {
                    continue;
                }
                let nb_raw = idx + stride;
                let nb = canonical(grid, nb_raw);
                grid.coords(idx, &mut xs);
                // face coefficient from the frozen gradient
                for b in 0..ntot {
                    gface[b] = if b == axis {
                        (values[i][nb_raw] - values[i][idx]) / h
                    } else {
                        0.5 * (d1[b][idx] + d1[b][nb_raw])
                    };
                }
                let t = gface.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut xf = xs[..m].to_vec();
                if axis < m {
                    xf[axis] += 0.5 * h;
                }
                let a = problem.coefficients[i].value(&xf, t);
                let c = face_weight(grid, &w, idx, axis) * a / (h * h);
                let dp = dofs.dof(i, idx);
                let dq = dofs.dof(i, nb);
                if dp != usize::MAX {
                    trips.push((dp, dp, c));
                    if dq != usize::MAX {
                        trips.push((dp, dq, -c));
                    }
                }
                if dq != usize::MAX {
                    trips.push((dq, dq, c));
                    if dp != usize::MAX {
                        trips.push((dq, dp, -c));
                    }
                }
            }
        }
    }
    if include_potential {
        let mut uvals = vec![0.0; nn];
        let mut fh = vec![0.0; nn * nn];
        for idx in 0..grid.len() {
            if is_periodic_alias(grid, idx) {
                continue;
            }
            grid.coords(idx, &mut xs);
            for (c, uv) in uvals.iter_mut().enumerate() {
                *uv = values[c][idx];
            }
            problem.potential.hessian(&xs[..m], &uvals, &mut fh);
            for i in 0..nn {
                let di = dofs.dof(i, idx);
                if di == usize::MAX {
                    continue;
                }
                for j in 0..nn {
                    let dj = dofs.dof(j, idx);
                    if dj == usize::MAX {
                        continue;
                    }
                    let v = -w[idx] * fh[i * nn + j];
                    if v != 0.0 {
                        trips.push((di, dj, v));
                    }
                }
            }
        }
    }
    Csr::from_coo(dofs.n_dof, trips)
}

fn values_of(sol: &SolutionTuple) -> Vec<Vec<f64>> {
    sol.components()
        .iter()
        .map(|c| c.values().to_vec())
        .collect()
}

fn tuple_from(grid: &std::sync::Arc<Grid>, values: &[Vec<f64>]) -> Result<SolutionTuple> {
    SolutionTuple::new(
        values
            .iter()
            .map(|v| ScalarField::from_values(grid.clone(), sync_aliases(grid, v)))
            .collect::<Result<_>>()?,
    )
}

/// Copies canonical values onto periodic alias planes.
fn sync_aliases(grid: &Grid, v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    for idx in 0..grid.len() {
        let c = canonical(grid, idx);
        if c != idx {
            out[idx] = out[c];
        }
    }
    out
}

/// Weighted residual vector over dofs, plus its sup norm.
fn weighted_residual(
    problem: &Problem,
    sol: &SolutionTuple,
    dofs: &DofMap,
) -> Result<(Vec<f64>, f64)> {
    let (r, mask) = strong_residual(problem, sol)?;
    let w = solver_weights(&problem.grid);
    let mut out = vec![0.0; dofs.n_dof];
    let mut sup = 0.0f64;
    for i in 0..problem.n {
        for idx in 0..problem.grid.len() {
            let d = dofs.dof(i, idx);
            if d == usize::MAX {
                continue;
            }
            let v = r[i].value(idx);
            if mask[idx] {
                sup = sup.max(v.abs());
                out[d] = w[idx] * v;
            }
        }
    }
    Ok((out, sup))
}

pub fn newton_solve(
    problem: &Problem,
    init: SolutionTuple,
    config: &SolverConfig,
) -> Result<(SolutionTuple, ConvergenceLog)> {
    let grid = init.grid().clone();
    let dofs = DofMap::build(&grid, problem.n);
    let mut values = values_of(&init);
    for v in values.iter_mut() {
        *v = sync_aliases(&grid, v);
    }
    let mut entries = Vec::new();
    let mut mu = config.step; // Levenberg shift, adapted multiplicatively
    let mut sol = tuple_from(&grid, &values)?;
    let (mut rw, mut sup) = weighted_residual(problem, &sol, &dofs)?;
    let mut iter = config.start_iteration;
    let mut converged = sup <= config.residual_tol;
    while !converged && iter < config.start_iteration + config.max_iterations {
        let k = assemble_jacobian(problem, &values, &dofs, true);
        let diag = k.diagonal();
        let dscale: Vec<f64> = diag.iter().map(|d| d.abs().max(1e-12)).collect();
        let mut delta = vec![0.0; dofs.n_dof];
        let mut accepted = false;
        for _attempt in 0..12 {
            delta.iter_mut().for_each(|d| *d = 0.0);
            let apply = |x: &[f64], y: &mut [f64]| {
                k.apply(x, y);
                for ((yi, xi), di) in y.iter_mut().zip(x).zip(&dscale) {
                    *yi += mu * di * xi;
                }
            };
            let rhs: Vec<f64> = rw.iter().map(|v| -v).collect();
            let pre: Vec<f64> = diag
                .iter()
                .zip(&dscale)
                .map(|(d, s)| (d + mu * s).abs().max(1e-12))
                .collect();
            let out = cg_solve(apply, &rhs, &mut delta, Some(&pre), 1e-10, 20 * dofs.n_dof);
            if out.indefinite || !out.converged {
                mu = (mu * 10.0).max(1e-8);
                continue;
            }
            // backtracking on the residual sup norm
            let mut lambda = 1.0;
            for _ in 0..14 {
                let mut trial = values.clone();
                for i in 0..problem.n {
                    for idx in 0..grid.len() {
                        let d = dofs.dof(i, idx);
                        if d != usize::MAX {
                            trial[i][idx] += lambda * delta[d];
                        }
                    }
                }
                for v in trial.iter_mut() {
                    *v = sync_aliases(&grid, v);
                }
                let trial_sol = tuple_from(&grid, &trial)?;
                let (trw, tsup) = weighted_residual(problem, &trial_sol, &dofs)?;
                if tsup <= (1.0 - 1e-4 * lambda) * sup || tsup <= config.residual_tol {
                    values = trial;
                    sol = trial_sol;
                    rw = trw;
                    sup = tsup;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if accepted {
                mu = (mu * 0.25).max(1e-14);
                break;
            }
            mu = (mu * 10.0).max(1e-8);
        }
        if !accepted {
            return Err(Error::StepFailure {
                iterations: iter,
                residual: sup,
                message: "line search could not decrease the residual".into(),
            });
        }
        iter += 1;
        if iter % config.log_every == 0 || sup <= config.residual_tol {
            entries.push(LogEntry {
                iteration: iter,
                residual: sup,
                energy: energy(problem, &sol, None)?,
            });
        }
        if let (Some(every), Some(dir)) = (config.checkpoint_every, &config.checkpoint_dir) {
            if iter % every == 0 {
                crate::solver::checkpoint::save_checkpoint(dir, iter, &sol, sup)?;
            }
        }
        converged = sup <= config.residual_tol;
    }
    Ok((
        sol,
        ConvergenceLog {
            entries,
            converged,
            iterations: iter - config.start_iteration,
            final_residual: sup,
        },
    ))
}

/// Exact gradient of the discrete energy (trapezoid quadrature, nodal
/// finite-difference gradients) over the dofs, plus the sup norm of the
/// weight-normalized gradient (an O(h^2)-consistent strong residual).
fn variational_gradient(
    problem: &Problem,
    values: &[Vec<f64>],
    dofs: &DofMap,
    w_trap: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let grid = &problem.grid;
    let ntot = grid.dim_total();
    let m = grid.dim_x();
    let nn = problem.n;
    let len = grid.len();
    let mut out = vec![0.0; dofs.n_dof];
    let mut sup = 0.0f64;
    let mut xs = vec![0.0; ntot];
    let mut uvals = vec![0.0; nn];
    let mut fgrad = vec![0.0; nn];
    for i in 0..nn {
        let d1: Vec<Vec<f64>> = (0..ntot).map(|a| d1_axis(&values[i], grid, a)).collect();
        // q_a = w * a(x, |Du|) * (Du)_a, then accumulate D^T q
        let mut acc = vec![0.0; len];
        for a in 0..ntot {
            let mut q = vec![0.0; len];
            for idx in 0..len {
                grid.coords(idx, &mut xs);
                let t: f64 = (0..ntot).map(|b| d1[b][idx] * d1[b][idx]).sum::<f64>().sqrt();
                let aval = problem.coefficients[i].value(&xs[..m], t);
                q[idx] = w_trap[idx] * aval * d1[a][idx];
            }
            let adj = crate::fields::deriv::d1_axis_transpose(&q, grid, a);
            for idx in 0..len {
                acc[idx] += adj[idx];
            }
        }
        for idx in 0..len {
            grid.coords(idx, &mut xs);
            for (c, uv) in uvals.iter_mut().enumerate() {
                *uv = values[c][idx];
            }
            problem.potential.gradient(&xs[..m], &uvals, &mut fgrad);
            acc[idx] -= w_trap[idx] * fgrad[i];
        }
        // fold periodic alias rows onto their canonical nodes
        for idx in 0..len {
            let c = canonical(grid, idx);
            if c != idx {
                let v = acc[idx];
                acc[c] += v;
                acc[idx] = 0.0;
            }
        }
        for idx in 0..len {
            let d = dofs.dof(i, idx);
            if d != usize::MAX {
                out[d] = acc[idx];
                sup = sup.max(acc[idx].abs() / w_trap[idx]);
            }
        }
    }
    Ok((out, sup))
}

pub fn gradient_flow_solve(
    problem: &Problem,
    init: SolutionTuple,
    config: &SolverConfig,
) -> Result<(SolutionTuple, ConvergenceLog)> {
    let grid = init.grid().clone();
    let dofs = DofMap::build(&grid, problem.n);
    let w = solver_weights(&grid);
    let w_trap = crate::fields::node_weights(&grid);
    let mut values = values_of(&init);
    for v in values.iter_mut() {
        *v = sync_aliases(&grid, v);
    }
    let mut sol = tuple_from(&grid, &values)?;
    let mut en = energy(problem, &sol, None)?;
    let (mut rw, mut sup) = variational_gradient(problem, &values, &dofs, &w_trap)?;
    let mut dt = config.step;
    let mut entries = vec![LogEntry {
        iteration: config.start_iteration,
        residual: sup,
        energy: en,
    }];
    let mut iter = config.start_iteration;
    let mut converged = sup <= config.residual_tol;
    while !converged && iter < config.start_iteration + config.max_iterations {
        // implicit diffusion, explicit reaction: (W/dt + K_flux) delta = -W r
        let k = assemble_jacobian(problem, &values, &dofs, false);
        let mut wdiag = vec![0.0; dofs.n_dof];
        for i in 0..problem.n {
            for idx in 0..grid.len() {
                let d = dofs.dof(i, idx);
                if d != usize::MAX {
                    wdiag[d] = w[idx];
                }
            }
        }
        let mut accepted = false;
        for _attempt in 0..24 {
            let apply = |x: &[f64], y: &mut [f64]| {
                k.apply(x, y);
                for ((yi, xi), wi) in y.iter_mut().zip(x).zip(&wdiag) {
                    *yi += wi / dt * xi;
                }
            };
            let rhs: Vec<f64> = rw.iter().map(|v| -v).collect();
            let pre: Vec<f64> = k
                .diagonal()
                .iter()
                .zip(&wdiag)
                .map(|(d, wi)| (d + wi / dt).max(1e-12))
                .collect();
            let mut delta = vec![0.0; dofs.n_dof];
            let out = cg_solve(apply, &rhs, &mut delta, Some(&pre), 1e-10, 20 * dofs.n_dof);
            if !out.converged {
                dt *= 0.5;
                continue;
            }
            let mut trial = values.clone();
            for i in 0..problem.n {
                for idx in 0..grid.len() {
                    let d = dofs.dof(i, idx);
                    if d != usize::MAX {
                        trial[i][idx] += delta[d];
                    }
                }
            }
            for v in trial.iter_mut() {
                *v = sync_aliases(&grid, v);
            }
            let trial_sol = tuple_from(&grid, &trial)?;
            let ten = energy(problem, &trial_sol, None)?;
            if ten <= en + 1e-14 * (1.0 + en.abs()) {
                let (trw, tsup) = variational_gradient(problem, &trial, &dofs, &w_trap)?;
                values = trial;
                sol = trial_sol;
                en = ten;
                rw = trw;
                sup = tsup;
                accepted = true;
                dt *= 1.2;
                break;
            }
            dt *= 0.5;
        }
        if !accepted {
            return Err(Error::StepFailure {
                iterations: iter,
                residual: sup,
                message: "pseudo-time step cannot decrease the energy".into(),
            });
        }
        iter += 1;
        if iter % config.log_every == 0 || sup <= config.residual_tol {
            entries.push(LogEntry {
                iteration: iter,
                residual: sup,
                energy: en,
            });
        }
        if let (Some(every), Some(dir)) = (config.checkpoint_every, &config.checkpoint_dir) {
            if iter % every == 0 {
                crate::solver::checkpoint::save_checkpoint(dir, iter, &sol, sup)?;
            }
        }
        converged = sup <= config.residual_tol;
    }
    Ok((
        sol,
        ConvergenceLog {
            entries,
            converged,
            iterations: iter - config.start_iteration,
            final_residual: sup,
        },
    ))
}
