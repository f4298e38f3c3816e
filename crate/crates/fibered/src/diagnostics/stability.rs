//! The stability quadratic form
//!
//! ```text
//! Q(psi) = sum_i int <A^i grad psi^i, grad psi^i>
//!        - sum_{i,j} int F_ij psi^i psi^j
//! ```
//!
//! discretized as a symmetric form over the non-pinned nodes: pure-axis
//! terms on faces (exact differences, no spurious checkerboard modes),
//! cross terms with nodal central differences, potential coupling on
//! nodes. A solution is declared stable when the smallest generalized
//! eigenvalue of K psi = lambda M psi clears -tol.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::deriv::d1_axis;
use crate::fields::{node_weights, DerivMode, ScalarField};
use crate::linalg::{cg_solve, Csr};
use crate::model::{Coefficient, Problem, SolutionTuple};
use crate::solver::system::{canonical, face_weight, is_periodic_alias, solver_weights, DofMap};

/// A^k entries at a given base point and gradient; below the degeneracy
/// threshold the rank-one part is dropped (the transverse eigenvalue
/// profile is kept).
fn a_entries(coef: &Coefficient, x: &[f64], eta: &[f64], eps: f64, out: &mut [f64]) {
    let n = eta.len();
    let t: f64 = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
    out.fill(0.0);
    if t < eps {
        let a = coef.value(x, eps);
        for i in 0..n {
            out[i * n + i] = a;
        }
        return;
    }
    let a = coef.value(x, t);
    let da = coef.dt(x, t);
    for i in 0..n {
        for j in 0..n {
            let mut v = da * eta[i] * eta[j] / t;
            if i == j {
                v += a;
            }
            out[i * n + j] = v;
        }
    }
}

/// Emits every contribution of the discrete form as
/// Q += value * psi[comp_a, node_a] * psi[comp_b, node_b].
/// The assembly and the direct evaluation consume the same stream, which
/// pins their agreement to rounding.
fn for_each_contribution<F>(
    problem: &Problem,
    sol: &SolutionTuple,
    mode: DerivMode,
    mut emit: F,
) -> Result<()>
where
    F: FnMut(usize, usize, usize, usize, f64),
{
    let grid = &problem.grid;
    let ntot = grid.dim_total();
    let m = grid.dim_x();
    let len = grid.len();
    let eps = problem.eps_grad(sol);
    let wsolver = solver_weights(grid);
    let wtrap = node_weights(grid);
    let mut xs = vec![0.0; ntot];
    let mut amat = vec![0.0; ntot * ntot];
    let mut gface = vec![0.0; ntot];
    for i in 0..problem.n {
        let values = sol.component(i).values();
        let grad_i = sol.gradient(i, mode)?;
        let d1: Vec<Vec<f64>> = (0..ntot).map(|a| d1_axis(values, grid, a)).collect();
        // pure-axis terms on faces
        for axis in 0..ntot {
            let h = grid.spacing(axis);
            let nnodes = grid.axis(axis).nodes;
            let stride = grid.strides()[axis];
            for idx in 0..len {
                let pos = grid.axis_position(idx, axis);
                if pos + 1 >= nnodes || is_periodic_alias(grid, idx) {
                    continue;
                }
                let nb_raw = idx + stride;
                let nb = canonical(grid, nb_raw);
                grid.coords(idx, &mut xs);
                let mut xf = xs[..m].to_vec();
                if axis < m {
                    xf[axis] += 0.5 * h;
                }
                match mode {
                    DerivMode::Fd => {
                        for b in 0..ntot {
                            gface[b] = if b == axis {
                                (values[nb_raw] - values[idx]) / h
                            } else {
                                0.5 * (d1[b][idx] + d1[b][nb_raw])
                            };
                        }
                    }
                    DerivMode::Analytic => {
                        let cb = sol.component(i).analytic().ok_or_else(|| {
                            Error::Mode("analytic stability form without callbacks".into())
                        })?;
                        let mut xmid = xs.clone();
                        xmid[axis] += 0.5 * h;
                        cb.gradient(&xmid, &mut gface);
                    }
                }
                a_entries(&problem.coefficients[i], &xf, &gface, eps, &mut amat);
                let c = face_weight(grid, &wsolver, idx, axis) * amat[axis * ntot + axis]
                    / (h * h);
                emit(i, idx, i, idx, c);
                emit(i, nb, i, nb, c);
                emit(i, idx, i, nb, -2.0 * c);
            }
        }
        // cross terms at nodes
        if ntot > 1 {
            for idx in 0..len {
                if is_periodic_alias(grid, idx) {
                    continue;
                }
                grid.coords(idx, &mut xs);
                a_entries(
                    &problem.coefficients[i],
                    &xs[..m],
                    grad_i.at(idx),
                    eps,
                    &mut amat,
                );
                for a in 0..ntot {
                    for b in (a + 1)..ntot {
                        let coeff = amat[a * ntot + b];
                        if coeff == 0.0 {
                            continue;
                        }
                        let w2 = 2.0 * wtrap[idx] * coeff;
                        let sa = stencil(grid, idx, a);
                        let sb = stencil(grid, idx, b);
                        for &(na, ca) in sa.iter() {
                            for &(nb, cb) in sb.iter() {
                                emit(i, canonical(grid, na), i, canonical(grid, nb), w2 * ca * cb);
                            }
                        }
                    }
                }
            }
        }
    }
    // potential coupling
    let nn = problem.n;
    let mut uvals = vec![0.0; nn];
    let mut fh = vec![0.0; nn * nn];
    for idx in 0..len {
        if is_periodic_alias(grid, idx) {
            continue;
        }
        grid.coords(idx, &mut xs);
        sol.values_at(idx, &mut uvals);
        problem.potential.hessian(&xs[..m], &uvals, &mut fh);
        for i in 0..nn {
            for j in 0..nn {
                let v = fh[i * nn + j];
                if v != 0.0 {
                    emit(i, idx, j, idx, -wtrap[idx] * v);
                }
            }
        }
    }
    Ok(())
}

/// First-derivative stencil (node, coefficient) pairs at a node.
fn stencil(grid: &crate::fields::Grid, idx: usize, axis: usize) -> Vec<(usize, f64)> {
    let n = grid.axis(axis).nodes;
    let h = grid.spacing(axis);
    let stride = grid.strides()[axis];
    let pos = grid.axis_position(idx, axis);
    let periodic = grid.axis(axis).boundary == crate::fields::Boundary::Periodic;
    if periodic {
        let l = if pos == 0 {
            idx + (n - 2) * stride
        } else {
            idx - stride
        };
        let r = if pos + 1 >= n { idx - (n - 2) * stride } else { idx + stride };
        return vec![(r, 0.5 / h), (l, -0.5 / h)];
    }
    if pos == 0 {
        vec![
            (idx, -1.5 / h),
            (idx + stride, 2.0 / h),
            (idx + 2 * stride, -0.5 / h),
        ]
    } else if pos == n - 1 {
        vec![
            (idx, 1.5 / h),
            (idx - stride, -2.0 / h),
            (idx - 2 * stride, 0.5 / h),
        ]
    } else {
        vec![(idx + stride, 0.5 / h), (idx - stride, -0.5 / h)]
    }
}

/// Direct evaluation of the form for explicit test tuples. Test functions
/// must vanish on Dirichlet end planes.
pub fn stability_quadratic(
    problem: &Problem,
    sol: &SolutionTuple,
    psi: &[ScalarField],
    mode: DerivMode,
) -> Result<f64> {
    if psi.len() != problem.n {
        return Err(Error::DimensionMismatch(format!(
            "{} test functions for {} components",
            psi.len(),
            problem.n
        )));
    }
    let grid = &problem.grid;
    let scale = psi.iter().map(|p| p.max_abs()).fold(0.0, f64::max);
    for p in psi {
        if !p.grid().same_layout(grid) {
            return Err(Error::GridMismatch("test function grid differs".into()));
        }
        for idx in 0..grid.len() {
            if grid.is_dirichlet_node(idx) && p.value(idx).abs() > 1e-12 * (1.0 + scale) {
                return Err(Error::HypothesisViolation(
                    "test function does not vanish on the Dirichlet boundary".into(),
                ));
            }
        }
    }
    let mut q = 0.0;
    for_each_contribution(problem, sol, mode, |ci, ni, cj, nj, v| {
        q += v * psi[ci].value(ni) * psi[cj].value(nj);
    })?;
    Ok(q)
}

pub struct AssembledStability {
    pub k: Csr,
    pub m_diag: Vec<f64>,
    pub n_dof: usize,
    pub(crate) dofs: DofMap,
}

/// Assembles K and the diagonal mass matrix over non-pinned nodes.
pub fn assemble_stability(
    problem: &Problem,
    sol: &SolutionTuple,
    mode: DerivMode,
) -> Result<AssembledStability> {
    let grid = &problem.grid;
    let dofs = DofMap::build(grid, problem.n);
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    for_each_contribution(problem, sol, mode, |ci, ni, cj, nj, v| {
        let a = dofs.dof(ci, ni);
        let b = dofs.dof(cj, nj);
        if a == usize::MAX || b == usize::MAX {
            return;
        }
        if a == b {
            trips.push((a, a, v));
        } else {
            trips.push((a, b, 0.5 * v));
            trips.push((b, a, 0.5 * v));
        }
    })?;
    let k = Csr::from_coo(dofs.n_dof, trips);
    let wtrap = node_weights(grid);
    let mut m_diag = vec![0.0; dofs.n_dof];
    for i in 0..problem.n {
        for idx in 0..grid.len() {
            let d = dofs.dof(i, idx);
            if d != usize::MAX {
                m_diag[d] = wtrap[idx];
            }
        }
    }
    Ok(AssembledStability {
        n_dof: dofs.n_dof,
        k,
        m_diag,
        dofs,
    })
}

#[derive(Debug, Clone)]
pub struct EigenOpts {
    pub tol: f64,
    pub max_outer: usize,
    pub seed: u64,
}

impl Default for EigenOpts {
    fn default() -> Self {
        EigenOpts {
            tol: 1e-9,
            max_outer: 200,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub lambda_min: f64,
    /// Q at the eigenvector, evaluated by the direct path.
    pub quad_form_value: f64,
    pub m_norm_sq: f64,
    pub eigen_residual: f64,
    pub iterations: usize,
    pub dof_count: usize,
    pub tol: f64,
    #[serde(skip)]
    pub eigenvector: Vec<ScalarField>,
}

/// Smallest generalized eigenvalue by shift-and-invert iteration with
/// Rayleigh-quotient shift updates; the shifted operator stays positive
/// definite by a Gershgorin start and backtracking on indefiniteness.
fn smallest_eigenpair(
    k: &Csr,
    m_diag: &[f64],
    opts: &EigenOpts,
) -> Result<(f64, Vec<f64>, f64, usize)> {
    use rand::{RngExt, SeedableRng};
    let n = k.n;
    // Gershgorin lower bound of the symmetrized pencil
    let mut lb = f64::INFINITY;
    for i in 0..n {
        let mut diag = 0.0;
        let mut off = 0.0;
        for t in k.indptr[i]..k.indptr[i + 1] {
            let j = k.indices[t];
            let v = k.data[t] / (m_diag[i] * m_diag[j]).sqrt();
            if j == i {
                diag += v;
            } else {
                off += v.abs();
            }
        }
        lb = lb.min(diag - off);
    }
    let mut shift = lb - 0.01 * (1.0 + lb.abs());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mnorm = |v: &[f64]| -> f64 {
        v.iter()
            .zip(m_diag)
            .map(|(a, m)| a * a * m)
            .sum::<f64>()
            .sqrt()
    };
    let nx = mnorm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut kx = vec![0.0; n];
    let mut rho = {
        k.apply(&x, &mut kx);
        x.iter().zip(&kx).map(|(a, b)| a * b).sum::<f64>()
    };
    let mut res = f64::INFINITY;
    for outer in 0..opts.max_outer {
        // solve (K - shift M) z = M x
        let apply = |v: &[f64], y: &mut [f64]| {
            k.apply(v, y);
            for ((yi, vi), mi) in y.iter_mut().zip(v).zip(m_diag) {
                *yi -= shift * mi * vi;
            }
        };
        let rhs: Vec<f64> = x.iter().zip(m_diag).map(|(a, m)| a * m).collect();
        let pre: Vec<f64> = {
            let kd = k.diagonal();
            kd.iter()
                .zip(m_diag)
                .map(|(d, m)| (d - shift * m).abs().max(1e-300))
                .collect()
        };
        let mut z = x.clone();
        let out = cg_solve(apply, &rhs, &mut z, Some(&pre), 1e-10, 40 * n + 2000);
        if out.indefinite {
            // shift crossed the smallest eigenvalue: back away and retry
            shift -= 2.0 * (rho - shift).abs().max(1e-9);
            continue;
        }
        let nz = mnorm(&z);
        if !nz.is_finite() || nz == 0.0 {
            return Err(Error::EigenNonConvergence(format!(
                "inverse iteration produced a degenerate vector at outer step {outer}"
            )));
        }
        z.iter_mut().for_each(|v| *v /= nz);
        x = z;
        k.apply(&x, &mut kx);
        rho = x.iter().zip(&kx).map(|(a, b)| a * b).sum::<f64>();
        let mut worst = 0.0f64;
        let mut acc = 0.0;
        for i in 0..n {
            let r = kx[i] - rho * m_diag[i] * x[i];
            acc += r * r / m_diag[i];
            worst = worst.max(r.abs());
        }
        let _ = worst;
        res = acc.sqrt() / (1.0 + rho.abs());
        if res <= opts.tol {
            return Ok((rho, x, res, outer + 1));
        }
        // Rayleigh-quotient shift, kept strictly below the target
        let delta = (2.0 * res * (1.0 + rho.abs())).max(1e-12);
        shift = shift.max(rho - delta);
    }
    Err(Error::EigenNonConvergence(format!(
        "residual {res:.3e} after {} outer iterations",
        opts.max_outer
    )))
}

/// Smallest eigenvalue of the discrete stability form with its
/// eigenvector, reported with the direct-path value of Q at the
/// eigenvector (the two code paths must agree to rounding).
pub fn stability_lambda_min(
    problem: &Problem,
    sol: &SolutionTuple,
    mode: DerivMode,
    opts: &EigenOpts,
) -> Result<StabilityReport> {
    let asm = assemble_stability(problem, sol, mode)?;
    let (lambda, x, res, iters) = smallest_eigenpair(&asm.k, &asm.m_diag, opts)?;
    // expand the dof vector to full-grid fields
    let grid = &problem.grid;
    let mut fields = Vec::with_capacity(problem.n);
    for i in 0..problem.n {
        let mut vals = vec![0.0; grid.len()];
        for idx in 0..grid.len() {
            let d = asm.dofs.dof(i, idx);
            if d != usize::MAX {
                vals[idx] = x[d];
            }
        }
        // periodic aliases mirror their canonical values
        for idx in 0..grid.len() {
            let c = canonical(grid, idx);
            if c != idx {
                vals[idx] = vals[c];
            }
        }
        fields.push(ScalarField::from_values(grid.clone(), vals)?);
    }
    let quad = stability_quadratic(problem, sol, &fields, mode)?;
    let m_norm_sq: f64 = x
        .iter()
        .zip(&asm.m_diag)
        .map(|(a, m)| a * a * m)
        .sum();
    Ok(StabilityReport {
        lambda_min: lambda,
        quad_form_value: quad,
        m_norm_sq,
        eigen_residual: res,
        iterations: iters,
        dof_count: asm.n_dof,
        tol: opts.tol,
        eigenvector: fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_grid, Boundary};
    use crate::model::Potential;

    fn coercive_problem(nodes_y: usize) -> (Problem, SolutionTuple) {
        // -laplace + 1 on the unit interval in y, trivial zero-flux x-axis:
        // the product spectrum starts at pi^2 + 1
        let g = make_grid(
            &[[0.0, 1.0], [0.0, 1.0]],
            &[5, nodes_y],
            1,
            &[Boundary::NeumannZero, Boundary::Dirichlet],
        )
        .unwrap();
        let problem = Problem::new(
            1,
            vec![Coefficient::constant()],
            Potential::Quadratic { c: -1.0 },
            g.clone(),
        )
        .unwrap();
        let sol =
            SolutionTuple::new(vec![ScalarField::constant(g, 0.0)]).unwrap();
        (problem, sol)
    }

    #[test]
    fn zero_test_function_gives_zero() {
        let (problem, sol) = coercive_problem(17);
        let zero = ScalarField::constant(problem.grid.clone(), 0.0);
        let q = stability_quadratic(&problem, &sol, &[zero], DerivMode::Fd).unwrap();
        assert_eq!(q, 0.0);
    }

    #[test]
    fn coercive_form_is_nonnegative_on_random_bumps() {
        use rand::{RngExt, SeedableRng};
        let (problem, sol) = coercive_problem(33);
        let g = &problem.grid;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(0.5..3.0);
            let vals: Vec<f64> = (0..g.len())
                .map(|i| {
                    let c = g.coords_vec(i);
                    let bump = (std::f64::consts::PI * c[1]).sin();
                    a * bump * (b * c[0]).cos() + 0.3 * bump * bump
                })
                .collect();
            let psi = ScalarField::from_values(g.clone(), vals).unwrap();
            let q = stability_quadratic(&problem, &sol, &[psi], DerivMode::Fd).unwrap();
            assert!(q >= 0.0, "coercive form came out negative: {q}");
        }
    }

    #[test]
    fn product_oracle_eigenvalue() {
        // smallest eigenvalue of -laplace + 1 on the unit interval with a
        // zero-flux transverse axis: pi^2 + 1
        let (problem, sol) = coercive_problem(257);
        let rep =
            stability_lambda_min(&problem, &sol, DerivMode::Fd, &EigenOpts::default()).unwrap();
        let want = std::f64::consts::PI.powi(2) + 1.0;
        let rel = (rep.lambda_min - want).abs() / want;
        assert!(rel < 0.01, "lambda_min {} vs {want}", rep.lambda_min);
        // form consistency between the two code paths
        let predicted = rep.lambda_min * rep.m_norm_sq;
        assert!(
            (rep.quad_form_value - predicted).abs()
                <= 1e-7 * (1.0 + predicted.abs()),
            "Q(eig) {} vs lambda |x|_M^2 {}",
            rep.quad_form_value,
            predicted
        );
    }

    #[test]
    fn unit_square_oracle_eigenvalue() {
        // fully Dirichlet unit square: the coercive spectrum starts at
        // 2 pi^2 + 1
        let g = make_grid(
            &[[0.0, 1.0], [0.0, 1.0]],
            &[33, 33],
            1,
            &[Boundary::Dirichlet, Boundary::Dirichlet],
        )
        .unwrap();
        let problem = Problem::new(
            1,
            vec![Coefficient::constant()],
            Potential::Quadratic { c: -1.0 },
            g.clone(),
        )
        .unwrap();
        let sol = SolutionTuple::new(vec![ScalarField::constant(g, 0.0)]).unwrap();
        let rep =
            stability_lambda_min(&problem, &sol, DerivMode::Fd, &EigenOpts::default()).unwrap();
        let want = 2.0 * std::f64::consts::PI.powi(2) + 1.0;
        assert!(
            (rep.lambda_min - want).abs() / want < 0.01,
            "{} vs {want}",
            rep.lambda_min
        );
    }

    #[test]
    fn kink_translation_mode_is_a_near_null_direction() {
        // psi = u' times a bulk cutoff: the translation mode of the kink,
        // annihilated by the second variation up to truncation terms
        use crate::fields::analytic::{Analytic, Extended1d, TanhProfile};
        use std::sync::Arc;
        let g = make_grid(
            &[[0.0, 1.0], [-12.0, 12.0]],
            &[5, 241],
            1,
            &[Boundary::NeumannZero, Boundary::Dirichlet],
        )
        .unwrap();
        let problem = Problem::new(
            1,
            vec![Coefficient::constant()],
            Potential::AllenCahn,
            g.clone(),
        )
        .unwrap();
        let w = 2f64.sqrt();
        let kink = crate::fields::sample(
            Arc::new(Extended1d::new(
                2,
                1,
                vec![1.0],
                Arc::new(TanhProfile { width: w }),
            )) as Arc<dyn Analytic>,
            g.clone(),
        )
        .unwrap();
        let sol = SolutionTuple::new(vec![kink]).unwrap();
        let psi_vals: Vec<f64> = (0..g.len())
            .map(|i| {
                if g.is_dirichlet_node(i) {
                    return 0.0;
                }
                let c = g.coords_vec(i);
                let du = 1.0 / (w * (c[1] / w).cosh().powi(2));
                let t = (c[1] + 12.0) / 24.0;
                let bump = (std::f64::consts::PI * t).sin().powi(2);
                du * bump
            })
            .collect();
        let psi = ScalarField::from_values(g.clone(), psi_vals).unwrap();
        let q = stability_quadratic(&problem, &sol, &[psi.clone()], DerivMode::Fd).unwrap();
        // scale: the gradient part of the form alone
        let zero_pot = Problem::new(
            1,
            vec![Coefficient::constant()],
            Potential::Zero,
            g,
        )
        .unwrap();
        let scale = stability_quadratic(&zero_pot, &sol, &[psi], DerivMode::Fd).unwrap();
        assert!(scale > 1e-3);
        assert!(q.abs() <= 1e-2 * scale, "Q = {q}, scale = {scale}");
    }

    #[test]
    fn sign_flipped_potential_is_unstable() {
        // F_11 = +10 pushes the smallest eigenvalue negative on a large box
        let g = make_grid(
            &[[0.0, 1.0], [-10.0, 10.0]],
            &[5, 101],
            1,
            &[Boundary::NeumannZero, Boundary::Dirichlet],
        )
        .unwrap();
        let problem = Problem::new(
            1,
            vec![Coefficient::constant()],
            Potential::Quadratic { c: 10.0 },
            g.clone(),
        )
        .unwrap();
        let sol = SolutionTuple::new(vec![ScalarField::constant(g, 0.0)]).unwrap();
        let rep =
            stability_lambda_min(&problem, &sol, DerivMode::Fd, &EigenOpts::default()).unwrap();
        assert!(rep.lambda_min < -9.0, "lambda_min {}", rep.lambda_min);
    }

    #[test]
    fn assembled_form_matches_direct_path_to_rounding() {
        use rand::{RngExt, SeedableRng};
        // p-power coefficient exercises the cross terms
        let g = make_grid(
            &[[0.0, 1.0], [0.0, 1.0]],
            &[9, 9],
            1,
            &[Boundary::Dirichlet, Boundary::Dirichlet],
        )
        .unwrap();
        let problem = Problem::new(
            1,
            vec![Coefficient::p_power(3.0).unwrap()],
            Potential::AllenCahn,
            g.clone(),
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let uvals: Vec<f64> = (0..g.len())
            .map(|i| {
                let c = g.coords_vec(i);
                (1.3 * c[0] + 0.4).sin() + 2.0 * c[1] + 0.3 * (2.0 * c[1]).cos()
            })
            .collect();
        let sol =
            SolutionTuple::new(vec![ScalarField::from_values(g.clone(), uvals).unwrap()])
                .unwrap();
        let asm = assemble_stability(&problem, &sol, DerivMode::Fd).unwrap();
        for _ in 0..5 {
            let vals: Vec<f64> = (0..g.len())
                .map(|i| {
                    if g.is_dirichlet_node(i) {
                        0.0
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect();
            let psi = ScalarField::from_values(g.clone(), vals).unwrap();
            let q1 = stability_quadratic(&problem, &sol, &[psi.clone()], DerivMode::Fd).unwrap();
            // x over dofs
            let mut x = vec![0.0; asm.n_dof];
            for idx in 0..g.len() {
                let d = asm.dofs.dof(0, idx);
                if d != usize::MAX {
                    x[d] = psi.value(idx);
                }
            }
            let q2 = asm.k.quad_form(&x);
            assert!(
                (q1 - q2).abs() <= 1e-10 * (1.0 + q1.abs()),
                "paths differ: {q1} vs {q2}"
            );
        }
    }
}
