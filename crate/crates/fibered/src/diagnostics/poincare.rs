//! The Poincare-type inequality audit. For a stable solution and any
//! compactly supported test tuple psi,
//!
//! ```text
//! sum_k int_{R_k} (sum_j <A^k grad u^k_{y_j}, grad u^k_{y_j}>
//!                  - <A^k grad|grad_y u^k|, grad|grad_y u^k|>) (psi^k)^2
//!   - sum_{k != j} int F_kj ((psi^k)^2 <grad_y u^j, grad_y u^k>
//!                            - psi^j psi^k |grad_y u^k||grad_y u^j|)
//! <= sum_k int <A^k grad psi^k, grad psi^k> |grad_y u^k|^2
//! ```
//!
//! The audit evaluates both sides and reports the signed gap
//! RHS + cross - LHS; stability is a gate the caller asserts, so a
//! negative gap without it is "hypothesis not met", not a failure.
//!
//! [`PoincareAudit`] precomputes every psi-independent node quantity once,
//! so randomized batches of test tuples amortize the geometry work.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{node_weights, DerivMode, ScalarField};
use crate::geometry::GeometryData;
use crate::model::{assemble_a, Problem, SolutionTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LhsForm {
    /// Flux-matrix form: <A grad u_{y_j}, ...> sums.
    FluxMatrix,
    /// Geometric form: a (S + K^2 |grad_y u|^2 + |grad_L |grad_y u||^2)
    /// + (da/dt / |grad u|) T.
    Geometric,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub lhs: f64,
    pub cross_term: f64,
    pub rhs: f64,
    /// rhs + cross - lhs; nonnegative (up to tolerance) when the
    /// stability hypothesis holds.
    pub gap: f64,
    pub form: LhsForm,
    /// Fraction of node slots excluded from the level-set terms.
    pub inactive_fraction: f64,
    /// sup over active nodes of |flux-matrix integrand - geometric
    /// integrand| (the two are tied by the pointwise identities).
    pub form_agreement_sup: f64,
    /// Caller-provided stability verdict; None when unasserted.
    pub hypothesis_met: Option<bool>,
}

/// psi-independent tables of the inequality.
pub struct PoincareAudit {
    n: usize,
    len: usize,
    form: LhsForm,
    /// per component: w * integrand on active nodes (zero elsewhere).
    lhs_density: Vec<Vec<f64>>,
    /// per component: |grad_y u|^2 per node.
    ynorm_sq: Vec<Vec<f64>>,
    /// per component: flux matrix entries per node (N x N).
    amat: Vec<Vec<f64>>,
    /// per ordered pair (k, j), k != j: w F_kj <gy_j, gy_k> and
    /// w F_kj |gy_k||gy_j| per node.
    cross_dot: Vec<Vec<f64>>,
    cross_norm: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize)>,
    weights: Vec<f64>,
    inactive_fraction: f64,
    form_agreement_sup: f64,
    grid: std::sync::Arc<crate::fields::Grid>,
}

impl PoincareAudit {
    pub fn new(
        problem: &Problem,
        sol: &SolutionTuple,
        mode: DerivMode,
        form: LhsForm,
    ) -> Result<PoincareAudit> {
        let grid = problem.grid.clone();
        let ntot = grid.dim_total();
        let m = grid.dim_x();
        let len = grid.len();
        let nn = problem.n;
        let w = node_weights(&grid);
        let eps = problem.eps_grad(sol);
        let geoms: Vec<GeometryData> = (0..nn)
            .map(|k| GeometryData::build(sol.component(k), mode, Some(eps)))
            .collect::<Result<_>>()?;
        let mut lhs_density = vec![vec![0.0; len]; nn];
        let mut ynorm_sq = vec![vec![0.0; len]; nn];
        let mut amat = vec![vec![0.0; len * ntot * ntot]; nn];
        let mut inactive = 0usize;
        let mut form_sup = 0.0f64;
        let mut xs = vec![0.0; ntot];
        for (k, geom) in geoms.iter().enumerate() {
            for idx in 0..len {
                grid.coords(idx, &mut xs);
                let g = geom.y_norm(idx);
                ynorm_sq[k][idx] = g * g;
                let eta = geom.gradient(idx);
                let t: f64 = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
                // flux matrix for the RHS: rank-one part only away from
                // degeneracy (the |grad_y u|^2 weight vanishes there)
                let slot = &mut amat[k][idx * ntot * ntot..(idx + 1) * ntot * ntot];
                if t >= eps {
                    let a = assemble_a(&problem.coefficients[k], &xs[..m], eta, eps)?;
                    slot.copy_from_slice(&a.data);
                } else {
                    let aval = problem.coefficients[k].value(&xs[..m], t.max(eps));
                    for d in 0..ntot {
                        slot[d * ntot + d] = aval;
                    }
                }
                if geom.is_active(idx) {
                    let a = assemble_a(&problem.coefficients[k], &xs[..m], eta, eps)?;
                    let aform = geom.a_form_lhs(idx, &a);
                    let a_val = problem.coefficients[k].value(&xs[..m], t);
                    let da_val = problem.coefficients[k].dt(&xs[..m], t);
                    let geo = geom.geometric_form_lhs(idx, a_val, da_val);
                    form_sup = form_sup.max((aform - geo).abs());
                    let integrand = match form {
                        LhsForm::FluxMatrix => aform,
                        LhsForm::Geometric => geo,
                    };
                    lhs_density[k][idx] = w[idx] * integrand;
                } else {
                    inactive += 1;
                }
            }
        }
        let mut pairs = Vec::new();
        let mut cross_dot = Vec::new();
        let mut cross_norm = Vec::new();
        if nn > 1 {
            let mut uvals = vec![0.0; nn];
            let mut fh = vec![0.0; nn * nn];
            for k in 0..nn {
                for j in 0..nn {
                    if j == k {
                        continue;
                    }
                    let mut dots = vec![0.0; len];
                    let mut norms = vec![0.0; len];
                    for idx in 0..len {
                        grid.coords(idx, &mut xs);
                        sol.values_at(idx, &mut uvals);
                        problem.potential.hessian(&xs[..m], &uvals, &mut fh);
                        let fkj = fh[k * nn + j];
                        if fkj == 0.0 {
                            continue;
                        }
                        let gyk = &geoms[k].gradient(idx)[m..];
                        let gyj = &geoms[j].gradient(idx)[m..];
                        let dot: f64 = gyk.iter().zip(gyj).map(|(a, b)| a * b).sum();
                        dots[idx] = w[idx] * fkj * dot;
                        norms[idx] =
                            w[idx] * fkj * geoms[k].y_norm(idx) * geoms[j].y_norm(idx);
                    }
                    pairs.push((k, j));
                    cross_dot.push(dots);
                    cross_norm.push(norms);
                }
            }
        }
        Ok(PoincareAudit {
            n: nn,
            len,
            form,
            lhs_density,
            ynorm_sq,
            amat,
            cross_dot,
            cross_norm,
            pairs,
            weights: w,
            inactive_fraction: inactive as f64 / (len * nn) as f64,
            form_agreement_sup: form_sup,
            grid,
        })
    }

    /// Evaluates the inequality for one compactly supported test tuple.
    pub fn evaluate(
        &self,
        psi: &[ScalarField],
        hypothesis_met: Option<bool>,
    ) -> Result<PoincareReport> {
        if psi.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} test functions for {} components",
                psi.len(),
                self.n
            )));
        }
        let scale = psi.iter().map(|p| p.max_abs()).fold(0.0, f64::max);
        for p in psi {
            if !p.grid().same_layout(&self.grid) {
                return Err(Error::GridMismatch("test function grid differs".into()));
            }
            for idx in 0..self.len {
                if self.grid.is_dirichlet_node(idx)
                    && p.value(idx).abs() > 1e-12 * (1.0 + scale)
                {
                    return Err(Error::HypothesisViolation(
                        "test function does not vanish on the Dirichlet boundary".into(),
                    ));
                }
            }
        }
        let ntot = self.grid.dim_total();
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for k in 0..self.n {
            let gp = crate::fields::grad(&psi[k], DerivMode::Fd)?;
            for idx in 0..self.len {
                let pv = psi[k].value(idx);
                lhs += self.lhs_density[k][idx] * pv * pv;
                let a = &self.amat[k][idx * ntot * ntot..(idx + 1) * ntot * ntot];
                let gpk = gp.at(idx);
                let mut quad = 0.0;
                for r in 0..ntot {
                    let mut acc = 0.0;
                    for c in 0..ntot {
                        acc += a[r * ntot + c] * gpk[c];
                    }
                    quad += gpk[r] * acc;
                }
                rhs += self.weights[idx] * quad * self.ynorm_sq[k][idx];
            }
        }
        let mut cross = 0.0;
        for (p, &(k, j)) in self.pairs.iter().enumerate() {
            for idx in 0..self.len {
                let pk = psi[k].value(idx);
                let pj = psi[j].value(idx);
                cross += pk * pk * self.cross_dot[p][idx] - pj * pk * self.cross_norm[p][idx];
            }
        }
        let gap = rhs + cross - lhs;
        Ok(PoincareReport {
            lhs,
            cross_term: cross,
            rhs,
            gap,
            form: self.form,
            inactive_fraction: self.inactive_fraction,
            form_agreement_sup: self.form_agreement_sup,
            hypothesis_met,
        })
    }
}

/// The inequality with the flux-matrix left-hand side.
pub fn poincare_gap(
    problem: &Problem,
    sol: &SolutionTuple,
    psi: &[ScalarField],
    mode: DerivMode,
    hypothesis_met: Option<bool>,
) -> Result<PoincareReport> {
    PoincareAudit::new(problem, sol, mode, LhsForm::FluxMatrix)?.evaluate(psi, hypothesis_met)
}

/// The inequality with the geometric left-hand side (curvature and
/// tangential terms); `form_agreement_sup` records the pointwise
/// deviation between the two forms of the integrand.
pub fn poincare_geometric_form(
    problem: &Problem,
    sol: &SolutionTuple,
    psi: &[ScalarField],
    mode: DerivMode,
    hypothesis_met: Option<bool>,
) -> Result<PoincareReport> {
    PoincareAudit::new(problem, sol, mode, LhsForm::Geometric)?.evaluate(psi, hypothesis_met)
}
