//! Monotonicity in the last homogeneous direction and the pairwise sign
//! condition F_ij du^i du^j >= 0 that together define the monotone class.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::deriv::d1_axis;
use crate::fields::ScalarField;
use crate::model::{Problem, SolutionTuple};

#[derive(Debug, Clone, Serialize)]
pub struct PairMin {
    pub i: usize,
    pub j: usize,
    pub min_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    /// min |d u^i / d y_{N-m}| over nodes, per component.
    pub per_component_min_abs: Vec<f64>,
    /// Whether the last-direction derivative keeps one sign.
    pub per_component_sign_constant: Vec<bool>,
    /// min over nodes of F_ij du^i du^j, per pair i < j.
    pub pair_minima: Vec<PairMin>,
    pub eps_mono: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Checks the two conditions of the monotone class: each component's
/// derivative along the last homogeneous direction stays away from zero
/// (threshold eps_mono, default 1e-8 (1 + sup ||grad u||)), and each
/// coupling F_ij weighted by those derivatives is nonnegative up to a
/// rounding allowance.
pub fn check_f_monotone(
    problem: &Problem,
    sol: &SolutionTuple,
    eps_mono: Option<f64>,
) -> Result<MonotonicityReport> {
    let grid = &problem.grid;
    let axis = grid.dim_total() - 1;
    let m = grid.dim_x();
    let eps = eps_mono.unwrap_or(1e-8 * (1.0 + sol.grad_bound()));
    let derivs: Vec<Vec<f64>> = (0..problem.n)
        .map(|i| d1_axis(sol.component(i).values(), grid, axis))
        .collect();
    let mut per_component_min_abs = Vec::with_capacity(problem.n);
    let mut per_component_sign_constant = Vec::with_capacity(problem.n);
    for d in &derivs {
        let min_abs = d.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        let sign_constant = d.iter().all(|&v| v > 0.0) || d.iter().all(|&v| v < 0.0);
        per_component_min_abs.push(min_abs);
        per_component_sign_constant.push(sign_constant);
    }
    let mut pair_minima = Vec::new();
    let mut scale = 0.0f64;
    let mut xs = vec![0.0; grid.dim_total()];
    let mut uvals = vec![0.0; problem.n];
    let mut fh = vec![0.0; problem.n * problem.n];
    for i in 0..problem.n {
        for j in (i + 1)..problem.n {
            let mut min_value = f64::INFINITY;
            for idx in 0..grid.len() {
                grid.coords(idx, &mut xs);
                sol.values_at(idx, &mut uvals);
                problem.potential.hessian(&xs[..m], &uvals, &mut fh);
                let v = fh[i * problem.n + j] * derivs[i][idx] * derivs[j][idx];
                min_value = min_value.min(v);
                scale = scale.max(v.abs());
            }
            pair_minima.push(PairMin { i, j, min_value });
        }
    }
    let tol = 1e-12 * (1.0 + scale);
    let pass = per_component_min_abs.iter().all(|&v| v > eps)
        && per_component_sign_constant.iter().all(|&b| b)
        && pair_minima.iter().all(|p| p.min_value >= -tol);
    Ok(MonotonicityReport {
        per_component_min_abs,
        per_component_sign_constant,
        pair_minima,
        eps_mono: eps,
        tol,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SignHypothesisReport {
    pub pair_minima: Vec<PairMin>,
    pub tol: f64,
    pub pass: bool,
}

/// Checks F_ij theta^i theta^j >= 0 for prescribed constant-sign fields
/// theta. A theta that changes sign (or touches zero) violates the
/// hypothesis and is an error, not a failed check.
pub fn check_sign_hypothesis(
    problem: &Problem,
    sol: &SolutionTuple,
    theta: &[ScalarField],
) -> Result<SignHypothesisReport> {
    if theta.len() != problem.n {
        return Err(Error::DimensionMismatch(format!(
            "{} sign fields for {} components",
            theta.len(),
            problem.n
        )));
    }
    let grid = &problem.grid;
    for (i, t) in theta.iter().enumerate() {
        if !t.grid().same_layout(grid) {
            return Err(Error::GridMismatch("sign field grid differs".into()));
        }
        let pos = t.values().iter().all(|&v| v > 0.0);
        let neg = t.values().iter().all(|&v| v < 0.0);
        if !pos && !neg {
            return Err(Error::HypothesisViolation(format!(
                "theta^{i} changes sign or touches zero"
            )));
        }
    }
    let m = grid.dim_x();
    let mut xs = vec![0.0; grid.dim_total()];
    let mut uvals = vec![0.0; problem.n];
    let mut fh = vec![0.0; problem.n * problem.n];
    let mut pair_minima = Vec::new();
    let mut scale = 0.0f64;
    for i in 0..problem.n {
        for j in (i + 1)..problem.n {
            let mut min_value = f64::INFINITY;
            for idx in 0..grid.len() {
                grid.coords(idx, &mut xs);
                sol.values_at(idx, &mut uvals);
                problem.potential.hessian(&xs[..m], &uvals, &mut fh);
                let v = fh[i * problem.n + j] * theta[i].value(idx) * theta[j].value(idx);
                min_value = min_value.min(v);
                scale = scale.max(v.abs());
            }
            pair_minima.push(PairMin { i, j, min_value });
        }
    }
    let tol = 1e-12 * (1.0 + scale);
    let pass = pair_minima.iter().all(|p| p.min_value >= -tol);
    Ok(SignHypothesisReport {
        pair_minima,
        tol,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::analytic::{Extended1d, TanhProfile};
    use crate::fields::{make_grid, sample, Boundary};
    use crate::model::{Coefficient, Potential};
    use std::sync::Arc;

    fn strip() -> std::sync::Arc<crate::fields::Grid> {
        make_grid(
            &[[0.0, 1.0], [-4.0, 4.0]],
            &[5, 41],
            1,
            &[Boundary::NeumannZero, Boundary::Dirichlet],
        )
        .unwrap()
    }

    #[test]
    fn single_component_is_judged_on_the_derivative_alone() {
        let g = strip();
        let problem = Problem::new(
            1,
            vec![Coefficient::constant()],
            Potential::AllenCahn,
            g.clone(),
        )
        .unwrap();
        let kink = sample(
            Arc::new(Extended1d::new(
                2,
                1,
                vec![1.0],
                Arc::new(TanhProfile { width: 1.0 }),
            )),
            g.clone(),
        )
        .unwrap();
        let sol = SolutionTuple::new(vec![kink]).unwrap();
        let rep = check_f_monotone(&problem, &sol, None).unwrap();
        assert!(rep.pair_minima.is_empty());
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn interior_critical_point_fails_condition_one() {
        let g = strip();
        let problem = Problem::new(
            1,
            vec![Coefficient::constant()],
            Potential::AllenCahn,
            g.clone(),
        )
        .unwrap();
        // u = sin(y): derivative changes sign inside the box
        let vals: Vec<f64> = (0..g.len())
            .map(|i| g.coords_vec(i)[1].sin())
            .collect();
        let sol = SolutionTuple::new(vec![
            crate::fields::ScalarField::from_values(g, vals).unwrap()
        ])
        .unwrap();
        let rep = check_f_monotone(&problem, &sol, None).unwrap();
        assert!(!rep.pass);
        assert!(!rep.per_component_sign_constant[0]);
    }

    #[test]
    fn opposed_monotone_pair_with_negative_coupling_passes() {
        // u rising, v falling, F_12 = -2uv <= 0 for positive components:
        // the product F_12 u_y v_y is nonnegative
        let g = strip();
        let problem = Problem::new(
            2,
            vec![Coefficient::constant(), Coefficient::constant()],
            Potential::Blwz,
            g.clone(),
        )
        .unwrap();
        let ramp = |t: f64| 0.5 * (t + (t * t + 1.0).sqrt());
        let uv: Vec<f64> = (0..g.len()).map(|i| ramp(g.coords_vec(i)[1])).collect();
        let vv: Vec<f64> = (0..g.len()).map(|i| ramp(-g.coords_vec(i)[1])).collect();
        let sol = SolutionTuple::new(vec![
            crate::fields::ScalarField::from_values(g.clone(), uv).unwrap(),
            crate::fields::ScalarField::from_values(g, vv).unwrap(),
        ])
        .unwrap();
        let rep = check_f_monotone(&problem, &sol, None).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.pair_minima[0].min_value >= 0.0);
    }

    #[test]
    fn sign_hypothesis_with_derivative_thetas_passes_for_monotone_pairs() {
        // the monotone reduction: take theta^i to be the last-direction
        // derivatives themselves
        let g = strip();
        let problem = Problem::new(
            2,
            vec![Coefficient::constant(), Coefficient::constant()],
            Potential::Blwz,
            g.clone(),
        )
        .unwrap();
        let ramp = |t: f64| 0.5 * (t + (t * t + 1.0).sqrt());
        let uv: Vec<f64> = (0..g.len()).map(|i| ramp(g.coords_vec(i)[1])).collect();
        let vv: Vec<f64> = (0..g.len()).map(|i| ramp(-g.coords_vec(i)[1])).collect();
        let sol = SolutionTuple::new(vec![
            crate::fields::ScalarField::from_values(g.clone(), uv).unwrap(),
            crate::fields::ScalarField::from_values(g.clone(), vv).unwrap(),
        ])
        .unwrap();
        let axis = g.dim_total() - 1;
        let theta: Vec<crate::fields::ScalarField> = (0..2)
            .map(|i| {
                crate::fields::ScalarField::from_values(
                    g.clone(),
                    d1_axis(sol.component(i).values(), &g, axis),
                )
                .unwrap()
            })
            .collect();
        let rep = check_sign_hypothesis(&problem, &sol, &theta).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn sign_hypothesis_rejects_mixed_sign_theta() {
        let g = strip();
        let problem = Problem::new(
            2,
            vec![Coefficient::constant(), Coefficient::constant()],
            Potential::Blwz,
            g.clone(),
        )
        .unwrap();
        let sol = SolutionTuple::new(vec![
            crate::fields::ScalarField::constant(g.clone(), 1.0),
            crate::fields::ScalarField::constant(g.clone(), 1.0),
        ])
        .unwrap();
        let mixed: Vec<f64> = (0..g.len()).map(|i| g.coords_vec(i)[1]).collect();
        let theta = vec![
            crate::fields::ScalarField::from_values(g.clone(), mixed).unwrap(),
            crate::fields::ScalarField::constant(g.clone(), 1.0),
        ];
        assert!(matches!(
            check_sign_hypothesis(&problem, &sol, &theta),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn decoupled_potential_passes_any_theta() {
        let g = strip();
        let problem = Problem::new(
            2,
            vec![Coefficient::constant(), Coefficient::constant()],
            Potential::Quadratic { c: -1.0 },
            g.clone(),
        )
        .unwrap();
        let sol = SolutionTuple::new(vec![
            crate::fields::ScalarField::constant(g.clone(), 0.3),
            crate::fields::ScalarField::constant(g.clone(), -0.7),
        ])
        .unwrap();
        let theta = vec![
            crate::fields::ScalarField::constant(g.clone(), 1.0),
            crate::fields::ScalarField::constant(g.clone(), -1.0),
        ];
        let rep = check_sign_hypothesis(&problem, &sol, &theta).unwrap();
        assert!(rep.pass);
    }
}
