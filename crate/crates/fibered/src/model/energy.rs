//! The energy functional behind the system and the audit of the
//! local-minimizer hypotheses.
//!
//! I(u) = sum_i integral Lambda_2^i(x, |grad u^i|) - integral F(x, u),
//! whose first variation along psi is exactly the weak residual.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::fields::{node_weights, DerivMode};
use crate::model::{Coefficient, Problem, SolutionTuple};

/// Energy over the grid box or a node mask, trapezoidal quadrature with
/// finite-difference gradients (so that directional difference quotients
/// of the energy reproduce the weak residual).
pub fn energy(problem: &Problem, sol: &SolutionTuple, mask: Option<&[bool]>) -> Result<f64> {
    let grid = &problem.grid;
    let w = node_weights(grid);
    let m = grid.dim_x();
    let mut xs = vec![0.0; grid.dim_total()];
    let mut uvals = vec![0.0; problem.n];
    let mut acc = 0.0;
    for idx in 0..grid.len() {
        if let Some(ma) = mask {
            if !ma[idx] {
                continue;
            }
        }
        grid.coords(idx, &mut xs);
        let mut val = 0.0;
        for i in 0..problem.n {
            let t = sol.fd_gradients()[i].norm_at(idx);
            val += problem.coefficients[i].big_lambda2(&xs[..m], t);
        }
        sol.values_at(idx, &mut uvals);
        val -= problem.potential.value(&xs[..m], &uvals);
        acc += w[idx] * val;
    }
    Ok(acc)
}

/// Energy with analytic gradients, for solutions carrying callbacks.
pub fn energy_mode(
    problem: &Problem,
    sol: &SolutionTuple,
    mask: Option<&[bool]>,
    mode: DerivMode,
) -> Result<f64> {
    if mode == DerivMode::Fd {
        return energy(problem, sol, mask);
    }
    let grid = &problem.grid;
    let w = node_weights(grid);
    let m = grid.dim_x();
    let mut xs = vec![0.0; grid.dim_total()];
    let mut uvals = vec![0.0; problem.n];
    let mut acc = 0.0;
    let grads: Vec<_> = (0..problem.n)
        .map(|i| sol.gradient(i, mode))
        .collect::<Result<_>>()?;
    for idx in 0..grid.len() {
        if let Some(ma) = mask {
            if !ma[idx] {
                continue;
            }
        }
        grid.coords(idx, &mut xs);
        let mut val = 0.0;
        for (i, g) in grads.iter().enumerate() {
            val += problem.coefficients[i].big_lambda2(&xs[..m], g.norm_at(idx));
        }
        sol.values_at(idx, &mut uvals);
        val -= problem.potential.value(&xs[..m], &uvals);
        acc += w[idx] * val;
    }
    Ok(acc)
}

/// The three eigenvalue profiles of a coefficient:
/// lambda_1 = (da/dt) t + a, lambda_2 = a, and the running integral
/// Lambda_2(x, t) = int_0^t lambda_2(x, |tau|) tau dtau.
pub struct LambdaProfiles<'a> {
    coef: &'a Coefficient,
}

impl LambdaProfiles<'_> {
    pub fn lambda1(&self, x: &[f64], t: f64) -> f64 {
        self.coef.lambda1(x, t)
    }
    pub fn lambda2(&self, x: &[f64], t: f64) -> f64 {
        self.coef.lambda2(x, t)
    }
    pub fn big_lambda2(&self, x: &[f64], t: f64) -> f64 {
        self.coef.big_lambda2(x, t)
    }
}

pub fn lambda_profiles(coef: &Coefficient) -> LambdaProfiles<'_> {
    LambdaProfiles { coef }
}

/// Which Lambda_2 profile the minimizer audit evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Lambda2Convention {
    /// The t-integral of lambda_2, e.g. t^p / p for the p-power law.
    Integral,
    /// The unnormalized power form |t|^p for power-law coefficients (the
    /// convention used when the functional is written with |grad u|^p);
    /// falls back to the integral for non-power coefficients.
    PowerUnnormalized,
}

#[derive(Debug, Clone)]
pub struct MinimizerSampleSpec {
    /// Fiber-base sample points (length-m each); the origin when empty.
    pub x_samples: Vec<Vec<f64>>,
    pub t_max: f64,
    pub t_count: usize,
    /// Candidate constants C_i tried in ascending order when `c_fixed`
    /// is absent.
    pub c_candidates: Vec<f64>,
    pub c_fixed: Option<f64>,
    /// Acceptance ceiling for the subadditivity constant.
    pub cbar_max: f64,
    pub xi_samples: usize,
    pub seed: u64,
    pub convention: Lambda2Convention,
}

impl MinimizerSampleSpec {
    pub fn default_for(m: usize) -> MinimizerSampleSpec {
        MinimizerSampleSpec {
            x_samples: vec![vec![0.0; m]],
            t_max: 3.0,
            t_count: 60,
            c_candidates: (1..=40).map(|k| 0.25 * k as f64).collect(),
            c_fixed: None,
            cbar_max: 64.0,
            xi_samples: 400,
            seed: 17,
            convention: Lambda2Convention::Integral,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisResult {
    pub name: String,
    pub pass: bool,
    pub worst_value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerAuditReport {
    /// Per-coefficient hypothesis results.
    pub coefficient_checks: Vec<Vec<HypothesisResult>>,
    /// Constant C_i that made the eigenvalue bounds pass, when one did.
    pub c_used: Vec<Option<f64>>,
    pub potential_checks: Vec<HypothesisResult>,
    pub pass: bool,
}

fn lambda2_profile(coef: &Coefficient, conv: Lambda2Convention, x: &[f64], t: f64) -> f64 {
    let base = coef.big_lambda2(x, t);
    match conv {
        Lambda2Convention::Integral => base,
        Lambda2Convention::PowerUnnormalized => match coef {
            Coefficient::PPower { p } | Coefficient::XModulated { p, .. } => base * p,
            _ => base,
        },
    }
}

/// Audits the structural hypotheses under which bounded local minimizers
/// obey the quadratic energy-growth bound: positivity of lambda_1, the
/// eigenvalue bounds lambda_k t^2 <= C Lambda_2 on (0, C], nonnegativity
/// and subadditivity of Lambda_2, a monotone growth envelope, and the sign
/// conditions on F (F <= 0, F = 0 on the unit sphere, F bounded on the
/// unit ball). Always returns a report; `pass` summarizes it.
pub fn minimizer_conditions_audit(
    problem: &Problem,
    spec: &MinimizerSampleSpec,
) -> MinimizerAuditReport {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coefficient_checks = Vec::new();
    let mut c_used = Vec::new();
    let xs: Vec<Vec<f64>> = if spec.x_samples.is_empty() {
        vec![vec![0.0; problem.grid.dim_x()]]
    } else {
        spec.x_samples.clone()
    };
    for coef in &problem.coefficients {
        let mut checks = Vec::new();
        let l2 = |x: &[f64], t: f64| lambda2_profile(coef, spec.convention, x, t);

        // lambda_1 > 0 on (0, t_max]
        let mut worst = f64::INFINITY;
        let mut where_ = (0.0, 0.0);
        for x in &xs {
            for k in 1..=spec.t_count {
                let t = spec.t_max * k as f64 / spec.t_count as f64;
                let v = coef.lambda1(x, t);
                if v < worst {
                    worst = v;
                    where_ = (x.first().copied().unwrap_or(0.0), t);
                }
            }
        }
        checks.push(HypothesisResult {
            name: "lambda1-positive".into(),
            pass: worst > 0.0,
            worst_value: worst,
            detail: format!("min lambda_1 = {worst:.6e} at (x_1, t) = {where_:?}"),
        });

        // lambda_1 t^2, lambda_2 t^2 <= C Lambda_2 on (0, C]
        let candidates: Vec<f64> = match spec.c_fixed {
            Some(c) => vec![c],
            None => spec.c_candidates.clone(),
        };
        let mut found: Option<f64> = None;
        let mut last_ratio = f64::INFINITY;
        for &c in &candidates {
            let mut ratio = 0.0f64;
            for x in &xs {
                for k in 1..=spec.t_count {
                    let t = c * k as f64 / spec.t_count as f64;
                    let big = l2(x, t);
                    if big <= 0.0 {
                        ratio = f64::INFINITY;
                        continue;
                    }
                    ratio = ratio
                        .max(coef.lambda1(x, t) * t * t / big)
                        .max(coef.lambda2(x, t) * t * t / big);
                }
            }
            last_ratio = ratio;
            if ratio <= c {
                found = Some(c);
                break;
            }
        }
        checks.push(HypothesisResult {
            name: "eigenvalue-bound".into(),
            pass: found.is_some(),
            worst_value: last_ratio,
            detail: match found {
                Some(c) => format!("holds with C = {c}"),
                None => format!("no candidate C worked; last ratio {last_ratio:.3e}"),
            },
        });
        c_used.push(found);

        // Lambda_2 >= 0
        let mut min_l2 = f64::INFINITY;
        for x in &xs {
            for k in 0..=spec.t_count {
                let t = spec.t_max * k as f64 / spec.t_count as f64;
                min_l2 = min_l2.min(l2(x, t));
            }
        }
        checks.push(HypothesisResult {
            name: "lambda2-integral-nonnegative".into(),
            pass: min_l2 >= -1e-14,
            worst_value: min_l2,
            detail: format!("min Lambda_2 = {min_l2:.3e}"),
        });

        // subadditivity Lambda_2(s + t) <= Cbar (Lambda_2(s) + Lambda_2(t))
        let mut cbar = 0.0f64;
        for x in &xs {
            for a in 1..=spec.t_count {
                for b in a..=spec.t_count {
                    let s = 0.5 * spec.t_max * a as f64 / spec.t_count as f64;
                    let t = 0.5 * spec.t_max * b as f64 / spec.t_count as f64;
                    let denom = l2(x, s) + l2(x, t);
                    if denom > 0.0 {
                        cbar = cbar.max(l2(x, s + t) / denom);
                    }
                }
            }
        }
        checks.push(HypothesisResult {
            name: "subadditive".into(),
            pass: cbar.is_finite() && cbar <= spec.cbar_max,
            worst_value: cbar,
            detail: format!("max ratio Cbar = {cbar:.4}"),
        });

        // growth envelope: s -> sup_x Lambda_2(x, s) monotone increasing
        let mut monotone = true;
        let mut prev = 0.0;
        for k in 0..=spec.t_count {
            let t = spec.t_max * k as f64 / spec.t_count as f64;
            let g = xs.iter().map(|x| l2(x, t)).fold(0.0f64, f64::max);
            if g < prev - 1e-14 {
                monotone = false;
            }
            prev = g;
        }
        checks.push(HypothesisResult {
            name: "growth-envelope-monotone".into(),
            pass: monotone,
            worst_value: prev,
            detail: format!("sup_x Lambda_2(x, t_max) = {prev:.4e}"),
        });

        coefficient_checks.push(checks);
    }

    // potential-side hypotheses
    let n = problem.n;
    let mut potential_checks = Vec::new();
    let sphere_sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r > 1e-3 {
                return v.iter().map(|x| x / r).collect();
            }
        }
    };

    let mut max_f = f64::NEG_INFINITY;
    let mut max_point = vec![0.0; n];
    for _ in 0..spec.xi_samples {
        let x = &xs[rng.random_range(0..xs.len())];
        let xi: Vec<f64> = (0..n).map(|_| rng.random_range(-2.5..2.5)).collect();
        let v = problem.potential.value(x, &xi);
        if v > max_f {
            max_f = v;
            max_point = xi;
        }
    }
    potential_checks.push(HypothesisResult {
        name: "F-nonpositive".into(),
        pass: max_f <= 1e-12,
        worst_value: max_f,
        detail: format!("max F = {max_f:.3e} at {max_point:?}"),
    });

    let mut sphere_max = 0.0f64;
    for _ in 0..spec.xi_samples {
        let x = &xs[rng.random_range(0..xs.len())];
        let xi = sphere_sample(&mut rng);
        sphere_max = sphere_max.max(problem.potential.value(x, &xi).abs());
    }
    potential_checks.push(HypothesisResult {
        name: "F-vanishes-on-unit-sphere".into(),
        pass: sphere_max <= 1e-12,
        worst_value: sphere_max,
        detail: format!("max |F| on sampled sphere = {sphere_max:.3e}"),
    });

    let mut ball_sup = 0.0f64;
    for _ in 0..spec.xi_samples {
        let x = &xs[rng.random_range(0..xs.len())];
        let mut xi = sphere_sample(&mut rng);
        let r: f64 = rng.random_range(0.0..1.0);
        for v in xi.iter_mut() {
            *v *= r;
        }
        ball_sup = ball_sup.max(problem.potential.value(x, &xi).abs());
    }
    potential_checks.push(HypothesisResult {
        name: "F-bounded-on-unit-ball".into(),
        pass: ball_sup.is_finite(),
        worst_value: ball_sup,
        detail: format!("sup |F| over sampled unit ball = {ball_sup:.4e}"),
    });

    let pass = coefficient_checks
        .iter()
        .all(|cs| cs.iter().all(|c| c.pass))
        && potential_checks.iter().all(|c| c.pass);
    MinimizerAuditReport {
        coefficient_checks,
        c_used,
        potential_checks,
        pass,
    }
}
