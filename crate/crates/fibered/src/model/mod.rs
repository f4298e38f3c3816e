//! The PDE system: coefficients, coupling potential, problem container,
//! solution tuples, residuals and the energy functional.

pub mod coefficient;
pub mod config;
pub mod energy;
pub mod potential;
pub mod residual;

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fields::{grad, y_grad, DerivMode, Grid, ScalarField, VectorField};

pub use coefficient::{AlphaProfile, Coefficient, CustomCoefficient};
pub use config::{load_problem, load_problem_str, ProblemDoc};
pub use energy::{
    energy, lambda_profiles, minimizer_conditions_audit, HypothesisResult, Lambda2Convention,
    LambdaProfiles, MinimizerAuditReport, MinimizerSampleSpec,
};
pub use potential::{CustomPotential, Potential};
pub use residual::{
    assemble_a, derived_residual, largest_eigenvalue, strong_residual, weak_residual,
    DerivedResidualReport,
};

/// Where Dirichlet boundary values come from when solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcSpec {
    /// The initial iterate's boundary values are held fixed.
    DirichletFromInit,
    /// Homogeneous Dirichlet data.
    ZeroDirichlet,
}

/// A complete problem instance on a grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub n: usize,
    pub coefficients: Vec<Coefficient>,
    pub potential: Potential,
    pub grid: Arc<Grid>,
    pub bc: BcSpec,
    /// Scale factor of the degenerate-gradient threshold:
    /// eps_grad = factor * (1 + max ||grad u||).
    pub eps_grad_factor: f64,
}

impl Problem {
    pub fn new(
        n: usize,
        coefficients: Vec<Coefficient>,
        potential: Potential,
        grid: Arc<Grid>,
    ) -> Result<Problem> {
        if n < 1 {
            return Err(Error::Domain("component count must be at least 1".into()));
        }
        if coefficients.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} components",
                coefficients.len(),
                n
            )));
        }
        if let Some(req) = potential.required_n() {
            if req != n {
                return Err(Error::DimensionMismatch(format!(
                    "potential '{}' needs n = {req}, problem has n = {n}",
                    potential.label()
                )));
            }
        }
        Ok(Problem {
            n,
            coefficients,
            potential,
            grid,
            bc: BcSpec::DirichletFromInit,
            eps_grad_factor: 1e-8,
        })
    }

    /// Degenerate-gradient threshold for this solution.
    pub fn eps_grad(&self, sol: &SolutionTuple) -> f64 {
        self.eps_grad_factor * (1.0 + sol.grad_bound())
    }
}

/// The n-tuple (u^1, ..., u^n) with cached finite-difference gradients.
pub struct SolutionTuple {
    components: Vec<ScalarField>,
    fd_grads: OnceLock<Vec<VectorField>>,
    fd_y_grads: OnceLock<Vec<VectorField>>,
}

impl Clone for SolutionTuple {
    fn clone(&self) -> Self {
        SolutionTuple {
            components: self.components.clone(),
            fd_grads: OnceLock::new(),
            fd_y_grads: OnceLock::new(),
        }
    }
}

impl std::fmt::Debug for SolutionTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolutionTuple")
            .field("n", &self.components.len())
            .field("nodes", &self.grid().len())
            .finish()
    }
}

impl SolutionTuple {
    pub fn new(components: Vec<ScalarField>) -> Result<SolutionTuple> {
        if components.is_empty() {
            return Err(Error::Domain("solution tuple cannot be empty".into()));
        }
        let g0 = components[0].grid();
        for c in &components[1..] {
            if !c.grid().same_layout(g0) {
                return Err(Error::GridMismatch(
                    "all solution components must share one grid".into(),
                ));
            }
        }
        Ok(SolutionTuple {
            components,
            fd_grads: OnceLock::new(),
            fd_y_grads: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.components[0].grid()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    /// Finite-difference gradients, computed once and cached.
    pub fn fd_gradients(&self) -> &[VectorField] {
        self.fd_grads.get_or_init(|| {
            self.components
                .iter()
                .map(|c| grad(c, DerivMode::Fd).expect("fd gradient cannot fail"))
                .collect()
        })
    }

    pub fn fd_y_gradients(&self) -> &[VectorField] {
        self.fd_y_grads.get_or_init(|| {
            self.components
                .iter()
                .map(|c| y_grad(c, DerivMode::Fd).expect("fd gradient cannot fail"))
                .collect()
        })
    }

    /// Gradient of component i in the requested mode.
    pub fn gradient(&self, i: usize, mode: DerivMode) -> Result<VectorField> {
        match mode {
            DerivMode::Fd => Ok(self.fd_gradients()[i].clone()),
            DerivMode::Analytic => grad(&self.components[i], DerivMode::Analytic),
        }
    }

    /// max_i sup |u^i|.
    pub fn value_bound(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_abs())
            .fold(0.0, f64::max)
    }

    /// max_i sup ||grad u^i|| (finite differences).
    pub fn grad_bound(&self) -> f64 {
        self.fd_gradients()
            .iter()
            .map(|g| g.max_norm())
            .fold(0.0, f64::max)
    }

    /// Values of all components at one node.
    pub fn values_at(&self, idx: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.value(idx);
        }
    }
}
