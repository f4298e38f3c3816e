//! Solvers for the system on boxes: a damped Newton iteration (fast path)
//! and a semi-implicit gradient flow (robust path), plus the dedicated 1D
//! phase-separation profile solver and 1D-to-ND extension helpers.

pub mod blwz1d;
pub mod checkpoint;
pub mod extend;
pub(crate) mod system;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{strong_residual, Problem, SolutionTuple};

pub use blwz1d::{blwz_profile_1d, BlwzConfig, BlwzProfile};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use extend::{extend_1d_to_nd, ExtendOptions, Extended};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// Semi-implicit pseudo-time stepping on the energy gradient.
    GradientFlow,
    /// Damped Newton on the discrete residual with a Levenberg shift.
    DampedNewton,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Pseudo-time step (gradient flow) or initial Levenberg shift scale
    /// (Newton).
    pub step: f64,
    /// Target sup-norm of the strong residual over the defined nodes.
    pub residual_tol: f64,
    pub max_iterations: usize,
    pub log_every: usize,
    /// Write checkpoint fields every this many iterations.
    pub checkpoint_every: Option<usize>,
    pub checkpoint_dir: Option<std::path::PathBuf>,
    /// Iteration counter offset when resuming from a checkpoint.
    pub start_iteration: usize,
}

impl SolverConfig {
    pub fn newton(residual_tol: f64, max_iterations: usize) -> SolverConfig {
        SolverConfig {
            scheme: Scheme::DampedNewton,
            step: 1e-8,
            residual_tol,
            max_iterations,
            log_every: 1,
            checkpoint_every: None,
            checkpoint_dir: None,
            start_iteration: 0,
        }
    }

    pub fn gradient_flow(step: f64, residual_tol: f64, max_iterations: usize) -> SolverConfig {
        SolverConfig {
            scheme: Scheme::GradientFlow,
            step,
            residual_tol,
            max_iterations,
            log_every: 10,
            checkpoint_every: None,
            checkpoint_dir: None,
            start_iteration: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.residual_tol <= 0.0 {
            return Err(Error::Domain("residual_tol must be positive".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::Domain("max_iterations must be at least 1".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::Domain("step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LogEntry {
    pub iteration: usize,
    pub residual: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceLog {
    pub entries: Vec<LogEntry>,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
}

/// Residual sup-norm over the nodes where the strong residual is defined.
pub fn residual_sup(problem: &Problem, sol: &SolutionTuple) -> Result<f64> {
    let (r, mask) = strong_residual(problem, sol)?;
    let mut worst = 0.0f64;
    for f in &r {
        for (v, &m) in f.values().iter().zip(&mask) {
            if m {
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Drives the residual below `config.residual_tol`. Dirichlet end planes
/// keep the initial iterate's values; zero-flux and periodic planes are
/// treated by the stencils. Newton measures the face-flux strong residual;
/// the gradient flow measures the weight-normalized gradient of the
/// discrete energy (both are second-order consistent forms of the same
/// operator). Returns the solution and the convergence log;
/// `converged = false` with the final iterate is not an error, a
/// line-search breakdown is.
pub fn solve(
    problem: &Problem,
    init: SolutionTuple,
    config: &SolverConfig,
) -> Result<(SolutionTuple, ConvergenceLog)> {
    config.validate()?;
    if !problem.grid.same_layout(init.grid()) {
        return Err(Error::GridMismatch(
            "initial iterate grid differs from problem grid".into(),
        ));
    }
    if init.n() != problem.n {
        return Err(Error::DimensionMismatch(format!(
            "initial iterate has {} components, problem {}",
            init.n(),
            problem.n
        )));
    }
    match config.scheme {
        Scheme::DampedNewton => system::newton_solve(problem, init, config),
        Scheme::GradientFlow => system::gradient_flow_solve(problem, init, config),
    }
}

/// True when the energy trail never rises (holds for accepted
/// gradient-flow steps).
pub fn energy_non_increasing(log: &ConvergenceLog) -> bool {
    log.entries
        .windows(2)
        .all(|w| w[1].energy <= w[0].energy + 1e-12 * (1.0 + w[0].energy.abs()))
}
