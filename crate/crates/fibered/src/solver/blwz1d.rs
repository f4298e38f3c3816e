//! The 1D phase-separation profile: u'' = u v^2, v'' = v u^2 with u, v > 0,
//! u climbing to a linear ramp on the right, v mirrored on the left. The
//! entire solution is reflectionally symmetric (u(t) = v(-t) after
//! centering) and grows linearly; both properties are measured, not
//! assumed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::block_tridiag_solve;

#[derive(Debug, Clone)]
pub struct BlwzConfig {
    pub half_length: f64,
    pub spacing: f64,
    /// Asymptotic slopes (right slope of u, left slope of v).
    pub slopes: (f64, f64),
    pub residual_tol: f64,
    pub max_iterations: usize,
}

impl Default for BlwzConfig {
    fn default() -> Self {
        BlwzConfig {
            half_length: 30.0,
            spacing: 0.02,
            slopes: (1.0, 1.0),
            residual_tol: 1e-10,
            max_iterations: 60,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlwzProfile {
    pub ts: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// min over shifts c of max_t |u(t) - v(2c - t)|.
    pub reflection_defect: f64,
    /// Crossing point u = v used to seed the centering search.
    pub crossing: f64,
    /// True when the iteration collapsed to the zero solution.
    pub trivial: bool,
    pub nonnegative: bool,
    /// u non-decreasing, v non-increasing node-wise.
    pub monotone: (bool, bool),
    /// max of (u + v)/(1 + |t|) over the outer 20% of the domain.
    pub growth_ratio_max: f64,
    pub iterations: usize,
    pub final_residual: f64,
}

/// Fills the residual, returning its (sup, l2) norms; the line search
/// accepts on the l2 norm (sup-norm descent is not guaranteed along
/// Newton directions), convergence is judged in sup norm.
fn residual(ts: &[f64], u: &[f64], v: &[f64], h: f64, r: &mut [f64]) -> (f64, f64) {
    let n = ts.len();
    let mut sup = 0.0f64;
    let mut sq = 0.0f64;
    for i in 1..n - 1 {
        let ru = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / (h * h) - u[i] * v[i] * v[i];
        let rv = (v[i - 1] - 2.0 * v[i] + v[i + 1]) / (h * h) - v[i] * u[i] * u[i];
        r[2 * i] = ru;
        r[2 * i + 1] = rv;
        sup = sup.max(ru.abs()).max(rv.abs());
        sq += ru * ru + rv * rv;
    }
    (sup, sq.sqrt())
}

/// Centering defect: max_t |u(t) - v(2c - t)| with linear interpolation of
/// v, restricted to arguments inside the domain.
fn reflection_defect(ts: &[f64], u: &[f64], v: &[f64], c: f64) -> f64 {
    let n = ts.len();
    let lo = ts[0];
    let hi = ts[n - 1];
    let h = ts[1] - ts[0];
    let mut worst = 0.0f64;
    for i in 0..n {
        let s = 2.0 * c - ts[i];
        if s < lo || s > hi {
            continue;
        }
        let k = (((s - lo) / h).floor() as usize).min(n - 2);
        let w = (s - ts[k]) / h;
        let vi = (1.0 - w) * v[k] + w * v[k + 1];
        worst = worst.max((u[i] - vi).abs());
    }
    worst
}

/// Solves the two-component profile on [-L, L] by damped Newton with a
/// direct block-tridiagonal elimination. Boundary data pins u(-L) = 0,
/// u(L) = s_u L, v(-L) = s_v L, v(L) = 0.
pub fn blwz_profile_1d(cfg: &BlwzConfig) -> Result<BlwzProfile> {
    if cfg.half_length <= 0.0 || cfg.spacing <= 0.0 {
        return Err(Error::Domain("profile domain must be positive".into()));
    }
    let l = cfg.half_length;
    let n = (2.0 * l / cfg.spacing).round() as usize + 1;
    if n < 5 {
        return Err(Error::Domain("profile grid too coarse".into()));
    }
    let h = 2.0 * l / (n - 1) as f64;
    let ts: Vec<f64> = (0..n).map(|i| -l + i as f64 * h).collect();
    let (su, sv) = cfg.slopes;
    // smooth ramp initialization close to the far-field behavior
    let ramp = |t: f64| 0.5 * (t + (t * t + 4.0).sqrt());
    let mut u: Vec<f64> = ts.iter().map(|&t| su * ramp(t)).collect();
    let mut v: Vec<f64> = ts.iter().map(|&t| sv * ramp(-t)).collect();
    u[0] = 0.0;
    u[n - 1] = su * l;
    v[0] = sv * l;
    v[n - 1] = 0.0;

    let mut r = vec![0.0; 2 * n];
    let (mut sup, mut l2) = residual(&ts, &u, &v, h, &mut r);
    let mut iterations = 0;
    while sup > cfg.residual_tol && iterations < cfg.max_iterations {
        // Jacobian blocks: diag [[ -2/h^2 - v^2, -2uv], [-2uv, -2/h^2 - u^2]],
        // off-diagonal I/h^2, over interior nodes
        let ni = n - 2;
        let invh2 = 1.0 / (h * h);
        let mut lower = vec![vec![0.0; 4]; ni];
        let mut upper = vec![vec![0.0; 4]; ni];
        let mut diag = vec![vec![0.0; 4]; ni];
        let mut rhs = vec![vec![0.0; 2]; ni];
        for k in 0..ni {
            let i = k + 1;
            lower[k][0] = invh2;
            lower[k][3] = invh2;
            upper[k][0] = invh2;
            upper[k][3] = invh2;
            diag[k][0] = -2.0 * invh2 - v[i] * v[i];
            diag[k][1] = -2.0 * u[i] * v[i];
            diag[k][2] = -2.0 * u[i] * v[i];
            diag[k][3] = -2.0 * invh2 - u[i] * u[i];
            rhs[k][0] = -r[2 * i];
            rhs[k][1] = -r[2 * i + 1];
        }
        let delta = block_tridiag_solve(2, &lower, &diag, &upper, &rhs)?;
        // backtracking line search on the residual
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut ut = u.clone();
            let mut vt = v.clone();
            for k in 0..ni {
                ut[k + 1] += lambda * delta[k][0];
                vt[k + 1] += lambda * delta[k][1];
            }
            let mut rt = vec![0.0; 2 * n];
            let (st, lt) = residual(&ts, &ut, &vt, h, &mut rt);
            if lt <= (1.0 - 1e-4 * lambda) * l2 {
                u = ut;
                v = vt;
                r = rt;
                sup = st;
                l2 = lt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::StepFailure {
                iterations,
                residual: sup,
                message: "profile line search stalled".into(),
            });
        }
        iterations += 1;
    }

    let trivial = u.iter().chain(v.iter()).fold(0.0f64, |a, &x| a.max(x.abs()))
        < 1e-6 * (1.0 + su.max(sv) * l);
    let nonnegative = u.iter().all(|&x| x >= -1e-12) && v.iter().all(|&x| x >= -1e-12);
    let mono_u = u.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let mono_v = v.windows(2).all(|w| w[1] <= w[0] + 1e-12);

    // center at the u = v crossing, then refine by a ternary search
    let mut crossing = 0.0;
    for i in 0..n - 1 {
        let d0 = u[i] - v[i];
        let d1 = u[i + 1] - v[i + 1];
        if d0 <= 0.0 && d1 > 0.0 {
            crossing = ts[i] + h * d0.abs() / (d0.abs() + d1.abs()).max(1e-300);
            break;
        }
    }
    let defect = |c: f64| reflection_defect(&ts, &u, &v, c);
    let (mut a, mut b) = (crossing - h, crossing + h);
    for _ in 0..60 {
        let c1 = a + (b - a) / 3.0;
        let c2 = b - (b - a) / 3.0;
        if defect(c1) <= defect(c2) {
            b = c2;
        } else {
            a = c1;
        }
    }
    let center = 0.5 * (a + b);
    let reflection = defect(center).min(defect(crossing));

    let mut growth = 0.0f64;
    for i in 0..n {
        if ts[i].abs() >= 0.8 * l {
            growth = growth.max((u[i] + v[i]) / (1.0 + ts[i].abs()));
        }
    }

    Ok(BlwzProfile {
        ts,
        u,
        v,
        reflection_defect: reflection,
        crossing: center,
        trivial,
        nonnegative,
        monotone: (mono_u, mono_v),
        growth_ratio_max: growth,
        iterations,
        final_residual: sup,
    })
}
