//! Radial scans: the logarithmic cutoff family, quadratic energy-growth
//! checks with the annulus estimate, and the cutoff-decay scan that makes
//! the capacity argument executable on bounded radius lists.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::analytic::Analytic;
use crate::fields::{
    grad, inradius, node_weights, DerivMode, Grid, ScalarField,
};
use crate::linalg::gauss_panels;
use crate::model::{Coefficient, Problem, SolutionTuple};

/// The logarithmic cutoff: 1 on B_sqrt(R), 2 (log R - log|X|)/log R on the
/// annulus, 0 outside B_R.
pub fn eta_r(rho: f64, r: f64) -> f64 {
    let sq = r.sqrt();
    if rho <= sq {
        1.0
    } else if rho >= r {
        0.0
    } else {
        2.0 * (r.ln() - rho.ln()) / r.ln()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffInfo {
    /// max over annulus nodes of |grad eta| * 2 |X| log R. The bound as
    /// stated normalizes this to 1; the cutoff defined above actually has
    /// |grad eta| = 2/(|X| log R), so the measured value sits near 4.
    pub grad_ratio_vs_stated_bound: f64,
    /// max over annulus nodes of |grad eta| * |X| log R / 2, against the
    /// bound consistent with the definition; at most 1 + O(h/sqrt(R)).
    pub grad_ratio_vs_exact_bound: f64,
    /// Whether B_R fits inside the grid box.
    pub contained: bool,
}

/// Signed cutoff tuple eta^i = sign_i eta_R, with a numerical audit of the
/// gradient bound on the annulus.
pub fn log_cutoff(
    r: f64,
    grid: &Arc<Grid>,
    signs: &[f64],
) -> Result<(Vec<ScalarField>, CutoffInfo)> {
    if r <= 1.0 {
        return Err(Error::Domain(format!(
            "log cutoff needs R > 1, got {r}"
        )));
    }
    for (i, s) in signs.iter().enumerate() {
        if *s != 1.0 && *s != -1.0 {
            return Err(Error::Domain(format!(
                "sign {i} must be +1 or -1, got {s}"
            )));
        }
    }
    let n = grid.dim_total();
    let origin = vec![0.0; n];
    let contained = inradius(grid, &origin) >= r;
    let mut coords = vec![0.0; n];
    let base: Vec<f64> = (0..grid.len())
        .map(|idx| {
            grid.coords(idx, &mut coords);
            let rho: f64 = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
            eta_r(rho, r)
        })
        .collect();
    let base_field = ScalarField::from_values(grid.clone(), base.clone())?;
    let geta = grad(&base_field, DerivMode::Fd)?;
    let sq = r.sqrt();
    let mut stated = 0.0f64;
    let mut exact = 0.0f64;
    for idx in 0..grid.len() {
        grid.coords(idx, &mut coords);
        let rho: f64 = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rho <= sq || rho >= r {
            continue;
        }
        let gnorm = geta.norm_at(idx);
        stated = stated.max(gnorm * 2.0 * rho * r.ln());
        exact = exact.max(gnorm * rho * r.ln() / 2.0);
    }
    let fields = signs
        .iter()
        .map(|s| {
            ScalarField::from_values(grid.clone(), base.iter().map(|v| s * v).collect())
        })
        .collect::<Result<_>>()?;
    Ok((
        fields,
        CutoffInfo {
            grad_ratio_vs_stated_bound: stated,
            grad_ratio_vs_exact_bound: exact,
            contained,
        },
    ))
}

/// Analytic solution tuple for off-grid radial quadrature.
pub struct AnalyticTuple {
    pub dim: usize,
    pub m: usize,
    pub comps: Vec<Arc<dyn Analytic>>,
}

impl AnalyticTuple {
    pub fn new(dim: usize, m: usize, comps: Vec<Arc<dyn Analytic>>) -> Result<AnalyticTuple> {
        for c in &comps {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch(
                    "analytic tuple components must share the dimension".into(),
                ));
            }
        }
        Ok(AnalyticTuple { dim, m, comps })
    }
}

/// integral over the annulus r0 < |X| <= r1 in the plane, log-radial
/// Gauss panels and a uniform (periodic, spectrally accurate) angle rule.
pub fn polar_annulus_integral<F: Fn(&[f64]) -> f64>(
    f: F,
    r0: f64,
    r1: f64,
    n_theta: usize,
    panels_per_decade: usize,
) -> f64 {
    let tau = std::f64::consts::TAU;
    let angle_mean = |r: f64| -> f64 {
        let mut acc = 0.0;
        for k in 0..n_theta {
            let th = tau * k as f64 / n_theta as f64;
            acc += f(&[r * th.cos(), r * th.sin()]);
        }
        acc / n_theta as f64
    };
    // substitute r = e^s: int f r dr = int mean(r) 2 pi e^{2s} ds
    let decades = ((r1 / r0).log10()).max(0.1);
    let panels = (panels_per_decade as f64 * decades).ceil() as usize;
    gauss_panels(
        &|s: f64| {
            let r = s.exp();
            angle_mean(r) * tau * r * r
        },
        r0.ln(),
        r1.ln(),
        panels.max(2),
    )
}

/// integral over the disc |X| <= r in the plane.
pub fn polar_disc_integral<F: Fn(&[f64]) -> f64>(
    f: F,
    r: f64,
    n_theta: usize,
    panels_per_decade: usize,
) -> f64 {
    let tau = std::f64::consts::TAU;
    let inner = r.min(1.0);
    // linear panels near the origin where the log substitution degenerates
    let head = gauss_panels(
        &|rr: f64| {
            let mut acc = 0.0;
            for k in 0..n_theta {
                let th = tau * k as f64 / n_theta as f64;
                acc += f(&[rr * th.cos(), rr * th.sin()]);
            }
            acc / n_theta as f64 * tau * rr
        },
        0.0,
        inner,
        16,
    );
    if r > inner {
        head + polar_annulus_integral(f, inner, r, n_theta, panels_per_decade)
    } else {
        head
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub r: f64,
    /// xi_i(R) = integral over B_R of Abar^i |grad u^i|^2, per component.
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma31Check {
    pub component: usize,
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    /// Least-squares slope of log xi against log R, per component.
    pub exponent_fit: Vec<Option<f64>>,
    pub xi_over_r2_max: Vec<f64>,
    pub monotone: bool,
    pub lemma: Vec<Lemma31Check>,
}

fn fit_exponents(rows: &[GrowthRow], n: usize) -> Vec<Option<f64>> {
    (0..n)
        .map(|i| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|row| row.xi[i] > 0.0)
                .map(|row| (row.r.ln(), row.xi[i].ln()))
                .collect();
            if pts.len() < 2 {
                return None;
            }
            let n = pts.len() as f64;
            let sx: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            let denom = n * sxx - sx * sx;
            if denom.abs() < 1e-300 {
                None
            } else {
                Some((n * sxy - sx * sy) / denom)
            }
        })
        .collect()
}

/// Per-node masses (radius, weight * integrand) sorted by radius, plus
/// exact evaluation of the annulus-estimate right-hand side for the
/// resulting piecewise-constant xi.
struct RadialMasses {
    radii: Vec<f64>,
    prefix: Vec<f64>,
}

impl RadialMasses {
    fn build(mut pairs: Vec<(f64, f64)>) -> RadialMasses {
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut prefix = Vec::with_capacity(pairs.len());
        let mut acc = 0.0;
        for &(_, v) in &pairs {
            acc += v;
            prefix.push(acc);
        }
        RadialMasses {
            radii: pairs.into_iter().map(|p| p.0).collect(),
            prefix,
        }
    }

    /// sum of masses with radius <= t.
    fn cumulative(&self, t: f64) -> f64 {
        match self
            .radii
            .binary_search_by(|v| v.partial_cmp(&t).unwrap())
        {
            Ok(mut i) => {
                while i + 1 < self.radii.len() && self.radii[i + 1] <= t {
                    i += 1;
                }
                self.prefix[i]
            }
            Err(0) => 0.0,
            Err(i) => self.prefix[i - 1],
        }
    }

    /// integral_{a}^{b} t^{-3} xi(t) dt with xi(t) = 2 cumulative(t),
    /// exact for the piecewise-constant cumulative.
    fn annulus_rhs_integral(&self, a: f64, b: f64) -> f64 {
        let mut cuts: Vec<f64> = self
            .radii
            .iter()
            .copied()
            .filter(|&r| r > a && r < b)
            .collect();
        cuts.push(b);
        let mut lo = a;
        let mut acc = 0.0;
        for hi in cuts {
            let xi = 2.0 * self.cumulative(lo);
            acc += xi * 0.5 * (lo.powi(-2) - hi.powi(-2));
            lo = hi;
        }
        acc
    }
}

fn lemma_check(masses: &RadialMasses, inv_r2: &[(f64, f64)], r: f64, comp: usize) -> Lemma31Check {
    let sq = r.sqrt();
    let lhs: f64 = inv_r2
        .iter()
        .filter(|&&(rad, _)| rad > sq && rad <= r)
        .map(|&(_, v)| v)
        .sum();
    let rhs = masses.annulus_rhs_integral(sq, r) + 2.0 * masses.cumulative(r) / (r * r);
    Lemma31Check {
        component: comp,
        r,
        lhs,
        rhs,
        margin: rhs - lhs,
        holds: lhs <= rhs * (1.0 + 1e-12) + 1e-300,
    }
}

/// Energy-growth scan on the grid: xi_i(R) tables, log-log exponent fits,
/// the xi/R^2 bound, and the annulus estimate
/// `int_{B_R \ B_sqrt(R)} h/|X|^2 <= int t^{-3} xi + xi(R)/R^2` verified
/// for h = Abar |grad u|^2 with xi(t) = 2 int_{B_t} h.
pub fn growth_check(
    problem: &Problem,
    sol: &SolutionTuple,
    radii: &[f64],
    mode: DerivMode,
) -> Result<GrowthReport> {
    let grid = &problem.grid;
    let n = grid.dim_total();
    let origin = vec![0.0; n];
    let rmax = inradius(grid, &origin);
    let mut radii: Vec<f64> = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if let Some(&worst) = radii.last() {
        if worst > rmax * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "radius {worst} exceeds the box inradius {rmax}: ball truncated"
            )));
        }
    }
    let w = node_weights(grid);
    let m = grid.dim_x();
    let mut per_comp_masses = Vec::with_capacity(problem.n);
    let mut per_comp_inv = Vec::with_capacity(problem.n);
    let mut coords = vec![0.0; n];
    for i in 0..problem.n {
        let g = sol.gradient(i, mode)?;
        let mut pairs = Vec::with_capacity(grid.len());
        let mut inv = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            grid.coords(idx, &mut coords);
            let rho: f64 = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
            let t = g.norm_at(idx);
            let h = if t == 0.0 {
                0.0
            } else {
                problem.coefficients[i].a_bar(&coords[..m], t) * t * t
            };
            pairs.push((rho, w[idx] * h));
            if rho > 0.0 {
                inv.push((rho, w[idx] * h / (rho * rho)));
            }
        }
        per_comp_masses.push(RadialMasses::build(pairs));
        per_comp_inv.push(inv);
    }
    let rows: Vec<GrowthRow> = radii
        .iter()
        .map(|&r| GrowthRow {
            r,
            xi: per_comp_masses.iter().map(|mm| mm.cumulative(r)).collect(),
        })
        .collect();
    let exponent_fit = fit_exponents(&rows, problem.n);
    let xi_over_r2_max = (0..problem.n)
        .map(|i| {
            rows.iter()
                .map(|row| row.xi[i] / (row.r * row.r))
                .fold(0.0f64, f64::max)
        })
        .collect();
    let monotone = (0..problem.n).all(|i| {
        rows.windows(2)
            .all(|pair| pair[1].xi[i] >= pair[0].xi[i] - 1e-14)
    });
    let mut lemma = Vec::new();
    if let Some(&r) = radii.last() {
        if r > 1.0 {
            for (i, masses) in per_comp_masses.iter().enumerate() {
                lemma.push(lemma_check(masses, &per_comp_inv[i], r, i));
            }
        }
    }
    Ok(GrowthReport {
        rows,
        exponent_fit,
        xi_over_r2_max,
        monotone,
        lemma,
    })
}

/// Growth scan for planar analytic tuples by polar quadrature; no grid,
/// radii unlimited.
pub fn growth_check_polar(
    coefs: &[Coefficient],
    tuple: &AnalyticTuple,
    radii: &[f64],
) -> Result<GrowthReport> {
    if tuple.dim != 2 {
        return Err(Error::Domain(
            "polar growth scan needs a planar tuple".into(),
        ));
    }
    let n_theta = 64;
    let ppd = 24;
    let m = tuple.m;
    let nn = tuple.comps.len();
    let mut radii: Vec<f64> = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let integrand = |k: usize| {
        let comp = tuple.comps[k].clone();
        let coef = coefs[k].clone();
        move |x: &[f64]| -> f64 {
            let mut g = [0.0; 2];
            comp.gradient(x, &mut g);
            let t = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if t == 0.0 {
                0.0
            } else {
                coef.a_bar(&x[..m], t) * t * t
            }
        }
    };
    let rows: Vec<GrowthRow> = radii
        .iter()
        .map(|&r| GrowthRow {
            r,
            xi: (0..nn)
                .map(|k| polar_disc_integral(integrand(k), r, n_theta, ppd))
                .collect(),
        })
        .collect();
    let exponent_fit = fit_exponents(&rows, nn);
    let xi_over_r2_max = (0..nn)
        .map(|i| {
            rows.iter()
                .map(|row| row.xi[i] / (row.r * row.r))
                .fold(0.0f64, f64::max)
        })
        .collect();
    let mut lemma = Vec::new();
    if let Some(&r) = radii.last() {
        if r > 1.0 {
            let sq = r.sqrt();
            for k in 0..nn {
                let f = integrand(k);
                let lhs = polar_annulus_integral(
                    |x| {
                        let r2: f64 = x.iter().map(|v| v * v).sum();
                        f(x) / r2
                    },
                    sq,
                    r,
                    n_theta,
                    ppd,
                );
                // xi(t) by quadrature at Gauss abscissae of the outer rule
                let xi_at = |t: f64| 2.0 * polar_disc_integral(&f, t, n_theta, ppd);
                let rhs = gauss_panels(&|t: f64| xi_at(t) / (t * t * t), sq, r, 24)
                    + xi_at(r) / (r * r);
                lemma.push(Lemma31Check {
                    component: k,
                    r,
                    lhs,
                    rhs,
                    margin: rhs - lhs,
                    holds: lhs <= rhs * (1.0 + 1e-9),
                });
            }
        }
    }
    Ok(GrowthReport {
        monotone: true,
        rows,
        exponent_fit,
        xi_over_r2_max,
        lemma,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffRow {
    pub r: f64,
    /// (1 / 4 log^2 R) sum_k int_{B_R \ B_sqrt(R)} Abar^k |grad_y u^k|^2 / |X|^2.
    pub value: f64,
    pub value_log_r: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffScanReport {
    pub rows: Vec<CutoffRow>,
    /// max/min of value * log R over included rows with nonzero value.
    pub bounded_factor: Option<f64>,
}

fn finish_scan(rows: Vec<CutoffRow>) -> CutoffScanReport {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| !r.excluded && r.value_log_r > 0.0)
        .map(|r| r.value_log_r)
        .collect();
    let bounded_factor = if vals.len() >= 2 {
        let mx = vals.iter().fold(f64::MIN, |a, &b| a.max(b));
        let mn = vals.iter().fold(f64::MAX, |a, &b| a.min(b));
        Some(mx / mn)
    } else {
        None
    };
    CutoffScanReport {
        rows,
        bounded_factor,
    }
}

/// Cutoff-decay scan by polar quadrature on a planar analytic tuple: the
/// capacity term of the symmetry argument, evaluated on a bounded radius
/// list; boundedness of value * log R is the executable claim. Radii at or
/// below e are excluded (degenerate log^2).
pub fn cutoff_decay_scan_polar(
    coefs: &[Coefficient],
    tuple: &AnalyticTuple,
    r_list: &[f64],
) -> Result<CutoffScanReport> {
    if tuple.dim != 2 {
        return Err(Error::Domain(
            "polar cutoff scan needs a planar tuple".into(),
        ));
    }
    let m = tuple.m;
    let mut rows = Vec::with_capacity(r_list.len());
    for &r in r_list {
        if r <= std::f64::consts::E {
            rows.push(CutoffRow {
                r,
                value: 0.0,
                value_log_r: 0.0,
                excluded: true,
            });
            continue;
        }
        let mut total = 0.0;
        for (k, comp) in tuple.comps.iter().enumerate() {
            let f = |x: &[f64]| -> f64 {
                let mut g = [0.0; 2];
                comp.gradient(x, &mut g);
                let t = (g[0] * g[0] + g[1] * g[1]).sqrt();
                if t == 0.0 {
                    return 0.0;
                }
                let gy: f64 = g[m..].iter().map(|v| v * v).sum();
                let r2: f64 = x.iter().map(|v| v * v).sum();
                coefs[k].a_bar(&x[..m], t) * gy / r2
            };
            total += polar_annulus_integral(f, r.sqrt(), r, 64, 24);
        }
        let value = total / (4.0 * r.ln() * r.ln());
        rows.push(CutoffRow {
            r,
            value,
            value_log_r: value * r.ln(),
            excluded: false,
        });
    }
    Ok(finish_scan(rows))
}

/// Grid-backed cutoff-decay scan (radii limited by the box inradius).
pub fn cutoff_decay_scan_grid(
    problem: &Problem,
    sol: &SolutionTuple,
    r_list: &[f64],
    mode: DerivMode,
) -> Result<CutoffScanReport> {
    let grid = &problem.grid;
    let n = grid.dim_total();
    let m = grid.dim_x();
    let origin = vec![0.0; n];
    let rmax = inradius(grid, &origin);
    let w = node_weights(grid);
    let mut coords = vec![0.0; n];
    let mut rows = Vec::with_capacity(r_list.len());
    for &r in r_list {
        if r <= std::f64::consts::E || r > rmax * (1.0 + 1e-12) {
            rows.push(CutoffRow {
                r,
                value: 0.0,
                value_log_r: 0.0,
                excluded: true,
            });
            continue;
        }
        let sq = r.sqrt();
        let mut total = 0.0;
        for k in 0..problem.n {
            let g = sol.gradient(k, mode)?;
            for idx in 0..grid.len() {
                grid.coords(idx, &mut coords);
                let rho: f64 = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
                if rho <= sq || rho > r {
                    continue;
                }
                let full = g.at(idx);
                let t: f64 = full.iter().map(|v| v * v).sum::<f64>().sqrt();
                if t == 0.0 {
                    continue;
                }
                let gy: f64 = full[m..].iter().map(|v| v * v).sum();
                total +=
                    w[idx] * problem.coefficients[k].a_bar(&coords[..m], t) * gy / (rho * rho);
            }
        }
        let value = total / (4.0 * r.ln() * r.ln());
        rows.push(CutoffRow {
            r,
            value,
            value_log_r: value * r.ln(),
            excluded: false,
        });
    }
    Ok(finish_scan(rows))
}
