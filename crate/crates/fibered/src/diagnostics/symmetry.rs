//! One-dimensional-symmetry diagnostics: curvature and tangential-gradient
//! residuals, direction fields and their constancy on connected components
//! of the active region, pairwise direction alignment, the image-interval
//! audit for the coupling sign, and growth-exponent fits.

use serde::Serialize;

use crate::error::Result;
use crate::fields::{DerivMode, Grid, ScalarField};
use crate::geometry::GeometryData;
use crate::model::{Problem, SolutionTuple};

#[derive(Debug, Clone, Serialize)]
pub struct MaskComponentStats {
    pub size: usize,
    pub mean_direction: Vec<f64>,
    /// max chordal deviation |nu - mean| between a node direction and
    /// the mean (equals the angle in radians for small angles; immune to
    /// the rounding blow-up of acos near 1).
    pub angular_deviation_max: f64,
    pub trace_cluster_count: usize,
    /// max spread of u over nodes sharing (to clustering tolerance) the
    /// same value of <omega, y>: zero exactly when u is a function of it.
    pub trace_spread_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentSymmetry {
    pub sup_curvature: f64,
    pub sup_tangential_grad: f64,
    pub active_fraction: f64,
    pub mask_components: Vec<MaskComponentStats>,
    pub empty_mask: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub per_component: Vec<ComponentSymmetry>,
}

/// Connected components (orthogonal adjacency, periodic wrap respected)
/// of a node mask.
fn connected_components(grid: &Grid, mask: &[bool]) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; mask.len()];
    let mut comps = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut stack = vec![start];
        let mut nodes = Vec::new();
        label[start] = id;
        while let Some(idx) = stack.pop() {
            nodes.push(idx);
            for a in 0..grid.dim_total() {
                let n = grid.axis(a).nodes;
                let stride = grid.strides()[a];
                let pos = grid.axis_position(idx, a);
                let periodic =
                    grid.axis(a).boundary == crate::fields::Boundary::Periodic;
                let mut neighbors = Vec::with_capacity(2);
                if pos > 0 {
                    neighbors.push(idx - stride);
                } else if periodic {
                    neighbors.push(idx + (n - 2) * stride);
                }
                if pos + 1 < n {
                    neighbors.push(idx + stride);
                } else if periodic {
                    neighbors.push(idx - (n - 2) * stride);
                }
                for nb in neighbors {
                    if mask[nb] && label[nb] == usize::MAX {
                        label[nb] = id;
                        stack.push(nb);
                    }
                }
            }
        }
        comps.push(nodes);
    }
    comps
}

fn trace_stats(grid: &Grid, u: &ScalarField, nodes: &[usize], omega: &[f64]) -> (usize, f64) {
    let m = grid.dim_x();
    let mut pairs: Vec<(f64, f64)> = nodes
        .iter()
        .map(|&idx| {
            let c = grid.coords_vec(idx);
            let s: f64 = omega.iter().zip(&c[m..]).map(|(w, y)| w * y).sum();
            (s, u.value(idx))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let smax = pairs
        .iter()
        .map(|p| p.0.abs())
        .fold(0.0f64, f64::max);
    let eps = 1e-9 * (1.0 + smax);
    let mut clusters = 0usize;
    let mut spread: f64 = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        let mut lo = pairs[i].1;
        let mut hi = pairs[i].1;
        while j < pairs.len() && pairs[j].0 - pairs[i].0 <= eps {
            lo = lo.min(pairs[j].1);
            hi = hi.max(pairs[j].1);
            j += 1;
        }
        clusters += 1;
        spread = spread.max(hi - lo);
        i = j;
    }
    (clusters, spread)
}

/// Flatness-of-level-sets residuals per solution component: sup K, sup
/// |grad_L |grad_y u||, plus per mask-component direction statistics and
/// the 1D trace reconstruction spread.
pub fn symmetry_residual(
    sol: &SolutionTuple,
    mode: DerivMode,
    eps_grad: Option<f64>,
) -> Result<SymmetryReport> {
    let grid = sol.grid().clone();
    let dy = grid.dim_y();
    let mut per_component = Vec::with_capacity(sol.n());
    for k in 0..sol.n() {
        let data = GeometryData::build(sol.component(k), mode, eps_grad)?;
        let mut sup_k = 0.0f64;
        let mut sup_tg = 0.0f64;
        for idx in 0..grid.len() {
            if !data.is_active(idx) {
                continue;
            }
            sup_k = sup_k.max(data.curvature_length_at(idx));
            sup_tg = sup_tg.max(data.tangential_norm_grad_sq(idx).sqrt());
        }
        let comps = connected_components(&grid, &data.mask.mask);
        let mut stats = Vec::with_capacity(comps.len());
        for nodes in &comps {
            let mut mean = vec![0.0; dy];
            let mut nu = vec![0.0; dy];
            for &idx in nodes {
                data.normal(idx, &mut nu);
                for (mi, v) in mean.iter_mut().zip(&nu) {
                    *mi += v;
                }
            }
            let norm: f64 = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                mean.iter_mut().for_each(|v| *v /= norm);
            }
            let mut dev = 0.0f64;
            for &idx in nodes {
                data.normal(idx, &mut nu);
                let chord: f64 = mean
                    .iter()
                    .zip(&nu)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dev = dev.max(chord);
            }
            let (clusters, spread) = trace_stats(&grid, sol.component(k), nodes, &mean);
            stats.push(MaskComponentStats {
                size: nodes.len(),
                mean_direction: mean,
                angular_deviation_max: dev,
                trace_cluster_count: clusters,
                trace_spread_max: spread,
            });
        }
        per_component.push(ComponentSymmetry {
            sup_curvature: sup_k,
            sup_tangential_grad: sup_tg,
            active_fraction: data.mask.active_fraction,
            empty_mask: comps.is_empty(),
            mask_components: stats,
        });
    }
    Ok(SymmetryReport { per_component })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AlignmentVerdict {
    Aligned,
    AntiAligned,
    Mixed,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairAlignment {
    pub i: usize,
    pub j: usize,
    pub dot_min: f64,
    pub dot_max: f64,
    pub dot_mean: f64,
    pub verdict: AlignmentVerdict,
    /// Anti-aligned directions coincide after flipping one profile's
    /// argument, so they count as aligned up to that renaming.
    pub aligned_up_to_flip: bool,
    pub overlap_nodes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalAudit {
    pub i: usize,
    pub j: usize,
    /// Whether a product of open intervals meeting the image was found on
    /// which the sampled coupling keeps one strict sign.
    pub found: bool,
    pub sign: i8,
    pub intervals: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlignmentReport {
    pub pairs: Vec<PairAlignment>,
    pub interval_audits: Vec<IntervalAudit>,
}

/// Pairwise alignment of the direction fields omega_i = grad_y u^i /
/// |grad_y u^i| on the overlap of the active masks, with the
/// image-interval audit of the coupling sign hypothesis.
pub fn direction_alignment(
    problem: &Problem,
    sol: &SolutionTuple,
    mode: DerivMode,
    tol: f64,
) -> Result<AlignmentReport> {
    let grid = sol.grid().clone();
    let m = grid.dim_x();
    let dy = grid.dim_y();
    let eps = problem.eps_grad(sol);
    let datas: Vec<GeometryData> = (0..sol.n())
        .map(|k| GeometryData::build(sol.component(k), mode, Some(eps)))
        .collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    for i in 0..sol.n() {
        for j in (i + 1)..sol.n() {
            let mut dot_min = f64::INFINITY;
            let mut dot_max = f64::NEG_INFINITY;
            let mut acc = 0.0;
            let mut count = 0usize;
            let mut ni = vec![0.0; dy];
            let mut nj = vec![0.0; dy];
            for idx in 0..grid.len() {
                if !datas[i].is_active(idx) || !datas[j].is_active(idx) {
                    continue;
                }
                datas[i].normal(idx, &mut ni);
                datas[j].normal(idx, &mut nj);
                let d: f64 = ni.iter().zip(&nj).map(|(a, b)| a * b).sum();
                dot_min = dot_min.min(d);
                dot_max = dot_max.max(d);
                acc += d;
                count += 1;
            }
            let verdict = if count == 0 {
                AlignmentVerdict::Mixed
            } else if dot_min >= 1.0 - tol {
                AlignmentVerdict::Aligned
            } else if dot_max <= -1.0 + tol {
                AlignmentVerdict::AntiAligned
            } else {
                AlignmentVerdict::Mixed
            };
            pairs.push(PairAlignment {
                i,
                j,
                dot_min,
                dot_max,
                dot_mean: if count > 0 { acc / count as f64 } else { 0.0 },
                verdict,
                aligned_up_to_flip: matches!(
                    verdict,
                    AlignmentVerdict::Aligned | AlignmentVerdict::AntiAligned
                ),
                overlap_nodes: count,
            });
        }
    }

    // interval audit: grow an axis-aligned box around the image point with
    // the strongest coupling while the sampled sign stays strict
    let mut interval_audits = Vec::new();
    let n = sol.n();
    let len = grid.len();
    let mut image: Vec<Vec<f64>> = Vec::with_capacity(len.min(4096));
    let stride = (len / 4096).max(1);
    let mut uv = vec![0.0; n];
    for idx in (0..len).step_by(stride) {
        sol.values_at(idx, &mut uv);
        image.push(uv.clone());
    }
    let x_ref = vec![0.0; m];
    let mut fh = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut best: Option<(usize, f64)> = None;
            for (p, xi) in image.iter().enumerate() {
                problem.potential.hessian(&x_ref, xi, &mut fh);
                let v = fh[i * n + j];
                if best.map(|(_, b)| v.abs() > b.abs()).unwrap_or(true) {
                    best = Some((p, v));
                }
            }
            let (seed_idx, fval) = best.unwrap();
            if fval == 0.0 {
                interval_audits.push(IntervalAudit {
                    i,
                    j,
                    found: false,
                    sign: 0,
                    intervals: None,
                });
                continue;
            }
            let sign = if fval > 0.0 { 1i8 } else { -1i8 };
            let seed = image[seed_idx].clone();
            // image bounding box to limit growth
            let mut lo = seed.clone();
            let mut hi = seed.clone();
            let mut span = vec![0.0; n];
            for c in 0..n {
                let cmin = image.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min);
                let cmax = image
                    .iter()
                    .map(|p| p[c])
                    .fold(f64::NEG_INFINITY, f64::max);
                span[c] = (cmax - cmin).max(1e-6);
                let d = 1e-3 * span[c];
                lo[c] -= d;
                hi[c] += d;
            }
            let sign_ok = |lo: &[f64], hi: &[f64]| -> bool {
                let mut fh = vec![0.0; n * n];
                let pts = 5usize;
                let mut xi = vec![0.0; n];
                let mut idxs = vec![0usize; n];
                loop {
                    for c in 0..n {
                        xi[c] = lo[c] + (hi[c] - lo[c]) * idxs[c] as f64 / (pts - 1) as f64;
                    }
                    problem.potential.hessian(&x_ref, &xi, &mut fh);
                    let v = fh[i * n + j];
                    if (sign > 0 && v <= 0.0) || (sign < 0 && v >= 0.0) {
                        return false;
                    }
                    let mut c = 0;
                    loop {
                        idxs[c] += 1;
                        if idxs[c] < pts {
                            break;
                        }
                        idxs[c] = 0;
                        c += 1;
                        if c == n {
                            return true;
                        }
                    }
                }
            };
            if !sign_ok(&lo, &hi) {
                interval_audits.push(IntervalAudit {
                    i,
                    j,
                    found: false,
                    sign,
                    intervals: None,
                });
                continue;
            }
            // greedy expansion, face by face
            for _round in 0..24 {
                let mut grew = false;
                for c in 0..n {
                    let step = 0.05 * span[c];
                    let mut trial_hi = hi.clone();
                    trial_hi[c] += step;
                    if sign_ok(&lo, &trial_hi) {
                        hi = trial_hi;
                        grew = true;
                    }
                    let mut trial_lo = lo.clone();
                    trial_lo[c] -= step;
                    if sign_ok(&trial_lo, &hi) {
                        lo = trial_lo;
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
            }
            interval_audits.push(IntervalAudit {
                i,
                j,
                found: true,
                sign,
                intervals: Some(
                    lo.iter().zip(&hi).map(|(&a, &b)| [a, b]).collect(),
                ),
            });
        }
    }
    Ok(AlignmentReport {
        pairs,
        interval_audits,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthExponentReport {
    pub alpha: Option<f64>,
    pub c: Option<f64>,
    pub samples: Vec<(f64, f64)>,
    pub trivial: bool,
    pub skipped_nonpositive: usize,
}

fn fit_log_growth(samples: &[(f64, f64)]) -> (Option<f64>, Option<f64>, usize) {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|&(r, v)| ((1.0 + r).ln(), v.ln()))
        .collect();
    let skipped = samples.len() - pts.len();
    if pts.len() < 2 {
        return (None, None, skipped);
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return (None, None, skipped);
    }
    let alpha = (n * sxy - sx * sy) / denom;
    let c = ((sy - alpha * sx) / n).exp();
    (Some(alpha), Some(c), skipped)
}

/// Fits max_{|X| = R} sum_i u^i against C (1 + R)^alpha over shell nodes.
pub fn growth_exponent(
    sol: &SolutionTuple,
    radii: &[f64],
    shell_width: Option<f64>,
) -> Result<GrowthExponentReport> {
    let grid = sol.grid().clone();
    let n = grid.dim_total();
    let width = shell_width.unwrap_or_else(|| grid.max_spacing() * 1.01);
    let mut coords = vec![0.0; n];
    let mut uv = vec![0.0; sol.n()];
    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut best = f64::NEG_INFINITY;
        let mut found = false;
        for idx in 0..grid.len() {
            grid.coords(idx, &mut coords);
            let rho: f64 = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (rho - r).abs() <= width {
                sol.values_at(idx, &mut uv);
                best = best.max(uv.iter().sum());
                found = true;
            }
        }
        if found {
            samples.push((r, best));
        }
    }
    let peak = samples.iter().map(|(_, v)| v.abs()).fold(0.0f64, f64::max);
    let trivial = peak < 1e-10 * (1.0 + sol.value_bound());
    let (alpha, c, skipped) = if trivial {
        (None, None, samples.len())
    } else {
        fit_log_growth(&samples)
    };
    Ok(GrowthExponentReport {
        alpha,
        c,
        samples,
        trivial,
        skipped_nonpositive: skipped,
    })
}

/// Growth-exponent fit for a 1D two-component profile:
/// max(u + v at +R, u + v at -R) against C (1 + R)^alpha.
pub fn growth_exponent_profile(
    ts: &[f64],
    u: &[f64],
    v: &[f64],
    radii: &[f64],
) -> GrowthExponentReport {
    let interp = |t: f64| -> Option<f64> {
        if t < ts[0] || t > *ts.last().unwrap() {
            return None;
        }
        let h = ts[1] - ts[0];
        let k = (((t - ts[0]) / h).floor() as usize).min(ts.len() - 2);
        let w = (t - ts[k]) / h;
        Some((1.0 - w) * (u[k] + v[k]) + w * (u[k + 1] + v[k + 1]))
    };
    let mut samples = Vec::new();
    for &r in radii {
        let a = interp(r);
        let b = interp(-r);
        match (a, b) {
            (Some(x), Some(y)) => samples.push((r, x.max(y))),
            (Some(x), None) | (None, Some(x)) => samples.push((r, x)),
            (None, None) => {}
        }
    }
    let peak = samples.iter().map(|(_, v)| v.abs()).fold(0.0f64, f64::max);
    let umax = u.iter().chain(v).fold(0.0f64, |a, &x| a.max(x.abs()));
    let trivial = peak < 1e-10 * (1.0 + umax);
    let (alpha, c, skipped) = if trivial {
        (None, None, samples.len())
    } else {
        fit_log_growth(&samples)
    };
    GrowthExponentReport {
        alpha,
        c,
        samples,
        trivial,
        skipped_nonpositive: skipped,
    }
}
