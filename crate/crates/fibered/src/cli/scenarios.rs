//! The scenario library. Each scenario builds a problem, solves it when
//! needed, runs the selected diagnostics with the configured seed, and
//! returns named verdicts plus CSV artifacts.

use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::diagnostics::{
    abg_audit, check_f_monotone, check_sign_hypothesis, cutoff_decay_scan_polar, growth_check,
    growth_check_polar, growth_exponent_profile, log_cutoff, stability_lambda_min,
    AbgSampleSpec, AnalyticTuple, EigenOpts, Verdict,
};
use crate::diagnostics::poincare::{LhsForm, PoincareAudit};
use crate::diagnostics::testfn::{random_bump_tuple, seeded};
use crate::error::{Error, Result};
use crate::fields::analytic::{Analytic, Extended1d, LinearProfile, RadialYSquared, TrigPoly};
use crate::fields::{make_grid, sample, Boundary, DerivMode, ScalarField};
use crate::geometry::{compute_stu, identity_check, IdentityOpts};
use crate::linalg::CubicSpline;
use crate::model::{
    derived_residual, weak_residual, Coefficient, Lambda2Convention, MinimizerSampleSpec,
    Potential, Problem, SolutionTuple,
};
use crate::solver::{blwz_profile_1d, solve, BlwzConfig, BlwzProfile, SolverConfig};
use crate::cli::ScenarioOutcome;

#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub id: &'static str,
    pub description: &'static str,
    /// The mathematical object the scenario exercises.
    pub source: &'static str,
    pub tags: &'static [&'static str],
}

pub fn registry() -> &'static [Scenario] {
    &[
        Scenario {
            id: "blwz-1d",
            description: "two-component phase-separation profile on a line",
            source: "u'' = u v^2, v'' = v u^2; reflection symmetry and linear growth",
            tags: &["solver", "profile"],
        },
        Scenario {
            id: "blwz-2d-fibered",
            description: "planar fibered phase-separation system solved and audited",
            source: "-div(grad u^i) = F_i with F = -(u^1 u^2)^2/2 on a box",
            tags: &["solver", "stability", "poincare"],
        },
        Scenario {
            id: "allen-cahn-kink",
            description: "scalar double-well kink on a strip",
            source: "-laplace u = u - u^3; the tanh transition layer",
            tags: &["solver", "stability"],
        },
        Scenario {
            id: "p-laplacian-minimizer",
            description: "structural hypotheses for p-power energies",
            source: "|grad u^1|^{p_1} + |grad u^2|^{p_2} - F functionals, 1 < p < 3",
            tags: &["appendix", "audit"],
        },
        Scenario {
            id: "abg-counterexample",
            description: "two-well coupling whose mixed derivative changes sign",
            source: "W = (x1-1)^2 x2^2 + (x2^2-1)^2; the sign hypothesis must fail",
            tags: &["appendix", "audit", "expected-fail"],
        },
        Scenario {
            id: "manufactured-identity",
            description: "pointwise level-set identities on seeded analytic fields",
            source: "S, T, U, K and the two defect identities on the active region",
            tags: &["geometry", "oracle"],
        },
        Scenario {
            id: "growth-and-cutoff",
            description: "energy growth, annulus estimate and logarithmic cutoff scans",
            source: "xi(R) tables, the t^-3 annulus bound, value * log R boundedness",
            tags: &["scans"],
        },
    ]
}

pub fn find(id: &str) -> Option<&'static Scenario> {
    registry().iter().find(|s| s.id == id)
}

pub struct ScenarioCtx<'a> {
    pub out: &'a Path,
    pub seed: u64,
    pub grid_scale: f64,
}

impl ScenarioCtx<'_> {
    fn nodes(&self, base: usize) -> usize {
        (((base - 1) as f64 * self.grid_scale).round() as usize + 1).max(5)
    }
}

pub fn dispatch(id: &str, ctx: &ScenarioCtx) -> Result<ScenarioOutcome> {
    match id {
        "blwz-1d" => run_blwz_1d(ctx),
        "blwz-2d-fibered" => run_blwz_2d(ctx),
        "allen-cahn-kink" => run_allen_cahn(ctx),
        "p-laplacian-minimizer" => run_p_laplacian(ctx),
        "abg-counterexample" => run_abg(ctx),
        "manufactured-identity" => run_manufactured(ctx),
        "growth-and-cutoff" => run_growth_cutoff(ctx),
        other => Err(Error::Config {
            pointer: "/scenario".into(),
            message: format!("unknown scenario '{other}'"),
        }),
    }
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{header}")?;
    for r in rows {
        writeln!(f, "{r}")?;
    }
    Ok(())
}

fn pass_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

// ---------------------------------------------------------------------
// blwz-1d

fn run_blwz_1d(ctx: &ScenarioCtx) -> Result<ScenarioOutcome> {
    let mut out = ScenarioOutcome::default();
    let cfg = BlwzConfig {
        half_length: 30.0,
        spacing: 0.02 / ctx.grid_scale,
        slopes: (1.0, 1.0),
        residual_tol: 1e-10,
        max_iterations: 80,
    };
    let p = blwz_profile_1d(&cfg)?;
    out.verdict(
        "converged",
        pass_if(p.final_residual <= cfg.residual_tol && !p.trivial),
        format!(
            "residual {:.3e} after {} iterations",
            p.final_residual, p.iterations
        ),
    );
    out.verdict(
        "reflection-symmetry",
        pass_if(p.reflection_defect <= 1e-3),
        format!(
            "defect {:.3e} after centering at {:.4}",
            p.reflection_defect, p.crossing
        ),
    );
    out.verdict(
        "structure",
        pass_if(p.nonnegative && p.monotone.0 && p.monotone.1),
        format!(
            "nonnegative {}, u nondecreasing {}, v nonincreasing {}",
            p.nonnegative, p.monotone.0, p.monotone.1
        ),
    );
    let radii: Vec<f64> = (1..=7).map(|k| 4.0 * k as f64).collect();
    let growth = growth_exponent_profile(&p.ts, &p.u, &p.v, &radii);
    let alpha = growth.alpha.unwrap_or(f64::NAN);
    out.verdict(
        "linear-growth",
        pass_if((0.9..=1.1).contains(&alpha)),
        format!("fitted exponent {alpha:.4}"),
    );
    out.metric("reflection_defect", p.reflection_defect);
    out.metric("growth_alpha", alpha);
    out.metric("growth_ratio_max", p.growth_ratio_max);
    let rows: Vec<String> = p
        .ts
        .iter()
        .zip(p.u.iter().zip(&p.v))
        .map(|(t, (u, v))| format!("{t},{u},{v}"))
        .collect();
    write_csv(&ctx.out.join("profile.csv"), "t,u,v", &rows)?;
    out.files.push("profile.csv".into());
    Ok(out)
}

// ---------------------------------------------------------------------
// blwz-2d-fibered

/// Splined 1D profile pair for boundary data and initial iterates.
pub fn blwz_profile_splines(spacing: f64) -> Result<(BlwzProfile, CubicSpline, CubicSpline)> {
    let profile = blwz_profile_1d(&BlwzConfig {
        half_length: 30.0,
        spacing,
        slopes: (1.0, 1.0),
        residual_tol: 1e-10,
        max_iterations: 80,
    })?;
    let su = CubicSpline::natural(profile.ts.clone(), profile.u.clone())?;
    let sv = CubicSpline::natural(profile.ts.clone(), profile.v.clone())?;
    Ok((profile, su, sv))
}

/// The planar fibered phase-separation problem with profile boundary data,
/// solved by damped Newton. Returns the problem, the solution and the
/// convergence flag.
pub fn solve_blwz_2d(
    half: f64,
    nodes: usize,
    residual_tol: f64,
) -> Result<(Problem, SolutionTuple, bool)> {
    let (_, su, sv) = blwz_profile_splines(0.05)?;
    let grid = make_grid(
        &[[-half, half], [-half, half]],
        &[nodes, nodes],
        1,
        &[Boundary::Dirichlet, Boundary::Dirichlet],
    )?;
    let problem = Problem::new(
        2,
        vec![Coefficient::constant(), Coefficient::constant()],
        Potential::Blwz,
        grid.clone(),
    )?;
    let u0 = sample(
        Arc::new(Extended1d::new(2, 1, vec![1.0], Arc::new(su))) as Arc<dyn Analytic>,
        grid.clone(),
    )?;
    let v0 = sample(
        Arc::new(Extended1d::new(2, 1, vec![1.0], Arc::new(sv))) as Arc<dyn Analytic>,
        grid.clone(),
    )?;
    let init = SolutionTuple::new(vec![u0, v0])?;
    let cfg = SolverConfig::newton(residual_tol, 40);
    let (sol, log) = solve(&problem, init, &cfg)?;
    Ok((problem, sol, log.converged))
}

/// 10 h^2 max|F_ij| over nodes: the stability tolerance scale.
pub fn stability_tolerance(problem: &Problem, sol: &SolutionTuple) -> f64 {
    let grid = &problem.grid;
    let m = grid.dim_x();
    let n = problem.n;
    let mut xs = vec![0.0; grid.dim_total()];
    let mut uv = vec![0.0; n];
    let mut fh = vec![0.0; n * n];
    let mut fmax = 0.0f64;
    for idx in 0..grid.len() {
        grid.coords(idx, &mut xs);
        sol.values_at(idx, &mut uv);
        problem.potential.hessian(&xs[..m], &uv, &mut fh);
        for v in &fh {
            fmax = fmax.max(v.abs());
        }
    }
    let h = grid.max_spacing();
    10.0 * h * h * fmax
}

fn run_blwz_2d(ctx: &ScenarioCtx) -> Result<ScenarioOutcome> {
    let mut out = ScenarioOutcome::default();
    let nodes = ctx.nodes(61);
    let (problem, sol, converged) = solve_blwz_2d(5.0, nodes, 5e-9)?;
    out.verdict("solve", pass_if(converged), format!("{nodes}x{nodes} grid"));
    if !converged {
        for name in ["monotone", "monotone-implies-stable", "derived-system", "poincare"] {
            out.verdict(name, Verdict::Skipped, "solver did not converge");
        }
        return Ok(out);
    }

    let mono = check_f_monotone(&problem, &sol, None)?;
    out.verdict(
        "monotone",
        pass_if(mono.pass),
        format!(
            "min |du/dy| = {:.3e} (threshold {:.3e}), pair min {:.3e}",
            mono.per_component_min_abs
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b)),
            mono.eps_mono,
            mono.pair_minima[0].min_value
        ),
    );

    let tol_stab = stability_tolerance(&problem, &sol);
    let eig = stability_lambda_min(
        &problem,
        &sol,
        DerivMode::Fd,
        &EigenOpts {
            tol: 5e-8,
            ..Default::default()
        },
    )?;
    let stable = eig.lambda_min >= -tol_stab;
    out.verdict(
        if mono.pass {
            "monotone-implies-stable"
        } else {
            "stability"
        },
        pass_if(stable),
        format!(
            "lambda_min = {:.6} against -tol_stab = -{:.3e}",
            eig.lambda_min, tol_stab
        ),
    );
    out.metric("lambda_min", eig.lambda_min);
    out.metric("tol_stab", tol_stab);

    // derived system against the solver's weak-residual scale
    let mut rng = seeded(ctx.seed ^ 0x1d);
    let mut weak_scale = 0.0f64;
    let mut derived_max = 0.0f64;
    let mut degenerate = 0usize;
    let mut rows = Vec::new();
    for b in 0..20 {
        let psi = random_bump_tuple(&problem.grid, problem.n, &mut rng);
        let wr = weak_residual(&problem, &sol, &psi)?;
        let dr = derived_residual(&problem, &sol, 0, &psi, DerivMode::Fd)?;
        for v in &wr {
            weak_scale = weak_scale.max(v.abs());
        }
        for v in &dr.residuals {
            derived_max = derived_max.max(v.abs());
        }
        degenerate = degenerate.max(dr.degenerate_in_support);
        rows.push(format!(
            "{b},{:.6e},{:.6e},{:.6e},{:.6e}",
            wr[0], wr[1], dr.residuals[0], dr.residuals[1]
        ));
    }
    let derived_ok = derived_max <= 10.0 * weak_scale.max(1e-14);
    out.verdict(
        "derived-system",
        pass_if(derived_ok),
        format!(
            "max derived residual {derived_max:.3e} vs 10 x weak scale {:.3e}",
            10.0 * weak_scale
        ),
    );
    out.metric("degenerate_nodes_in_support", degenerate);
    write_csv(
        &ctx.out.join("derived.csv"),
        "batch,weak_u,weak_v,derived_u,derived_v",
        &rows,
    )?;
    out.files.push("derived.csv".into());

    // Poincare batch, gated on the stability verdict
    let audit = PoincareAudit::new(&problem, &sol, DerivMode::Fd, LhsForm::FluxMatrix)?;
    let mut rng = seeded(ctx.seed ^ 0x9c);
    let h = problem.grid.max_spacing();
    let mut worst_margin = f64::INFINITY;
    let mut rows = Vec::new();
    let mut all_ok = true;
    for b in 0..20 {
        let psi = random_bump_tuple(&problem.grid, problem.n, &mut rng);
        let rep = audit.evaluate(&psi, Some(stable))?;
        let scale = rep.rhs.abs() + rep.lhs.abs() + rep.cross_term.abs();
        let tol_pq = 10.0 * h * h * scale.max(1.0);
        all_ok &= rep.gap >= -tol_pq;
        worst_margin = worst_margin.min(rep.gap + tol_pq);
        rows.push(format!(
            "{b},{:.6e},{:.6e},{:.6e},{:.6e}",
            rep.lhs, rep.cross_term, rep.rhs, rep.gap
        ));
    }
    out.verdict(
        "poincare",
        if stable {
            pass_if(all_ok)
        } else {
            Verdict::HypothesisNotMet
        },
        format!("20 random test tuples, worst margin {worst_margin:.3e}"),
    );
    write_csv(&ctx.out.join("poincare.csv"), "batch,lhs,cross,rhs,gap", &rows)?;
    out.files.push("poincare.csv".into());

    // direction alignment of the planar pair: u climbs along +y, v along
    // -y, so the pair is anti-aligned, i.e. aligned after flipping one
    // profile's argument; the coupling keeps one sign on the image box
    let align = crate::diagnostics::direction_alignment(&problem, &sol, DerivMode::Fd, 1e-6)?;
    let pair = &align.pairs[0];
    let align_ok = pair.verdict == crate::diagnostics::AlignmentVerdict::AntiAligned
        && pair.aligned_up_to_flip
        && align.interval_audits[0].found;
    out.verdict(
        "alignment",
        pass_if(align_ok),
        format!(
            "pair dot in [{:.3}, {:.3}], coupling interval found: {}",
            pair.dot_min, pair.dot_max, align.interval_audits[0].found
        ),
    );

    // one-dimensional symmetry of the profile extended to a 3-dimensional
    // fibered box, measured by finite differences on a safe band
    let g3 = make_grid(
        &[[-2.0, 2.0], [-4.0, 4.0], [-4.0, 4.0]],
        &[7, 33, 33],
        1,
        &[Boundary::Dirichlet, Boundary::Dirichlet, Boundary::Dirichlet],
    )?;
    let (_, su3, sv3) = blwz_profile_splines(0.05)?;
    let omega = [0.6, 0.8];
    let u3 = sample(
        Arc::new(Extended1d::new(3, 1, omega.to_vec(), Arc::new(su3))) as Arc<dyn Analytic>,
        g3.clone(),
    )?;
    let v3 = sample(
        Arc::new(Extended1d::new(3, 1, omega.to_vec(), Arc::new(sv3))) as Arc<dyn Analytic>,
        g3,
    )?;
    let sol3 = SolutionTuple::new(vec![u3, v3])?;
    // profile tails decay super-exponentially; relative finite-difference
    // errors are O(1) at the low-gradient fringe, so the flatness claim is
    // measured on the band |grad_y u| >= 5% of its sup
    let band = 0.05 * sol3.grad_bound();
    let sym = crate::diagnostics::symmetry_residual(&sol3, DerivMode::Fd, Some(band))?;
    let mut sup_k: f64 = 0.0;
    let mut dev: f64 = 0.0;
    for c in &sym.per_component {
        sup_k = sup_k.max(c.sup_curvature);
        for mc in &c.mask_components {
            dev = dev.max(mc.angular_deviation_max);
        }
    }
    out.verdict(
        "symmetry-extension",
        pass_if(sup_k <= 0.1 && dev <= 0.1),
        format!("fd-mode sup K = {sup_k:.3e}, max direction deviation {dev:.3e}"),
    );
    out.metric("extension_sup_curvature", sup_k);
    out.metric("extension_direction_deviation", dev);

    crate::fields::io::write_field(sol.component(0), &ctx.out.join("u.field"))?;
    crate::fields::io::write_field(sol.component(1), &ctx.out.join("v.field"))?;
    out.files.push("u.field".into());
    out.files.push("v.field".into());
    Ok(out)
}

// ---------------------------------------------------------------------
// allen-cahn-kink

fn run_allen_cahn(ctx: &ScenarioCtx) -> Result<ScenarioOutcome> {
    let mut out = ScenarioOutcome::default();
    let nodes = ctx.nodes(801);
    let grid = make_grid(
        &[[0.0, 1.0], [-20.0, 20.0]],
        &[5, nodes],
        1,
        &[Boundary::NeumannZero, Boundary::Dirichlet],
    )?;
    let problem = Problem::new(
        1,
        vec![Coefficient::constant()],
        Potential::AllenCahn,
        grid.clone(),
    )?;
    let w = 2f64.sqrt();
    let kink = sample(
        Arc::new(Extended1d::new(
            2,
            1,
            vec![1.0],
            Arc::new(crate::fields::analytic::TanhProfile { width: w }),
        )) as Arc<dyn Analytic>,
        grid.clone(),
    )?;
    let mut vals = kink.values().to_vec();
    for (i, v) in vals.iter_mut().enumerate() {
        if !grid.is_dirichlet_node(i) {
            *v *= 0.9;
        }
    }
    let init = SolutionTuple::new(vec![ScalarField::from_values(grid.clone(), vals)?])?;
    let (sol, log) = solve(&problem, init, &SolverConfig::newton(1e-9, 40))?;
    out.verdict("solve", pass_if(log.converged), format!("residual {:.3e}", log.final_residual));
    if !log.converged {
        out.verdict("kink-profile", Verdict::Skipped, "solver did not converge");
        out.verdict("stability", Verdict::Skipped, "solver did not converge");
        return Ok(out);
    }
    let mut worst = 0.0f64;
    for idx in 0..grid.len() {
        let c = grid.coords_vec(idx);
        worst = worst.max((sol.component(0).value(idx) - (c[1] / w).tanh()).abs());
    }
    out.verdict(
        "kink-profile",
        pass_if(worst <= 5e-3),
        format!("max deviation from the transition layer {worst:.3e}"),
    );
    let tol_stab = stability_tolerance(&problem, &sol);
    let eig = stability_lambda_min(
        &problem,
        &sol,
        DerivMode::Fd,
        &EigenOpts {
            tol: 5e-8,
            ..Default::default()
        },
    )?;
    let stable = eig.lambda_min >= -tol_stab;
    out.verdict(
        "stability",
        pass_if(stable),
        format!("lambda_min = {:.6e} vs -{tol_stab:.3e}", eig.lambda_min),
    );
    out.metric("lambda_min", eig.lambda_min);
    out.metric("kink_deviation", worst);

    let audit = PoincareAudit::new(&problem, &sol, DerivMode::Fd, LhsForm::FluxMatrix)?;
    let mut rng = seeded(ctx.seed ^ 0xac);
    let h = grid.max_spacing();
    let mut all_ok = true;
    for _ in 0..10 {
        let psi = random_bump_tuple(&grid, 1, &mut rng);
        let rep = audit.evaluate(&psi, Some(stable))?;
        let scale = rep.rhs.abs() + rep.lhs.abs() + rep.cross_term.abs();
        all_ok &= rep.gap >= -10.0 * h * h * scale.max(1.0);
    }
    out.verdict(
        "poincare",
        if stable {
            pass_if(all_ok)
        } else {
            Verdict::HypothesisNotMet
        },
        "10 random test tuples",
    );
    Ok(out)
}

// ---------------------------------------------------------------------
// p-laplacian-minimizer

fn run_p_laplacian(ctx: &ScenarioCtx) -> Result<ScenarioOutcome> {
    let mut out = ScenarioOutcome::default();
    let grid = make_grid(
        &[[-1.0, 1.0], [-1.0, 1.0]],
        &[9, 9],
        1,
        &[Boundary::Dirichlet, Boundary::Dirichlet],
    )?;
    let ps = [2.5, 2.9];
    let problem = Problem::new(
        2,
        vec![
            Coefficient::p_power(ps[0])?,
            Coefficient::p_power(ps[1])?,
        ],
        Potential::SphereWell { scale: 1.0 },
        grid.clone(),
    )?;
    let mut spec = MinimizerSampleSpec::default_for(1);
    spec.seed = ctx.seed ^ 0x91;
    spec.convention = Lambda2Convention::PowerUnnormalized;
    let audit = crate::model::minimizer_conditions_audit(&problem, &spec);
    let coef_ok = audit
        .coefficient_checks
        .iter()
        .all(|cs| cs.iter().all(|c| c.pass));
    let c_within_p = audit
        .c_used
        .iter()
        .zip(&ps)
        .all(|(c, p)| c.map(|c| c <= *p + 1e-9).unwrap_or(false));
    out.verdict(
        "minimizer-hypotheses",
        pass_if(coef_ok && c_within_p),
        format!(
            "constants {:?} for exponents {:?}",
            audit.c_used, ps
        ),
    );
    let pot_ok = audit.potential_checks.iter().all(|c| c.pass);
    out.verdict(
        "potential-signs",
        pass_if(pot_ok),
        audit
            .potential_checks
            .iter()
            .map(|c| format!("{}: {}", c.name, c.pass))
            .collect::<Vec<_>>()
            .join("; "),
    );
    // with C fixed to p itself, the eigenvalue bounds still hold
    let mut fixed_ok = true;
    for &p in &ps {
        let single = Problem::new(
            1,
            vec![Coefficient::p_power(p)?],
            Potential::Zero,
            grid.clone(),
        )?;
        let mut s = MinimizerSampleSpec::default_for(1);
        s.c_fixed = Some(p);
        s.convention = Lambda2Convention::PowerUnnormalized;
        let rep = crate::model::minimizer_conditions_audit(&single, &s);
        fixed_ok &= rep.coefficient_checks[0].iter().all(|c| c.pass);
    }
    out.verdict(
        "eigenvalue-bound-with-c-equal-p",
        pass_if(fixed_ok),
        format!("checked for p in {ps:?}"),
    );

    // the quartic sphere well has a sign-changing coupling: the
    // direction-coincidence addendum is not established, and says so
    let mut sign_pos = false;
    let mut sign_neg = false;
    let mut fh = [0.0; 4];
    for i in 0..21 {
        for j in 0..21 {
            let xi = [-1.5 + 0.15 * i as f64, -1.5 + 0.15 * j as f64];
            problem.potential.hessian(&[0.0], &xi, &mut fh);
            if fh[1] > 1e-9 {
                sign_pos = true;
            }
            if fh[1] < -1e-9 {
                sign_neg = true;
            }
        }
    }
    out.verdict(
        "coupling-sign-constancy",
        if sign_pos && sign_neg {
            Verdict::HypothesisNotMet
        } else {
            Verdict::Pass
        },
        "mixed second derivative changes sign on the sampled image box",
    );

    // flux-matrix spectrum against the closed form
    let mut rng = seeded(ctx.seed ^ 0x77);
    let mut worst = 0.0f64;
    use rand::RngExt;
    for &p in &ps {
        let coef = Coefficient::p_power(p)?;
        for _ in 0..20 {
            let eta: [f64; 2] = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let t = f64::sqrt(eta[0] * eta[0] + eta[1] * eta[1]);
            if t < 1e-3 {
                continue;
            }
            let a = crate::model::assemble_a(&coef, &[0.0], &eta, 1e-12)?;
            let (vals, _) = a.eigen();
            let l2 = t.powf(p - 2.0);
            let l1 = (p - 1.0) * l2;
            let want = [l1.min(l2), l1.max(l2)];
            worst = worst
                .max((vals[0] - want[0]).abs() / (1.0 + want[0]))
                .max((vals[1] - want[1]).abs() / (1.0 + want[1]));
        }
    }
    out.verdict(
        "flux-spectrum",
        pass_if(worst <= 1e-10),
        format!("max relative eigenvalue error {worst:.3e}"),
    );

    // lambda profiles against closed forms
    let mut worst_l = 0.0f64;
    for &p in &ps {
        let coef = Coefficient::p_power(p)?;
        for k in 1..=10 {
            let t = 0.3 * k as f64;
            let x = [0.0];
            worst_l = worst_l
                .max((coef.lambda1(&x, t) - (p - 1.0) * t.powf(p - 2.0)).abs())
                .max((coef.lambda2(&x, t) - t.powf(p - 2.0)).abs())
                .max((coef.big_lambda2(&x, t) - t.powf(p) / p).abs());
        }
        worst_l = worst_l.max(coef.big_lambda2(&[0.0], 0.0).abs());
    }
    out.verdict(
        "lambda-profiles",
        pass_if(worst_l <= 1e-12),
        format!("max deviation from closed forms {worst_l:.3e}"),
    );
    out.metric("exponents", ps.to_vec());
    Ok(out)
}

// ---------------------------------------------------------------------
// abg-counterexample

fn run_abg(ctx: &ScenarioCtx) -> Result<ScenarioOutcome> {
    let mut out = ScenarioOutcome::default();
    let spec = AbgSampleSpec {
        seed: ctx.seed ^ 0xab,
        ..Default::default()
    };
    let rep = abg_audit(&spec);
    out.verdict(
        "two-well-structure",
        pass_if(rep.pass),
        format!(
            "wells exact {:?}, Hessian min eigenvalues {:?}, radial threshold {:?}",
            rep.value_at_wells, rep.hessian_min_eigs, rep.radial_r0
        ),
    );
    out.metric("hessian_min_eigs", rep.hessian_min_eigs.to_vec());
    out.metric("mixed_negative", rep.mixed_negative_at.1);
    out.metric("mixed_positive", rep.mixed_positive_at.1);

    // the pairwise sign hypothesis must fail on a region where the
    // coupling changes sign; its failure is this scenario's pass
    let grid = make_grid(
        &[[0.0, 2.0], [-1.0, 1.0]],
        &[9, 9],
        1,
        &[Boundary::Dirichlet, Boundary::Dirichlet],
    )?;
    let problem = Problem::new(
        2,
        vec![Coefficient::constant(), Coefficient::constant()],
        Potential::Abg,
        grid.clone(),
    )?;
    let ramp: Vec<f64> = (0..grid.len()).map(|i| grid.coords_vec(i)[0]).collect();
    let sol = SolutionTuple::new(vec![
        ScalarField::from_values(grid.clone(), ramp)?,
        ScalarField::constant(grid.clone(), 1.0),
    ])?;
    let theta = vec![
        ScalarField::constant(grid.clone(), 1.0),
        ScalarField::constant(grid.clone(), 1.0),
    ];
    let sign = check_sign_hypothesis(&problem, &sol, &theta)?;
    out.verdict(
        "sign-hypothesis-expected-fail",
        pass_if(!sign.pass),
        format!(
            "pair minimum {:.3e}: the expected violation was observed",
            sign.pair_minima[0].min_value
        ),
    );
    out.metric("sign_pair_min", sign.pair_minima[0].min_value);
    Ok(out)
}

// ---------------------------------------------------------------------
// manufactured-identity

/// Observed convergence order of the identity residuals between a coarse
/// and a refined grid, measured at the coarse nodes (a subset of the fine
/// ones) and away from the boundary margin.
pub fn fd_identity_order(
    dims: (usize, usize),
    half: f64,
    coarse_nodes: usize,
    coef: &Coefficient,
    field: Arc<dyn Analytic>,
) -> Result<f64> {
    let (n, m) = dims;
    let fine_nodes = 2 * coarse_nodes - 1;
    let mk = |nodes: usize| {
        make_grid(
            &vec![[-half, half]; n],
            &vec![nodes; n],
            m,
            &vec![Boundary::Dirichlet; n],
        )
    };
    let gc = mk(coarse_nodes)?;
    let gf = mk(fine_nodes)?;
    let opts = IdentityOpts {
        eps_grad: None,
        band_fraction: 0.0,
        boundary_margin: 2,
    };
    let rc = identity_check(&sample(field.clone(), gc.clone())?, coef, DerivMode::Fd, opts)?;
    let rf = identity_check(&sample(field, gf.clone())?, coef, DerivMode::Fd, opts)?;
    let mut worst_c = 0.0f64;
    let mut worst_f = 0.0f64;
    let mut mi = vec![0usize; n];
    for idx in 0..gc.len() {
        gc.multi_index(idx, &mut mi);
        let fid = gf.node_index(&mi.iter().map(|&i| 2 * i).collect::<Vec<_>>());
        if rc.checked[idx] && rf.checked[fid] {
            worst_c = worst_c.max(rc.residual_i[idx]).max(rc.residual_ii[idx]);
            worst_f = worst_f.max(rf.residual_i[fid]).max(rf.residual_ii[fid]);
        }
    }
    if worst_f == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((worst_c / worst_f).log2())
}

fn run_manufactured(ctx: &ScenarioCtx) -> Result<ScenarioOutcome> {
    let mut out = ScenarioOutcome::default();
    let combos = [(2usize, 1usize), (3, 1), (3, 2)];
    let coefs = [
        Coefficient::constant(),
        Coefficient::p_power(2.5)?,
        Coefficient::p_power(3.0)?,
    ];
    let mut rng = seeded(ctx.seed ^ 0x3d);
    let mut sup_rel = 0.0f64;
    let mut min_s = f64::INFINITY;
    let mut min_t = f64::INFINITY;
    let mut rows = Vec::new();
    let mut count = 0;
    for &(n, m) in &combos {
        let grid = make_grid(
            &vec![[-2.0, 2.0]; n],
            &vec![if n == 2 { 33 } else { 13 }; n],
            m,
            &vec![Boundary::Dirichlet; n],
        )?;
        for k in 0..4 {
            let field = Arc::new(TrigPoly::random(n, &mut rng, 4, 1.2));
            let u = sample(field, grid.clone())?;
            let coef = &coefs[(k + n) % coefs.len()];
            let rep = identity_check(&u, coef, DerivMode::Analytic, IdentityOpts::default())?;
            let scale = rep.scale_i.max(rep.scale_ii).max(1.0);
            sup_rel = sup_rel.max(rep.sup_i / scale).max(rep.sup_ii / scale);
            let stu = compute_stu(&u, DerivMode::Analytic, None)?;
            min_s = min_s.min(stu.min_s);
            min_t = min_t.min(stu.min_t);
            rows.push(format!(
                "{count},{n},{m},{},{:.3e},{:.3e},{:.3e}",
                coef.label(),
                rep.sup_i,
                rep.sup_ii,
                scale
            ));
            count += 1;
        }
    }
    out.verdict(
        "identities-analytic",
        pass_if(sup_rel <= 1e-8),
        format!("sup residual / scale = {sup_rel:.3e} over {count} fields"),
    );
    out.verdict(
        "nonnegativity",
        pass_if(min_s >= -1e-10 && min_t >= -1e-10),
        format!("min S = {min_s:.3e}, min T = {min_t:.3e}"),
    );
    let mut worst_order = f64::INFINITY;
    for &(n, m) in &combos {
        let ramp: Vec<f64> = (0..n).map(|a| if a < m { 0.0 } else { 5.0 - a as f64 }).collect();
        let field =
            Arc::new(TrigPoly::random(n, &mut rng, 3, 1.0).with_ramp(&ramp)) as Arc<dyn Analytic>;
        let order = fd_identity_order(
            (n, m),
            2.0,
            if n == 2 { 17 } else { 9 },
            &Coefficient::constant(),
            field,
        )?;
        worst_order = worst_order.min(order);
    }
    out.verdict(
        "fd-order",
        pass_if(worst_order >= 1.8),
        format!("worst observed refinement order {worst_order:.2}"),
    );
    write_csv(
        &ctx.out.join("identities.csv"),
        "field,n,m,coefficient,sup_i,sup_ii,scale",
        &rows,
    )?;
    out.files.push("identities.csv".into());
    Ok(out)
}

// ---------------------------------------------------------------------
// growth-and-cutoff

fn run_growth_cutoff(ctx: &ScenarioCtx) -> Result<ScenarioOutcome> {
    let mut out = ScenarioOutcome::default();
    let pi = std::f64::consts::PI;
    // unit-density annulus estimate against the closed forms
    let linear = AnalyticTuple::new(
        2,
        1,
        vec![Arc::new(Extended1d::new(
            2,
            1,
            vec![1.0],
            Arc::new(LinearProfile {
                slope: 1.0,
                offset: 0.0,
            }),
        )) as Arc<dyn Analytic>],
    )?;
    let coefs = vec![Coefficient::constant()];
    let growth = growth_check_polar(&coefs, &linear, &[10.0, 100.0, 1000.0])?;
    let lem = &growth.lemma[0];
    let lhs_exact = pi * 1000f64.ln();
    let rhs_exact = lhs_exact + 2.0 * pi;
    let closed_ok = (lem.lhs - lhs_exact).abs() <= 1e-5 * lhs_exact
        && (lem.rhs - rhs_exact).abs() <= 1e-4 * rhs_exact;
    out.verdict(
        "annulus-estimate",
        pass_if(lem.holds && closed_ok),
        format!(
            "lhs {:.6} vs pi log R = {:.6}; rhs {:.6} vs +2 pi = {:.6}",
            lem.lhs, lhs_exact, lem.rhs, rhs_exact
        ),
    );
    out.metric("annulus_margin", lem.margin);

    // bounded-gradient extension: value * log R stays within a factor 2
    let scan = cutoff_decay_scan_polar(&coefs, &linear, &[1e2, 1e3, 1e4])?;
    let factor = scan.bounded_factor.unwrap_or(f64::INFINITY);
    out.verdict(
        "cutoff-decay",
        pass_if(factor <= 2.0),
        format!("value * log R varies by a factor {factor:.4}"),
    );
    let rows: Vec<String> = scan
        .rows
        .iter()
        .map(|r| format!("{},{:.8e},{:.8e},{}", r.r, r.value, r.value_log_r, r.excluded))
        .collect();
    write_csv(&ctx.out.join("cutoff_scan.csv"), "r,value,value_log_r,excluded", &rows)?;
    out.files.push("cutoff_scan.csv".into());

    // a field with linearly growing gradient must trip the scan
    let radial = AnalyticTuple::new(
        2,
        1,
        vec![Arc::new(RadialYSquared { dim: 2, m: 1 }) as Arc<dyn Analytic>],
    )?;
    let bad = cutoff_decay_scan_polar(&coefs, &radial, &[1e2, 1e3, 1e4])?;
    let v: Vec<f64> = bad.rows.iter().map(|r| r.value_log_r).collect();
    let grew = v[1] > 5.0 * v[0] && v[2] > 5.0 * v[1];
    out.verdict(
        "growth-violation-detected",
        pass_if(grew),
        format!("value * log R along the list: {v:?}"),
    );

    // cutoff family on a grid: plateau, midpoint, support, gradient bound
    let grid = make_grid(
        &[[-130.0, 130.0], [-130.0, 130.0]],
        &[ctx.nodes(201), ctx.nodes(201)],
        1,
        &[Boundary::Dirichlet, Boundary::Dirichlet],
    )?;
    let r = 125.0;
    let (etas, info) = log_cutoff(r, &grid, &[1.0])?;
    let eta = &etas[0];
    let mut ok = info.contained;
    let mut coords = [0.0; 2];
    for idx in 0..grid.len() {
        grid.coords(idx, &mut coords);
        let rho = (coords[0] * coords[0] + coords[1] * coords[1]).sqrt();
        let v = eta.value(idx);
        if rho <= r.sqrt() {
            ok &= v == 1.0;
        } else if rho >= r {
            ok &= v == 0.0;
        } else {
            let want = 2.0 * (r.ln() - rho.ln()) / r.ln();
            ok &= (v - want).abs() < 1e-12;
        }
    }
    ok &= info.grad_ratio_vs_exact_bound <= 1.1;
    out.verdict(
        "log-cutoff",
        pass_if(ok),
        format!(
            "exact-bound ratio {:.4}, stated-bound ratio {:.4}",
            info.grad_ratio_vs_exact_bound, info.grad_ratio_vs_stated_bound
        ),
    );
    out.metric("stated_bound_ratio", info.grad_ratio_vs_stated_bound);

    // growth table for the kink extension on the grid, for the record
    let g2 = make_grid(
        &[[-8.0, 8.0], [-8.0, 8.0]],
        &[65, 65],
        1,
        &[Boundary::Dirichlet, Boundary::Dirichlet],
    )?;
    let kink = sample(
        Arc::new(Extended1d::new(
            2,
            1,
            vec![1.0],
            Arc::new(crate::fields::analytic::TanhProfile {
                width: 2f64.sqrt(),
            }),
        )) as Arc<dyn Analytic>,
        g2.clone(),
    )?;
    let problem = Problem::new(
        1,
        vec![Coefficient::constant()],
        Potential::AllenCahn,
        g2,
    )?;
    let sol = SolutionTuple::new(vec![kink])?;
    let rep = growth_check(&problem, &sol, &[2.0, 4.0, 8.0], DerivMode::Analytic)?;
    let rows: Vec<String> = rep
        .rows
        .iter()
        .map(|row| format!("{},{:.8e}", row.r, row.xi[0]))
        .collect();
    write_csv(&ctx.out.join("growth.csv"), "r,xi", &rows)?;
    out.files.push("growth.csv".into());
    out.verdict(
        "growth-table",
        pass_if(rep.monotone && rep.lemma[0].holds),
        format!(
            "xi monotone, annulus margin {:.3e}, fitted exponent {:?}",
            rep.lemma[0].margin, rep.exponent_fit[0]
        ),
    );
    Ok(out)
}
