use std::sync::Arc;

use num_complex::Complex64;

use super::df::{df_conditions, df_reduction};
use super::grid::{
    check_domain, ds_asymmetry, gauge_reduction, jump_condition, omega_condition, psd_condition, scalar_condition,
    scalar_on_halfline, scalar_on_interval, sigma_coefficient, skipped_scalar, LYAPUNOV_SOLVABLE,
};
use super::SChoice;
use crate::hamsys::{uniform_grid, SystemSpec};
use crate::linalg::{max_abs, solve_lyapunov};
use crate::matexpr::ScalarExpr;
use crate::scalarosc::{Coefficient, Condition, CriterionVerdict, ScalarMode, VerdictStatus};
use crate::{check_interval, CMat, Result, Tolerances};

/// Time span a pipeline works on.
#[derive(Debug, Clone, Copy)]
enum Span {
    Interval(f64, f64),
    HalfLine { horizon: f64 },
}

impl Span {
    fn bounds(self, spec: &SystemSpec) -> (f64, f64) {
        match self {
            Span::Interval(a, b) => (a, b),
            Span::HalfLine { horizon } => (spec.t0, horizon),
        }
    }

    fn success(self) -> VerdictStatus {
        match self {
            Span::Interval(..) => VerdictStatus::OscillatoryOnInterval,
            Span::HalfLine { .. } => VerdictStatus::Oscillatory,
        }
    }
}

fn run_scalar(sys: &crate::scalarosc::ScalarSystem, span: Span, mode: ScalarMode, tol: &Tolerances) -> Result<CriterionVerdict> {
    match span {
        Span::Interval(a, b) => scalar_on_interval(sys, a, b, mode, tol),
        Span::HalfLine { horizon } => scalar_on_halfline(sys, horizon, mode, tol),
    }
}

fn finish(
    span: Span,
    spec: &SystemSpec,
    method: String,
    conditions: Vec<Condition>,
    scalar: Option<CriterionVerdict>,
    grid_n: usize,
) -> CriterionVerdict {
    let (a, b) = span.bounds(spec);
    let interval = match span {
        Span::Interval(..) => Some([a, b]),
        Span::HalfLine { .. } => None,
    };
    let mut v = CriterionVerdict::from_conditions(span.success(), interval, method, conditions).with_data("grid_points", grid_n);
    if let Span::HalfLine { horizon } = span {
        v = v
            .with_horizon(horizon)
            .with_note(format!("hypotheses on [t0, inf) are sampled on [{a}, {horizon}] only"));
    }
    v = v.with_note("matrix hypotheses are checked on a sampled grid, not for all t");
    if let Some(s) = scalar {
        v = v.with_data("scalar", &s);
    }
    v
}

fn gauge_pipeline(spec: &SystemSpec, s: &SChoice, span: Span, mode: ScalarMode, tol: &Tolerances) -> Result<CriterionVerdict> {
    let (a, b) = span.bounds(spec);
    check_interval(a, b)?;
    check_domain(spec, a)?;
    let grid = uniform_grid(a, b, tol.grid_n);
    let c1 = psd_condition(spec, &grid, tol)?;
    let c2 = omega_condition(spec, s, &grid, tol)?;
    let spec_arc = Arc::new(spec.clone());
    let method = format!(
        "gauge S ({:?}): B >= 0, A* + S B in Omega_n, planar reduction (sigma_S, lambda(B)/n, -tr D_S, -sigma_S); scalar condition in {} mode",
        s.provenance,
        mode.name()
    );
    if !c2.passed {
        let conds = vec![c1, c2, skipped_scalar("A* + S B leaves Omega_n, sigma_S undefined")];
        return Ok(finish(span, spec, method, conds, None, grid.len()));
    }
    let sys = gauge_reduction(&spec_arc, s, sigma_coefficient(&spec_arc, s, tol), tol);
    let scalar = run_scalar(&sys, span, mode, tol)?;
    let c3 = scalar_condition(&scalar, mode);
    let asym = ds_asymmetry(spec, s, &grid)?;
    Ok(finish(span, spec, method, vec![c1, c2, c3], Some(scalar), grid.len()).with_data("ds_max_asymmetry", asym))
}

/// Interval check with a user or case gauge `S`.
pub fn theorem21_check(
    spec: &SystemSpec,
    s: &SChoice,
    a: f64,
    b: f64,
    mode: ScalarMode,
    tol: &Tolerances,
) -> Result<CriterionVerdict> {
    gauge_pipeline(spec, s, Span::Interval(a, b), mode, tol)
}

/// Solve the Lyapunov gauge on the grid; returns the samples or the first
/// failing time with its diagnostic.
fn lyapunov_grid(spec: &SystemSpec, mu: &ScalarExpr, grid: &[f64], tol: &Tolerances) -> Result<(Vec<(f64, CMat)>, Condition)> {
    let n = spec.n;
    let mut samples = Vec::with_capacity(grid.len());
    let mut worst_rel: f64 = 0.0;
    let mut degenerate = 0;
    for &t in grid {
        let (a, b, _) = spec.coefficients(t)?;
        let m = mu.eval_real(t)?;
        let r = CMat::identity(n, n) * Complex64::new(2.0 * m, 0.0) - &a - a.adjoint();
        match solve_lyapunov(&b, &r, tol.tol_sing) {
            Ok(sol) => {
                worst_rel = worst_rel.max(sol.residual / max_abs(&r).max(1.0));
                degenerate += usize::from(!sol.degenerate_pairs.is_empty());
                samples.push((t, sol.x));
            }
            Err(e) => {
                let cond = Condition::failed(LYAPUNOV_SOLVABLE, format!("fails at t = {t}: {e}"));
                return Ok((samples, cond));
            }
        }
    }
    let cond = Condition::new(LYAPUNOV_SOLVABLE, worst_rel <= tol.tol_res, Some(worst_rel), Some(tol.tol_res)).with_detail(
        format!("largest relative residual; {degenerate} grid points used the singular-consistent rule"),
    );
    Ok((samples, cond))
}

fn mu_pipeline(spec: &SystemSpec, mu: &ScalarExpr, span: Span, mode: ScalarMode, tol: &Tolerances) -> Result<CriterionVerdict> {
    let (a, b) = span.bounds(spec);
    check_interval(a, b)?;
    check_domain(spec, a)?;
    let grid = uniform_grid(a, b, tol.grid_n);
    let c1 = psd_condition(spec, &grid, tol)?;
    let (samples, c4) = lyapunov_grid(spec, mu, &grid, tol)?;
    let method = format!(
        "Lyapunov gauge for mu = {mu}: B >= 0, B S + S B = 2 mu I - A - A* with continuous hermitian S, planar reduction (mu, lambda(B)/n, -tr D_S, -mu); scalar condition in {} mode",
        mode.name()
    );
    if !c4.passed {
        let conds = vec![c1, c4, skipped_scalar("no continuous Lyapunov gauge on the grid")];
        return Ok(finish(span, spec, method, conds, None, grid.len()));
    }
    let c_jump = jump_condition("S(t)", &samples, tol);
    if !c_jump.passed {
        let conds = vec![c1, c4, c_jump, skipped_scalar("Lyapunov gauge jumps between grid points")];
        return Ok(finish(span, spec, method, conds, None, grid.len()));
    }
    let s = SChoice::lyapunov(spec, mu.clone(), tol.tol_sing);
    let spec_arc = Arc::new(spec.clone());
    let sys = gauge_reduction(&spec_arc, &s, Coefficient::Expr(mu.clone()), tol);
    let scalar = run_scalar(&sys, span, mode, tol)?;
    let c5 = scalar_condition(&scalar, mode);
    Ok(finish(span, spec, method, vec![c1, c4, c_jump, c5], Some(scalar), grid.len()))
}

/// Interval check with the pointwise Lyapunov gauge for `μ`.
pub fn theorem22_check(
    spec: &SystemSpec,
    mu: &ScalarExpr,
    a: f64,
    b: f64,
    mode: ScalarMode,
    tol: &Tolerances,
) -> Result<CriterionVerdict> {
    mu_pipeline(spec, mu, Span::Interval(a, b), mode, tol)
}

/// Which half-line criterion to run.
#[derive(Debug, Clone)]
pub enum CorollaryVariant {
    /// Gauge `S` with the divergence test on the reduction.
    Gauge(SChoice),
    /// Lyapunov gauge for `μ` with the divergence test on the reduction.
    Mu(ScalarExpr),
    /// `φ'' + tr(𝒟_F)/n φ = 0` on the half-line.
    SqrtB,
}

/// Half-line version of the three pipelines, truncated at `horizon`.
pub fn corollary_check(
    spec: &SystemSpec,
    variant: &CorollaryVariant,
    horizon: f64,
    mode: ScalarMode,
    tol: &Tolerances,
) -> Result<CriterionVerdict> {
    let span = Span::HalfLine { horizon };
    match variant {
        CorollaryVariant::Gauge(s) => gauge_pipeline(spec, s, span, mode, tol),
        CorollaryVariant::Mu(mu) => mu_pipeline(spec, mu, span, mode, tol),
        CorollaryVariant::SqrtB => {
            check_interval(spec.t0, horizon)?;
            let grid = uniform_grid(spec.t0, horizon, tol.grid_n);
            let (conds, ok) = df_conditions(spec, &grid, tol)?;
            let method = format!(
                "phi'' + tr(D_F)/n phi = 0 on [t0, horizon] with F solving G X sqrt(B) = G; scalar condition in {} mode",
                mode.name()
            );
            let mut conds = conds;
            if !ok {
                conds.push(skipped_scalar("matrix hypotheses failed"));
                return Ok(finish(span, spec, method, conds, None, grid.len()));
            }
            let sys = df_reduction(spec, tol, spec.t0);
            let scalar = run_scalar(&sys, span, mode, tol)?;
            conds.push(scalar_condition(&scalar, mode));
            Ok(finish(span, spec, method, conds, Some(scalar), grid.len()))
        }
    }
}
