//! Sampled hypothesis checks shared by the pipelines.

use std::sync::Arc;

use super::{build_ds, gauge_omega, SChoice};
use crate::hamsys::SystemSpec;
use crate::linalg::{least_eigenvalue, max_abs, trace};
use crate::ode::golden_min;
use crate::scalarosc::{
    halfline_oracle_check, scalar_oracle_check, theorem23_check, theorem24_check, Coefficient, Condition,
    CriterionVerdict, ScalarMode, ScalarSystem,
};
use crate::{CMat, Error, Result, Tolerances};

pub const B_PSD: &str = "B(t) >= 0 on grid";
pub const OMEGA_MEMBERSHIP: &str = "A* + S B in Omega_n on grid";
pub const LYAPUNOV_SOLVABLE: &str = "B X + X B = 2 mu I - A - A* solvable on grid";
pub const FACTOR_SOLVABLE: &str = "G X sqrt(B) = G solvable on grid";
pub const SMOOTH_GAUGE: &str = "grid-solved matrices free of jumps";
pub const SCALAR_REDUCTION: &str = "scalar reduction oscillatory";

pub(crate) fn check_domain(spec: &SystemSpec, a: f64) -> Result<()> {
    if a < spec.t0 {
        return Err(Error::InvalidArgument(format!(
            "interval starts at {a}, before t0 = {}",
            spec.t0
        )));
    }
    Ok(())
}

/// `λ(B(t)) ≥ −tol_psd` on the grid, refined by a golden-section search
/// around grid minima that come within `10·tol_psd` of zero.
pub(crate) fn psd_condition(spec: &SystemSpec, grid: &[f64], tol: &Tolerances) -> Result<Condition> {
    let lam = |t: f64| -> Result<f64> { Ok(least_eigenvalue(&spec.b.eval(t)?, tol.tol_herm)?) };
    let values: Vec<f64> = grid.iter().map(|&t| lam(t)).collect::<Result<_>>()?;
    let (mut worst, mut at) = (f64::INFINITY, grid[0]);
    for (k, &v) in values.iter().enumerate() {
        if v < worst {
            worst = v;
            at = grid[k];
        }
    }
    let mut refined = 0;
    let near = 10.0 * tol.tol_psd;
    for k in 1..grid.len().saturating_sub(1) {
        let v = values[k];
        if v <= values[k - 1] && v <= values[k + 1] && v <= near {
            let (x, fx) = golden_min(|t| lam(t).unwrap_or(f64::INFINITY), grid[k - 1], grid[k + 1], 1e-12);
            refined += 1;
            if fx < worst {
                worst = fx;
                at = x;
            }
        }
    }
    Ok(
        Condition::new(B_PSD, worst >= -tol.tol_psd, Some(worst), Some(tol.tol_psd)).with_detail(format!(
            "least eigenvalue minimum at t = {at}; {} grid points, {refined} refined minima",
            grid.len()
        )),
    )
}

pub(crate) fn omega_condition(spec: &SystemSpec, s: &SChoice, grid: &[f64], tol: &Tolerances) -> Result<Condition> {
    let mut first_fail = None;
    let mut worst_norm: f64 = 0.0;
    let mut worst_spread: f64 = 0.0;
    let mut w_range = (f64::INFINITY, f64::NEG_INFINITY);
    for &t in grid {
        let r = gauge_omega(spec, s, t, tol)?;
        worst_norm = worst_norm.max(r.normality_residual);
        worst_spread = worst_spread.max(r.re_spread);
        w_range = (w_range.0.min(r.w), w_range.1.max(r.w));
        if !r.is_member && first_fail.is_none() {
            first_fail = Some((t, r));
        }
    }
    let cond = match first_fail {
        None => Condition::new(OMEGA_MEMBERSHIP, true, Some(worst_spread), Some(tol.tol_spread_rel)).with_detail(
            format!(
                "max normality residual {worst_norm:e}, max real-part spread {worst_spread:e}, W in [{:.6e}, {:.6e}]",
                w_range.0, w_range.1
            ),
        ),
        Some((t, r)) => Condition::new(OMEGA_MEMBERSHIP, false, Some(r.re_spread), Some(r.tol_spread)).with_detail(
            format!(
                "fails at t = {t}: normality residual {:e} (tol {:e}), real-part spread {:e} (tol {:e})",
                r.normality_residual, r.tol_norm, r.re_spread, r.tol_spread
            ),
        ),
    };
    Ok(cond)
}

/// Largest `‖M(t_{k+1}) − M(t_k)‖_∞` against `jump_factor · spacing`.
pub(crate) fn jump_condition(label: &str, samples: &[(f64, CMat)], tol: &Tolerances) -> Condition {
    let mut worst = (0.0, f64::NAN);
    let mut spacing: f64 = 0.0;
    for w in samples.windows(2) {
        let d = max_abs(&(&w[1].1 - &w[0].1));
        spacing = spacing.max(w[1].0 - w[0].0);
        if d > worst.0 {
            worst = (d, w[0].0);
        }
    }
    let jump_tol = tol.jump_factor * spacing;
    Condition::new(SMOOTH_GAUGE, worst.0 <= jump_tol, Some(worst.0), Some(jump_tol))
        .with_detail(format!("{label}: largest adjacent difference after t = {}", worst.1))
}

/// Largest `‖D_S − D_S*‖_∞` on the grid.
pub(crate) fn ds_asymmetry(spec: &SystemSpec, s: &SChoice, grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in grid {
        let d = build_ds(spec, s, t)?;
        worst = worst.max(max_abs(&(&d - d.adjoint())));
    }
    Ok(worst)
}

/// The planar reduction `(diag, λ(B)/n, −tr D_S, −diag)`.
pub(crate) fn gauge_reduction(spec: &Arc<SystemSpec>, s: &SChoice, diag: Coefficient, tol: &Tolerances) -> ScalarSystem {
    let n = spec.n as f64;
    let tol_herm = tol.tol_herm;
    let sp = spec.clone();
    let a12 = Coefficient::computed("lambda(B)/n", move |t| Ok(least_eigenvalue(&sp.b.eval(t)?, tol_herm)? / n));
    let (sp, sc) = (spec.clone(), s.clone());
    let a21 = Coefficient::computed("-tr D_S", move |t| Ok(-trace(&build_ds(&sp, &sc, t)?).re));
    let a22 = diag.negated();
    ScalarSystem::new(diag, a12, a21, a22, spec.t0)
}

/// `σ_S` as a coefficient; off Ω_n the mean real part is used.
pub(crate) fn sigma_coefficient(spec: &Arc<SystemSpec>, s: &SChoice, tol: &Tolerances) -> Coefficient {
    let (sp, sc, tol) = (spec.clone(), s.clone(), *tol);
    Coefficient::computed("sigma_S", move |t| Ok(gauge_omega(&sp, &sc, t, &tol)?.w))
}

pub(crate) fn scalar_on_interval(sys: &ScalarSystem, a: f64, b: f64, mode: ScalarMode, tol: &Tolerances) -> Result<CriterionVerdict> {
    match mode {
        ScalarMode::Criterion => theorem23_check(sys, a, b, tol),
        ScalarMode::Oracle => scalar_oracle_check(sys, a, b, tol),
    }
}

pub(crate) fn scalar_on_halfline(sys: &ScalarSystem, horizon: f64, mode: ScalarMode, tol: &Tolerances) -> Result<CriterionVerdict> {
    match mode {
        ScalarMode::Criterion => theorem24_check(sys, horizon, tol.growth_threshold, tol),
        ScalarMode::Oracle => halfline_oracle_check(sys, horizon, tol),
    }
}

pub(crate) fn scalar_condition(v: &CriterionVerdict, mode: ScalarMode) -> Condition {
    let failed: Vec<&str> = v.conditions.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let detail = if failed.is_empty() {
        format!("{} mode: {}", mode.name(), v.method)
    } else {
        format!("{} mode: failed {}", mode.name(), failed.join("; "))
    };
    Condition::new(SCALAR_REDUCTION, v.is_oscillatory(), None, None).with_detail(detail)
}

pub(crate) fn skipped_scalar(reason: &str) -> Condition {
    Condition::failed(SCALAR_REDUCTION, format!("not evaluated: {reason}"))
}
