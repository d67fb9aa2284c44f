//! The interval test, the half-line divergence test and the
//! Sturm–Liouville wrapper.

use std::cell::Cell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quad::{integrate_weighted, ScaledSum};
use super::verdict::{Condition, CriterionVerdict, VerdictStatus};
use super::{e_function, prufer_integrate, Coefficient, ScalarSystem};
use crate::hamsys::uniform_grid;
use crate::ode::OdeOptions;
use crate::{check_interval, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    /// Discharge the scalar condition with the interval/divergence tests.
    #[default]
    Criterion,
    /// Discharge it by counting Prüfer-angle crossings.
    Oracle,
}

impl ScalarMode {
    pub fn name(self) -> &'static str {
        match self {
            ScalarMode::Criterion => "criterion",
            ScalarMode::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for ScalarMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "criterion" => Ok(ScalarMode::Criterion),
            "oracle" => Ok(ScalarMode::Oracle),
            other => Err(format!("unknown scalar mode '{other}' (criterion|oracle)")),
        }
    }
}

pub const A12_SIGN: &str = "a12 >= 0 on grid";
pub const MIN_INTEGRAL: &str = "integral of min(a12 exp(-int E), -a21 exp(int E)) >= pi";
pub const P_DIVERGES: &str = "integral of a12 exp(-int E) diverges (ladder)";
pub const Q_DIVERGES: &str = "integral of -a21 exp(int E) diverges (ladder)";

fn panels_for(a: f64, b: f64) -> usize {
    (((b - a) / 0.5).ceil() as usize).max(4)
}

fn min_on_grid(c: &Coefficient, grid: &[f64]) -> Result<(f64, f64)> {
    let mut worst = (f64::INFINITY, grid[0]);
    for &t in grid {
        let v = c.eval(t)?;
        if v < worst.0 {
            worst = (v, t);
        }
    }
    Ok(worst)
}

/// Interval test on `[a, b]`: `a12 ≥ 0` and
/// `∫_a^b min(a12 e^{−∫_a^t E}, −a21 e^{∫_a^t E}) dt ≥ π`.
pub fn theorem23_check(sys: &ScalarSystem, a: f64, b: f64, tol: &Tolerances) -> Result<CriterionVerdict> {
    check_interval(a, b)?;
    let grid = uniform_grid(a, b, tol.grid_n);
    let (min_a12, at) = min_on_grid(&sys.a12, &grid)?;
    let sign_tol = tol.tol_psd;
    let min_seen = Cell::new((min_a12, at));
    let e = e_function(sys);
    let sample = |t: f64| -> Result<(f64, Vec<f64>)> {
        let a12 = sys.a12.eval(t)?;
        if a12 < min_seen.get().0 {
            min_seen.set((a12, t));
        }
        Ok((e.eval(t)?, vec![a12, sys.a21.eval(t)?]))
    };
    let combine = |raw: &[f64], i: f64, out: &mut [(f64, f64)]| {
        let s = i.abs();
        let p = raw[0] * (-i - s).exp();
        let q = -raw[1] * (i - s).exp();
        out[0] = (p.min(q), s);
    };
    let method = "interval test: sign of a12 and weighted min-integral against pi";
    let iv = Some([a, b]);
    let quad = match integrate_weighted(sample, combine, 1, a, b, 0.0, tol.quad_tol, panels_for(a, b)) {
        Ok(q) => q,
        Err(err) => {
            return Ok(CriterionVerdict::from_conditions(
                VerdictStatus::OscillatoryOnInterval,
                iv,
                method,
                vec![
                    Condition::new(A12_SIGN, min_a12 >= -sign_tol, Some(min_a12), Some(sign_tol)),
                    Condition::failed(MIN_INTEGRAL, format!("quadrature failed: {err}")),
                ],
            ))
        }
    };
    let (min_a12, at) = min_seen.get();
    let integral = quad.sums[0].value();
    let threshold = PI - tol.quad_tol;
    let mut cond7 = Condition::new(MIN_INTEGRAL, quad.converged && integral >= threshold, Some(integral), Some(tol.quad_tol));
    if !quad.converged {
        cond7 = cond7.with_detail("quadrature did not reach the panel tolerance");
    }
    let cond6 = Condition::new(A12_SIGN, min_a12 >= -sign_tol, Some(min_a12), Some(sign_tol))
        .with_detail(format!("minimum at t = {at}; {} grid points plus quadrature nodes", grid.len()));
    Ok(
        CriterionVerdict::from_conditions(VerdictStatus::OscillatoryOnInterval, iv, method, vec![cond6, cond7])
            .with_data("panels", quad.panels)
            .with_data("grid_points", grid.len()),
    )
}

/// One rung of the divergence ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderRung {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "ln_abs_P")]
    pub ln_p: f64,
    #[serde(rename = "ln_abs_Q")]
    pub ln_q: f64,
}

/// `t0 + (horizon − t0) / ratio^j` for `j = count−1, …, 0`, ascending.
pub fn ladder_rungs(t0: f64, horizon: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count)
        .rev()
        .map(|j| t0 + (horizon - t0) / ratio.powi(j as i32))
        .collect()
}

const LADDER_RUNGS: usize = 11;

fn signed_cmp_gt(x: &ScaledSum, y: &ScaledSum) -> bool {
    let vx = x.value();
    let vy = y.value();
    if vx.is_finite() && vy.is_finite() {
        vx > vy
    } else {
        match (x.mantissa > 0.0, y.mantissa > 0.0) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => x.ln_abs() > y.ln_abs(),
            (false, false) => x.ln_abs() < y.ln_abs(),
        }
    }
}

fn diverges(rungs: &[ScaledSum], threshold: f64) -> bool {
    let n = rungs.len();
    if n < 3 {
        return false;
    }
    let last = &rungs[n - 1];
    last.exceeds(threshold) && signed_cmp_gt(&rungs[n - 1], &rungs[n - 2]) && signed_cmp_gt(&rungs[n - 2], &rungs[n - 3])
}

/// Half-line test: `a12 ≥ 0` and divergence of
/// `P(T) = ∫_{t0}^T a12 e^{−∫E}` and `Q(T) = −∫_{t0}^T a21 e^{∫E}`.
///
/// Divergence is declared by the ladder heuristic: the last rung exceeds
/// `growth_threshold` and the last three rungs increase.
pub fn theorem24_check(sys: &ScalarSystem, horizon: f64, growth_threshold: f64, tol: &Tolerances) -> Result<CriterionVerdict> {
    let t0 = sys.t0;
    check_interval(t0, horizon)?;
    let rungs = ladder_rungs(t0, horizon, tol.ladder_ratio, LADDER_RUNGS);
    let grid = uniform_grid(t0, horizon, tol.grid_n);
    let (min_a12, at) = min_on_grid(&sys.a12, &grid)?;
    let min_seen = Cell::new((min_a12, at));
    let e = e_function(sys);
    let sample = |t: f64| -> Result<(f64, Vec<f64>)> {
        let a12 = sys.a12.eval(t)?;
        if a12 < min_seen.get().0 {
            min_seen.set((a12, t));
        }
        Ok((e.eval(t)?, vec![a12, sys.a21.eval(t)?]))
    };
    let combine = |raw: &[f64], i: f64, out: &mut [(f64, f64)]| {
        out[0] = (raw[0], -i);
        out[1] = (-raw[1], i);
    };
    let method = format!(
        "half-line divergence test: sign of a12 plus ladder heuristic (ratio {}, threshold {growth_threshold}, {} rungs, last three increasing)",
        tol.ladder_ratio, LADDER_RUNGS
    );
    let mut p = ScaledSum::default();
    let mut q = ScaledSum::default();
    let mut inner = 0.0;
    let mut left = t0;
    let mut ladder = Vec::new();
    let mut p_rungs = Vec::new();
    let mut q_rungs = Vec::new();
    let mut converged = true;
    for &t in &rungs {
        match integrate_weighted(&sample, combine, 2, left, t, inner, tol.quad_tol, panels_for(left, t)) {
            Ok(w) => {
                p.add_sum(&w.sums[0]);
                q.add_sum(&w.sums[1]);
                inner = w.inner_end;
                converged &= w.converged;
            }
            Err(err) => {
                return Ok(CriterionVerdict::from_conditions(
                    VerdictStatus::Oscillatory,
                    None,
                    method,
                    vec![Condition::failed(P_DIVERGES, format!("quadrature failed near T = {t}: {err}"))],
                )
                .with_horizon(horizon));
            }
        }
        ladder.push(LadderRung {
            t,
            p: p.value(),
            q: q.value(),
            ln_p: p.ln_abs(),
            ln_q: q.ln_abs(),
        });
        p_rungs.push(p);
        q_rungs.push(q);
        left = t;
    }
    let (min_a12, at) = min_seen.get();
    let p_div = diverges(&p_rungs, growth_threshold);
    let q_div = diverges(&q_rungs, growth_threshold);
    let p_end = p.value();
    let q_end = q.value();
    let conditions = vec![
        Condition::new(A12_SIGN, min_a12 >= -tol.tol_psd, Some(min_a12), Some(tol.tol_psd))
            .with_detail(format!("minimum at t = {at} on [t0, horizon]")),
        Condition::new(P_DIVERGES, p_div, Some(p_end), Some(growth_threshold)),
        Condition::new(Q_DIVERGES, q_div, Some(q_end), Some(growth_threshold)),
    ];
    let mut v = CriterionVerdict::from_conditions(VerdictStatus::Oscillatory, None, method, conditions)
        .with_horizon(horizon)
        .with_data("ladder", &ladder)
        .with_note("divergence to +infinity cannot be decided from a finite horizon; the ladder is a heuristic");
    if !converged {
        v = v.with_note("some quadrature panels stopped at the depth limit");
    }
    Ok(v)
}

fn prufer_options(tol: &Tolerances) -> OdeOptions {
    OdeOptions {
        rtol: tol.ode_rtol,
        atol: tol.ode_atol,
        min_step: tol.min_step,
        ..OdeOptions::default()
    }
}

pub const TWO_ZEROS: &str = "zeros of the phi(a) = 0 solution in [a, b] >= 2";
pub const ZEROS_PERSIST: &str = "zeros of the phi(t0) = 0 solution persist into the last ladder rung";

const ORACLE_METHOD: &str =
    "Prüfer oracle: two zeros of one solution force a zero of every solution (Sturm separation)";

/// Oracle for "oscillatory on `[a, b]`": the solution with `φ(a) = 0` must
/// vanish again in `(a, b]`.
pub fn scalar_oracle_check(sys: &ScalarSystem, a: f64, b: f64, tol: &Tolerances) -> Result<CriterionVerdict> {
    check_interval(a, b)?;
    let grid = uniform_grid(a, b, tol.grid_n);
    let (min_a12, at) = min_on_grid(&sys.a12, &grid)?;
    let tr = prufer_integrate(sys, a, b, 0.0, &prufer_options(tol))?;
    let zeros = 1 + tr.crossing_count();
    let conds = vec![
        Condition::new(A12_SIGN, min_a12 >= -tol.tol_psd, Some(min_a12), Some(tol.tol_psd))
            .with_detail(format!("minimum at t = {at}")),
        Condition::new(TWO_ZEROS, zeros >= 2, Some(zeros as f64), None)
            .with_detail(format!("{} Prüfer crossings in (a, b]", tr.crossing_count())),
    ];
    Ok(
        CriterionVerdict::from_conditions(VerdictStatus::OscillatoryOnInterval, Some([a, b]), ORACLE_METHOD, conds)
            .with_data("crossings", &tr.crossings),
    )
}

/// Oracle for oscillation on `[t0, ∞)`, truncated at `horizon`: zeros of the
/// `φ(t0) = 0` solution must keep occurring in the last ladder rung.
pub fn halfline_oracle_check(sys: &ScalarSystem, horizon: f64, tol: &Tolerances) -> Result<CriterionVerdict> {
    let t0 = sys.t0;
    check_interval(t0, horizon)?;
    let grid = uniform_grid(t0, horizon, tol.grid_n);
    let (min_a12, at) = min_on_grid(&sys.a12, &grid)?;
    let tr = prufer_integrate(sys, t0, horizon, 0.0, &prufer_options(tol))?;
    let rung = t0 + (horizon - t0) / tol.ladder_ratio;
    let late = tr.crossings.iter().filter(|&&c| c >= rung).count();
    let conds = vec![
        Condition::new(A12_SIGN, min_a12 >= -tol.tol_psd, Some(min_a12), Some(tol.tol_psd))
            .with_detail(format!("minimum at t = {at}")),
        Condition::new(ZEROS_PERSIST, late >= 2, Some(late as f64), None)
            .with_detail(format!("{} crossings on [{t0}, {horizon}], {late} after t = {rung}", tr.crossing_count())),
    ];
    Ok(CriterionVerdict::from_conditions(
        VerdictStatus::Oscillatory,
        None,
        "Prüfer oracle on [t0, horizon]: at least two zeros in the last ladder rung",
        conds,
    )
    .with_horizon(horizon)
    .with_data("crossing_count", tr.crossing_count())
    .with_note("oscillation on a half-line is only sampled up to the horizon"))
}

/// `φ'' + q φ = 0` on `[a, b]`, as `a12 = 1`, `a21 = −q`.
pub fn sl_oscillation_check(q: &Coefficient, a: f64, b: f64, mode: ScalarMode, tol: &Tolerances) -> Result<CriterionVerdict> {
    check_interval(a, b)?;
    let sys = ScalarSystem::second_order(q.clone(), a);
    let mut v = match mode {
        ScalarMode::Criterion => theorem23_check(&sys, a, b, tol)?,
        ScalarMode::Oracle => scalar_oracle_check(&sys, a, b, tol)?,
    };
    v.method = format!("phi'' + q phi = 0 as (a12 = 1, a21 = -q); {}", v.method);
    Ok(v)
}
