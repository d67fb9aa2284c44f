//! The square-root pipeline: `√B`, `G = √B A* − √B'`, a solution F of
//! `G X √B = G` and the effective potential
//! `𝒟_F = −L' − L² − B C` with `L = (G F + (G F)*)/2`.

use std::sync::Arc;

use num_complex::Complex64;

use super::grid::{check_domain, jump_condition, psd_condition, scalar_condition, skipped_scalar, FACTOR_SOLVABLE};
use crate::hamsys::{uniform_grid, SystemSpec};
use crate::linalg::{hermitian_part, solve_eq27, sqrt_psd, trace, FactorMethod, FactorSolution};
use crate::matexpr::{composite_step, derivative_auto, FnMatrix, TimeMatrix};
use crate::scalarosc::{sl_oscillation_check, Coefficient, Condition, CriterionVerdict, ScalarMode, ScalarSystem, VerdictStatus};
use crate::{check_interval, CMat, Result, Tolerances};

pub const TRACE_REAL: &str = "tr D_F real on grid";
const TRACE_IMAG_TOL: f64 = 1e-10;

/// Pointwise evaluation of the square-root pipeline.
#[derive(Clone)]
pub struct DfEvaluator {
    spec: Arc<SystemSpec>,
    tol: Tolerances,
    f_override: Option<Arc<dyn TimeMatrix>>,
}

impl DfEvaluator {
    pub fn new(spec: &SystemSpec, tol: &Tolerances) -> Self {
        DfEvaluator {
            spec: Arc::new(spec.clone()),
            tol: *tol,
            f_override: None,
        }
    }

    /// Use a fixed `F(t)` instead of the solver's.
    pub fn with_f(mut self, f: impl TimeMatrix + 'static) -> Self {
        self.f_override = Some(Arc::new(f));
        self
    }

    fn n(&self) -> usize {
        self.spec.n
    }

    pub fn sqrt_b(&self, t: f64) -> Result<CMat> {
        Ok(sqrt_psd(&self.spec.b.eval(t)?, self.tol.tol_psd, self.tol.tol_herm)?)
    }

    pub fn sqrt_b_prime(&self, t: f64) -> Result<CMat> {
        let m = FnMatrix::new(self.n(), self.spec.t0, |s| self.sqrt_b(s));
        derivative_auto(&m, t, composite_step(t))
    }

    /// `(√B, G)` at t.
    pub fn g(&self, t: f64) -> Result<(CMat, CMat)> {
        let r = self.sqrt_b(t)?;
        let a = self.spec.a.eval(t)?;
        let g = &r * a.adjoint() - self.sqrt_b_prime(t)?;
        Ok((r, g))
    }

    /// Solver output at t (ignores any override).
    pub fn factor(&self, t: f64) -> Result<FactorSolution> {
        let (r, g) = self.g(t)?;
        Ok(solve_eq27(&g, &r, self.tol.tol_res)?)
    }

    fn f_and_g(&self, t: f64) -> Result<(CMat, CMat)> {
        match &self.f_override {
            Some(f) => Ok((f.eval(t)?, self.g(t)?.1)),
            None => {
                let (r, g) = self.g(t)?;
                Ok((solve_eq27(&g, &r, self.tol.tol_res)?.f, g))
            }
        }
    }

    /// `L = (G F + (G F)*)/2`.
    pub fn sym(&self, t: f64) -> Result<CMat> {
        let (f, g) = self.f_and_g(t)?;
        Ok(hermitian_part(&(g * f)))
    }

    pub fn sym_prime(&self, t: f64) -> Result<CMat> {
        let m = FnMatrix::new(self.n(), self.spec.t0, |s| self.sym(s));
        derivative_auto(&m, t, composite_step(t))
    }

    /// `𝒟_F(t)`.
    pub fn d_f(&self, t: f64) -> Result<CMat> {
        let l = self.sym(t)?;
        let b = self.spec.b.eval(t)?;
        let c = self.spec.c.eval(t)?;
        Ok(-self.sym_prime(t)? - &l * &l - b * c)
    }

    pub fn trace(&self, t: f64) -> Result<Complex64> {
        Ok(trace(&self.d_f(t)?))
    }
}

/// `φ'' + tr(𝒟_F)/n φ = 0` as a planar system starting at `t0`.
pub(crate) fn df_reduction(spec: &SystemSpec, tol: &Tolerances, t0: f64) -> ScalarSystem {
    ScalarSystem::second_order(df_potential(spec, tol), t0)
}

fn df_potential(spec: &SystemSpec, tol: &Tolerances) -> Coefficient {
    let ev = DfEvaluator::new(spec, tol);
    let n = spec.n as f64;
    Coefficient::computed("tr(D_F)/n", move |t| Ok(ev.trace(t)?.re / n))
}

/// Grid checks of B ≥ 0, solvability of `G X √B = G`, jump-free `√B` and
/// `L`, and a real trace. The flag is false when any check failed.
pub(crate) fn df_conditions(spec: &SystemSpec, grid: &[f64], tol: &Tolerances) -> Result<(Vec<Condition>, bool)> {
    let c1 = psd_condition(spec, grid, tol)?;
    if !c1.passed {
        let skip = Condition::failed(FACTOR_SOLVABLE, "not evaluated: B is not PSD, sqrt(B) undefined");
        return Ok((vec![c1, skip], false));
    }
    let ev = DfEvaluator::new(spec, tol);
    let mut roots = Vec::with_capacity(grid.len());
    let mut syms = Vec::with_capacity(grid.len());
    let mut worst_res: f64 = 0.0;
    let mut inverse = 0;
    let mut least_squares = 0;
    for &t in grid {
        let (r, g) = ev.g(t)?;
        match solve_eq27(&g, &r, tol.tol_res) {
            Ok(sol) => {
                worst_res = worst_res.max(sol.residual / g.norm().max(1.0));
                match sol.method {
                    FactorMethod::InverseSqrt => inverse += 1,
                    FactorMethod::LeastSquares => least_squares += 1,
                }
                syms.push((t, hermitian_part(&(g * sol.f))));
                roots.push((t, r));
            }
            Err(e) => {
                let cond = Condition::failed(FACTOR_SOLVABLE, format!("fails at t = {t}: {e}"));
                return Ok((vec![c1, cond], false));
            }
        }
    }
    let c9 = Condition::new(FACTOR_SOLVABLE, true, Some(worst_res), Some(tol.tol_res)).with_detail(format!(
        "largest relative residual; {inverse} points used sqrt(B)^-1, {least_squares} minimum-norm least squares"
    ));
    let jr = jump_condition("sqrt(B)", &roots, tol);
    let jl = jump_condition("(G F + (G F)*)/2", &syms, tol);
    let mut worst_im: f64 = 0.0;
    for &t in grid {
        worst_im = worst_im.max(ev.trace(t)?.im.abs());
    }
    let ct = Condition::new(TRACE_REAL, worst_im <= TRACE_IMAG_TOL, Some(worst_im), Some(TRACE_IMAG_TOL));
    let ok = jr.passed && jl.passed && ct.passed;
    Ok((vec![c1, c9, jr, jl, ct], ok))
}

/// Interval check through `φ'' + tr(𝒟_F)/n φ = 0`.
pub fn theorem25_check(spec: &SystemSpec, a: f64, b: f64, mode: ScalarMode, tol: &Tolerances) -> Result<CriterionVerdict> {
    check_interval(a, b)?;
    check_domain(spec, a)?;
    let grid = uniform_grid(a, b, tol.grid_n);
    let (mut conds, ok) = df_conditions(spec, &grid, tol)?;
    let method = format!(
        "square-root reduction: B >= 0, F solving G X sqrt(B) = G with smooth (G F + (G F)*)/2, phi'' + tr(D_F)/n phi = 0; scalar condition in {} mode",
        mode.name()
    );
    let mut scalar = None;
    if ok {
        let v = sl_oscillation_check(&df_potential(spec, tol), a, b, mode, tol)?;
        conds.push(scalar_condition(&v, mode));
        scalar = Some(v);
    } else {
        conds.push(skipped_scalar("matrix hypotheses failed"));
    }
    let mut v = CriterionVerdict::from_conditions(VerdictStatus::OscillatoryOnInterval, Some([a, b]), method, conds)
        .with_data("grid_points", grid.len())
        .with_note("matrix hypotheses are checked on a sampled grid, not for all t");
    if let Some(s) = scalar {
        v = v.with_data("scalar", &s);
    }
    Ok(v)
}
