//! Ready-made gauges for structured coefficients.

use std::sync::Arc;

use num_complex::Complex64;

use super::{gauge_omega, SChoice, SProvenance};
use crate::hamsys::SystemSpec;
use crate::linalg::{hermitian_check, least_eigenvalue, max_abs, omega_membership};
use crate::matexpr::{FnMatrix, MatrixFunction, ScalarExpr};
use crate::{CMat, Error, Result, Tolerances};

/// Structural pattern and its parameters.
#[derive(Debug, Clone)]
pub enum SCase {
    /// `A* ∈ Ω_n`, `S ≡ 0`.
    I,
    /// `A* = A1 + diag(A2, A3)`, `B = diag(B1, B2)` with `A2 B1 = B1 A2`;
    /// `S = diag(−A2 B1⁻¹, 0)`. `A1` defaults to zero.
    II1 { m: usize, a1: Option<MatrixFunction> },
    /// As `II1` with `(A2 + A2*) B1 = B1 (A2 + A2*)`;
    /// `S = diag(−(A2 + A2*)/2 · B1⁻¹, 0)`.
    II2 { m: usize, a1: Option<MatrixFunction> },
    /// `A* = A1 + a J`, `B = b J`, `J² = J = J*`; `S = −(a/b) J`.
    III { j: CMat, a: ScalarExpr, b: ScalarExpr },
    /// `A* = A1 B` with hermitian `A1`; `S = −A1`.
    IV { a1: MatrixFunction },
}

fn mismatch(case: &str, what: &str, value: f64, t: f64) -> Error {
    Error::Config(format!("case {case} pattern: {what} = {value:e} at t = {t}"))
}

fn block(m: &CMat, r0: usize, c0: usize, rows: usize, cols: usize) -> CMat {
    m.view((r0, c0), (rows, cols)).into_owned()
}

fn scale_tol(tol: &Tolerances, m: &CMat) -> f64 {
    tol.tol_herm * max_abs(m).max(1.0)
}

fn a1_or_zero(a1: &Option<MatrixFunction>, n: usize, t: f64) -> Result<CMat> {
    match a1 {
        Some(m) => Ok(m.eval(t)?),
        None => Ok(CMat::zeros(n, n)),
    }
}

fn case_ii(spec: &SystemSpec, m: usize, a1: &Option<MatrixFunction>, symmetrize: bool, grid: &[f64], tol: &Tolerances) -> Result<SChoice> {
    let n = spec.n;
    let name = if symmetrize { "II2" } else { "II1" };
    if m == 0 || m >= n {
        return Err(Error::Config(format!("case {name}: block size m = {m} must satisfy 0 < m < n = {n}")));
    }
    let k = n - m;
    for &t in grid {
        let a_star = spec.a.eval(t)?.adjoint();
        let b = spec.b.eval(t)?;
        let a1t = a1_or_zero(a1, n, t)?;
        let rest = &a_star - &a1t;
        let off = max_abs(&block(&rest, 0, m, m, k)).max(max_abs(&block(&rest, m, 0, k, m)));
        if off > scale_tol(tol, &rest) {
            return Err(mismatch(name, "off-diagonal block of A* - A1", off, t));
        }
        let off_b = max_abs(&block(&b, 0, m, m, k)).max(max_abs(&block(&b, m, 0, k, m)));
        if off_b > scale_tol(tol, &b) {
            return Err(mismatch(name, "off-diagonal block of B", off_b, t));
        }
        let r1 = omega_membership(&a1t, tol.omega());
        if !r1.is_member {
            return Err(mismatch(name, "real-part spread of A1", r1.re_spread, t));
        }
        let a3 = block(&rest, m, m, k, k);
        let r3 = omega_membership(&a3, tol.omega());
        if !r3.is_member || r3.w.abs() > r3.tol_spread {
            return Err(mismatch(name, "W(A3) or its spread", r3.w.abs().max(r3.re_spread), t));
        }
        let b1 = block(&b, 0, 0, m, m);
        let lam = least_eigenvalue(&b1, tol.tol_herm)?;
        if lam <= tol.tol_psd {
            return Err(mismatch(name, "least eigenvalue of B1", lam, t));
        }
        let a2 = block(&rest, 0, 0, m, m);
        let x = if symmetrize { &a2 + a2.adjoint() } else { a2 };
        let comm = max_abs(&(&x * &b1 - &b1 * &x));
        if comm > scale_tol(tol, &x) * max_abs(&b1).max(1.0) {
            return Err(mismatch(name, "commutator with B1", comm, t));
        }
    }
    let sp = Arc::new(spec.clone());
    let a1 = a1.clone();
    let f = move |t: f64| -> Result<CMat> {
        let rest = sp.a.eval(t)?.adjoint() - a1_or_zero(&a1, n, t)?;
        let b1 = block(&sp.b.eval(t)?, 0, 0, m, m);
        let a2 = block(&rest, 0, 0, m, m);
        let x = if symmetrize {
            (&a2 + a2.adjoint()) * Complex64::new(0.5, 0.0)
        } else {
            a2
        };
        let inv = b1
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument(format!("B1 singular at t = {t}")))?;
        let mut s = CMat::zeros(n, n);
        s.view_mut((0, 0), (m, m)).copy_from(&(-(x * inv)));
        Ok(s)
    };
    let prov = if symmetrize { SProvenance::CaseII2 } else { SProvenance::CaseII1 };
    Ok(SChoice::new(FnMatrix::new(n, spec.t0, f), prov))
}

fn case_iii(spec: &SystemSpec, j: &CMat, a: &ScalarExpr, b: &ScalarExpr, grid: &[f64], tol: &Tolerances) -> Result<SChoice> {
    let n = spec.n;
    if j.nrows() != n || j.ncols() != n {
        return Err(Error::Config(format!("case III: J must be {n}x{n}")));
    }
    let herm = hermitian_check(j, tol.tol_herm);
    let idem = max_abs(&(j * j - j));
    if !herm.passed || idem > tol.tol_herm {
        return Err(mismatch("III", "J asymmetry or J^2 - J", herm.max_asymmetry.max(idem), grid[0]));
    }
    for &t in grid {
        let bt = b.eval_real(t)?;
        if bt < -tol.tol_psd {
            return Err(mismatch("III", "b(t)", bt, t));
        }
        let bm = spec.b.eval(t)?;
        let res = max_abs(&(&bm - j * Complex64::new(bt, 0.0)));
        if res > scale_tol(tol, &bm) {
            return Err(mismatch("III", "B - b J", res, t));
        }
        let a1 = spec.a.eval(t)?.adjoint() - j * Complex64::new(a.eval_real(t)?, 0.0);
        let r = omega_membership(&a1, tol.omega());
        if !r.is_member {
            return Err(mismatch("III", "real-part spread of A* - a J", r.re_spread, t));
        }
    }
    let (j, a, b) = (j.clone(), a.clone(), b.clone());
    let f = move |t: f64| -> Result<CMat> {
        let ratio = a.eval_real(t)? / b.eval_real(t)?;
        if !ratio.is_finite() {
            return Err(Error::InvalidArgument(format!("a/b undefined at t = {t}")));
        }
        Ok(&j * Complex64::new(-ratio, 0.0))
    };
    Ok(SChoice::new(FnMatrix::new(n, spec.t0, f), SProvenance::CaseIII))
}

fn case_iv(spec: &SystemSpec, a1: &MatrixFunction, grid: &[f64], tol: &Tolerances) -> Result<SChoice> {
    if a1.n() != spec.n {
        return Err(Error::Config(format!("case IV: A1 must be {0}x{0}", spec.n)));
    }
    for &t in grid {
        let a1t = a1.eval(t)?;
        let h = hermitian_check(&a1t, tol.tol_herm);
        if !h.passed {
            return Err(mismatch("IV", "A1 asymmetry", h.max_asymmetry, t));
        }
        let a_star = spec.a.eval(t)?.adjoint();
        let res = max_abs(&(&a_star - a1t * spec.b.eval(t)?));
        if res > scale_tol(tol, &a_star) {
            return Err(mismatch("IV", "A* - A1 B", res, t));
        }
    }
    Ok(SChoice::new(a1.negated().with_t0(spec.t0).with_hermitian(true), SProvenance::CaseIV))
}

/// Build the gauge for `case` after checking its pattern on `grid`; the
/// result is also checked to be hermitian with `A* + S B ∈ Ω_n`.
pub fn suggest_s(spec: &SystemSpec, case: &SCase, grid: &[f64], tol: &Tolerances) -> Result<SChoice> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let s = match case {
        SCase::I => SChoice::zero(spec.n, spec.t0),
        SCase::II1 { m, a1 } => case_ii(spec, *m, a1, false, grid, tol)?,
        SCase::II2 { m, a1 } => case_ii(spec, *m, a1, true, grid, tol)?,
        SCase::III { j, a, b } => case_iii(spec, j, a, b, grid, tol)?,
        SCase::IV { a1 } => case_iv(spec, a1, grid, tol)?,
    };
    let label = format!("{:?}", s.provenance);
    for &t in grid {
        let h = hermitian_check(&s.eval(t)?, tol.tol_herm);
        if !h.passed {
            return Err(mismatch(&label, "S asymmetry", h.max_asymmetry, t));
        }
        let r = gauge_omega(spec, &s, t, tol)?;
        if !r.is_member {
            return Err(mismatch(&label, "real-part spread of A* + S B", r.re_spread, t));
        }
    }
    Ok(s)
}
