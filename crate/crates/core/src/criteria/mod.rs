//! Matrix-level criterion pipelines.
//!
//! Each pipeline checks the matrix hypotheses on a sampled grid, builds a
//! planar scalar reduction and hands it to [`crate::scalarosc`]. Every
//! criterion is sufficient only: the outcome is an oscillation claim or
//! `Inconclusive`.

mod aggregate;
mod cases;
mod df;
mod grid;
mod pipelines;

pub use aggregate::remark21_aggregate;
pub use cases::{suggest_s, SCase};
pub use df::{theorem25_check, DfEvaluator};
pub use grid::{B_PSD, FACTOR_SOLVABLE, LYAPUNOV_SOLVABLE, OMEGA_MEMBERSHIP, SCALAR_REDUCTION, SMOOTH_GAUGE};
pub use pipelines::{corollary_check, theorem21_check, theorem22_check, CorollaryVariant};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hamsys::SystemSpec;
use crate::linalg::{omega_membership, solve_lyapunov, OmegaReport};
use crate::matexpr::{composite_step, derivative_auto, FnMatrix, MatrixFunction, ScalarExpr, TimeMatrix};
use crate::{CMat, Error, Result, Tolerances};

/// Where a gauge `S(t)` came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SProvenance {
    User,
    CaseI,
    CaseII1,
    CaseII2,
    CaseIII,
    CaseIV,
    /// Pointwise hermitian solution of `B X + X B = 2μ I − A − A*`.
    Lyapunov { mu: String },
}

/// A hermitian gauge `S(t)` with its provenance.
#[derive(Clone)]
pub struct SChoice {
    pub s: Arc<dyn TimeMatrix>,
    pub provenance: SProvenance,
}

impl fmt::Debug for SChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SChoice")
            .field("n", &self.s.dim())
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl SChoice {
    pub fn new(s: impl TimeMatrix + 'static, provenance: SProvenance) -> Self {
        SChoice {
            s: Arc::new(s),
            provenance,
        }
    }

    pub fn user(s: MatrixFunction) -> Self {
        Self::new(s.with_hermitian(true), SProvenance::User)
    }

    /// `S ≡ 0`.
    pub fn zero(n: usize, t0: f64) -> Self {
        Self::new(MatrixFunction::zeros(n, t0).with_hermitian(true), SProvenance::CaseI)
    }

    /// The pointwise Lyapunov gauge for the given μ.
    pub fn lyapunov(spec: &SystemSpec, mu: ScalarExpr, tol_sing: f64) -> Self {
        let spec = Arc::new(spec.clone());
        let label = mu.to_string();
        let n = spec.n;
        let t0 = spec.t0;
        let f = move |t: f64| -> Result<CMat> {
            let (a, b, _) = spec.coefficients(t)?;
            let m = mu.eval_real(t)?;
            let r = CMat::identity(n, n) * Complex64::new(2.0 * m, 0.0) - &a - a.adjoint();
            Ok(solve_lyapunov(&b, &r, tol_sing)?.x)
        };
        Self::new(FnMatrix::new(n, t0, f), SProvenance::Lyapunov { mu: label })
    }

    pub fn eval(&self, t: f64) -> Result<CMat> {
        self.s.eval(t)
    }

    /// `S'(t)`: exact when available, five-point stencil otherwise.
    pub fn derivative(&self, t: f64) -> Result<CMat> {
        derivative_auto(&*self.s, t, composite_step(t))
    }
}

/// `D_S(t) = S' + S B S + A* S + S A − C`.
pub fn build_ds(spec: &SystemSpec, s: &SChoice, t: f64) -> Result<CMat> {
    let (a, b, c) = spec.coefficients(t)?;
    let sm = s.eval(t)?;
    let sd = s.derivative(t)?;
    Ok(sd + &sm * &b * &sm + a.adjoint() * &sm + &sm * &a - c)
}

/// Ω_n diagnostics of `A*(t) + S(t) B(t)`.
pub fn gauge_omega(spec: &SystemSpec, s: &SChoice, t: f64, tol: &Tolerances) -> Result<OmegaReport> {
    let a = spec.a.eval(t)?;
    let b = spec.b.eval(t)?;
    let m = a.adjoint() + s.eval(t)? * b;
    Ok(omega_membership(&m, tol.omega()))
}

/// `σ_S(t) = W(A* + S B)`; fails with [`Error::NotInOmega`] off Ω_n.
pub fn sigma_s(spec: &SystemSpec, s: &SChoice, t: f64, tol: &Tolerances) -> Result<f64> {
    let report = gauge_omega(spec, s, t, tol)?;
    if !report.is_member {
        return Err(Error::NotInOmega { t, report });
    }
    Ok(report.w)
}

#[cfg(test)]
mod tests;
