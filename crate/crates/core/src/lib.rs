//! Oscillation criteria for linear Hamiltonian systems
//!
//! ```text
//! Φ' = A(t) Φ + B(t) Ψ,    Ψ' = C(t) Φ − A*(t) Ψ,    B = B*, C = C*,
//! ```
//!
//! together with the numerical oracles used to cross-check every verdict:
//! direct integration with det Φ zero detection, the matrix Riccati flow and
//! the Prüfer angle of scalar reductions.
//!
//! Module map:
//! * [`matexpr`]: expression language for time-dependent matrices;
//! * [`linalg`]: hermitian kernels, Ω_n membership, the two matrix equations;
//! * [`ode`]: Dormand–Prince 5(4) integrator with dense output;
//! * [`hamsys`]: system specs, prepared solutions, oracles;
//! * [`scalarosc`]: planar scalar systems, their criteria and the Prüfer oracle;
//! * [`criteria`]: matrix-level criterion pipelines;
//! * [`presets`] and [`report`]: the example catalog and JSON reports.

pub mod criteria;
pub mod hamsys;
pub mod linalg;
pub mod matexpr;
pub mod ode;
pub mod presets;
pub mod report;
pub mod scalarosc;
mod tolerances;

pub use tolerances::Tolerances;

use num_complex::Complex64;
use thiserror::Error;

pub type CMat = nalgebra::DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] matexpr::ParseError),
    #[error("evaluation error: {0}")]
    Eval(#[from] matexpr::EvalError),
    #[error("matrix config error: {0}")]
    MatrixConfig(#[from] matexpr::MatrixConfigError),
    #[error("linear algebra error: {0}")]
    Linalg(#[from] linalg::LinalgError),
    #[error("integration error: {0}")]
    Integration(#[from] ode::OdeError),
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(
        "A* + S B is not in Omega_n at t = {t}: normality residual {:e}, real-part spread {:e}",
        report.normality_residual,
        report.re_spread
    )]
    NotInOmega { t: f64, report: linalg::OmegaReport },
}

impl Error {
    /// Configuration and usage problems, as opposed to numerical failures.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::MatrixConfig(_)
                | Error::InvalidInterval { .. }
                | Error::InvalidArgument(_)
                | Error::Config(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    Ok(())
}
