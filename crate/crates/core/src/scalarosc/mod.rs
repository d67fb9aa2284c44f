//! Planar scalar systems `φ' = a11 φ + a12 ψ`, `ψ' = a21 φ + a22 ψ`.
//!
//! Two sufficient tests are provided: an interval test bounding the
//! integral of `min(a12 e^{−∫E}, −a21 e^{∫E})` from below by π, and a
//! half-line divergence test for both weighted integrals. The Prüfer angle
//! integration counts zeros of φ directly and serves as the oracle.

mod prufer;
mod quad;
mod tests_checks;
mod verdict;

pub use prufer::{prufer_integrate, PruferTrace};
pub use quad::{integrate_weighted, ScaledSum, WeightedIntegral};
pub use tests_checks::{
    halfline_oracle_check, ladder_rungs, scalar_oracle_check, sl_oscillation_check, theorem23_check, theorem24_check,
    LadderRung, ScalarMode, A12_SIGN, MIN_INTEGRAL, P_DIVERGES, Q_DIVERGES, TWO_ZEROS, ZEROS_PERSIST,
};
pub use verdict::{Condition, CriterionVerdict, VerdictStatus};

use std::fmt;
use std::sync::Arc;

use crate::matexpr::ScalarExpr;
use crate::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// A real coefficient: a parsed expression or a computed function of t.
#[derive(Clone)]
pub enum Coefficient {
    Expr(ScalarExpr),
    Computed { label: String, f: ScalarFn },
}

impl Coefficient {
    pub fn constant(v: f64) -> Self {
        Coefficient::Expr(ScalarExpr::constant(v))
    }

    pub fn computed(label: impl Into<String>, f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        Coefficient::Computed {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Coefficient::Expr(crate::matexpr::parse_scalar_expr(src)?))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Coefficient::Expr(e) => Ok(e.eval_real(t)?),
            Coefficient::Computed { f, .. } => f(t),
        }
    }

    pub fn as_expr(&self) -> Option<&ScalarExpr> {
        match self {
            Coefficient::Expr(e) => Some(e),
            Coefficient::Computed { .. } => None,
        }
    }

    pub fn negated(&self) -> Self {
        match self {
            Coefficient::Expr(e) => Coefficient::Expr(e.clone().neg()),
            Coefficient::Computed { label, f } => {
                let f = f.clone();
                Coefficient::computed(format!("-({label})"), move |t| Ok(-f(t)?))
            }
        }
    }

    pub fn minus(&self, other: &Coefficient) -> Self {
        match (self, other) {
            (Coefficient::Expr(x), Coefficient::Expr(y)) => {
                if y.is_zero_constant() {
                    Coefficient::Expr(x.clone())
                } else {
                    Coefficient::Expr(x.clone().sub(y.clone()))
                }
            }
            _ => {
                let (x, y) = (self.clone(), other.clone());
                Coefficient::computed(format!("({self}) - ({other})"), move |t| Ok(x.eval(t)? - y.eval(t)?))
            }
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Expr(e) => write!(f, "{e}"),
            Coefficient::Computed { label, .. } => write!(f, "{label}"),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coefficient({self})")
    }
}

impl From<ScalarExpr> for Coefficient {
    fn from(e: ScalarExpr) -> Self {
        Coefficient::Expr(e)
    }
}

#[derive(Debug, Clone)]
pub struct ScalarSystem {
    pub a11: Coefficient,
    pub a12: Coefficient,
    pub a21: Coefficient,
    pub a22: Coefficient,
    pub t0: f64,
}

impl ScalarSystem {
    pub fn new(a11: Coefficient, a12: Coefficient, a21: Coefficient, a22: Coefficient, t0: f64) -> Self {
        ScalarSystem { a11, a12, a21, a22, t0 }
    }

    pub fn parse(a11: &str, a12: &str, a21: &str, a22: &str, t0: f64) -> Result<Self> {
        Ok(Self::new(
            Coefficient::parse(a11)?,
            Coefficient::parse(a12)?,
            Coefficient::parse(a21)?,
            Coefficient::parse(a22)?,
            t0,
        ))
    }

    /// `φ'' + q φ = 0` as `a12 = 1`, `a21 = −q`, `a11 = a22 = 0`.
    pub fn second_order(q: Coefficient, t0: f64) -> Self {
        Self::new(
            Coefficient::constant(0.0),
            Coefficient::constant(1.0),
            q.negated(),
            Coefficient::constant(0.0),
            t0,
        )
    }

    /// Check that all four coefficients evaluate to reals on the grid.
    pub fn validate(&self, grid: &[f64]) -> Result<()> {
        for &t in grid {
            for (name, c) in [("a11", &self.a11), ("a12", &self.a12), ("a21", &self.a21), ("a22", &self.a22)] {
                c.eval(t)
                    .map_err(|e| Error::Config(format!("{name} at t = {t}: {e}")))?;
            }
        }
        Ok(())
    }
}

/// `E = a11 − a22`.
pub fn e_function(sys: &ScalarSystem) -> Coefficient {
    sys.a11.minus(&sys.a22)
}
