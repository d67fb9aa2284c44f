use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::expr::ScalarExpr;
use super::parser::{parse_scalar_expr_with, Params};
use super::{EvalError, MatrixConfigError, ParseError};
use crate::{CMat, Error};

/// Anything that yields an n×n complex matrix at each time on `[t0, ∞)`.
///
/// Implemented by parsed [`MatrixFunction`]s and by the pointwise-computed
/// gauges of the criteria module (Lyapunov solutions, `√B`, ...).
pub trait TimeMatrix: Send + Sync {
    fn dim(&self) -> usize;
    fn t0(&self) -> f64;
    fn eval(&self, t: f64) -> Result<CMat, Error>;

    /// Exact derivative when one is available; `None` means "use finite differences".
    fn exact_derivative(&self, _t: f64) -> Option<Result<CMat, Error>> {
        None
    }
}

/// Config fragment `{ "n": 2, "entries": [["1", "sin(t)"], ...], "hermitian": true }`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixConfig {
    pub n: usize,
    pub entries: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub hermitian: bool,
}

/// A time-dependent complex matrix whose entries are scalar expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFunction {
    n: usize,
    entries: Vec<ScalarExpr>,
    t0: f64,
    hermitian: bool,
}

impl MatrixFunction {
    /// `entries` is row-major and must hold `n * n` expressions.
    pub fn new(n: usize, entries: Vec<ScalarExpr>, t0: f64) -> Result<Self, MatrixConfigError> {
        if n == 0 {
            return Err(MatrixConfigError::ZeroDimension);
        }
        if entries.len() != n * n {
            return Err(MatrixConfigError::DimensionMismatch {
                expected: n,
                row: None,
                found: entries.len(),
            });
        }
        Ok(MatrixFunction {
            n,
            entries,
            t0,
            hermitian: false,
        })
    }

    pub fn from_fn(n: usize, t0: f64, mut f: impl FnMut(usize, usize) -> ScalarExpr) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        MatrixFunction {
            n,
            entries,
            t0,
            hermitian: false,
        }
    }

    pub fn zeros(n: usize, t0: f64) -> Self {
        Self::from_fn(n, t0, |_, _| ScalarExpr::zero())
    }

    pub fn identity(n: usize, t0: f64) -> Self {
        Self::from_fn(n, t0, |i, j| ScalarExpr::constant(if i == j { 1.0 } else { 0.0 }))
    }

    pub fn with_hermitian(mut self, flag: bool) -> Self {
        self.hermitian = flag;
        self
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.entries[i * self.n + j]
    }

    /// Entrywise negation, used for `C = -K` of second-order systems.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = e.clone().neg();
        }
        out
    }

    /// Entrywise multiplication by a real constant.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = ScalarExpr::constant(alpha).mul(e.clone());
        }
        out
    }

    fn check_domain(&self, t: f64) -> Result<(), EvalError> {
        if !t.is_finite() || t < self.t0 - 1e-12 * self.t0.abs().max(1.0) {
            return Err(EvalError::Domain { t, t0: self.t0 });
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<CMat, EvalError> {
        self.check_domain(t)?;
        let mut m = CMat::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self.entry(i, j).eval(t).map_err(|e| e.at(i, j))?;
            }
        }
        Ok(m)
    }

    /// Exact entrywise derivative through forward-mode evaluation.
    pub fn symbolic_derivative(&self, t: f64) -> Result<CMat, EvalError> {
        self.check_domain(t)?;
        let mut m = CMat::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self.entry(i, j).derivative(t).map_err(|e| e.at(i, j))?;
            }
        }
        Ok(m)
    }

    pub fn to_config(&self) -> MatrixConfig {
        MatrixConfig {
            n: self.n,
            entries: (0..self.n)
                .map(|i| (0..self.n).map(|j| self.entry(i, j).to_string()).collect())
                .collect(),
            hermitian: self.hermitian,
        }
    }
}

impl TimeMatrix for MatrixFunction {
    fn dim(&self) -> usize {
        self.n
    }

    fn t0(&self) -> f64 {
        self.t0
    }

    fn eval(&self, t: f64) -> Result<CMat, Error> {
        Ok(MatrixFunction::eval(self, t)?)
    }

    fn exact_derivative(&self, t: f64) -> Option<Result<CMat, Error>> {
        match self.symbolic_derivative(t) {
            Ok(m) => Some(Ok(m)),
            // Kinks fall back to finite differences.
            Err(e) if e.is_kink() => None,
            Err(e) => Some(Err(e.into())),
        }
    }
}

/// Parse a matrix config; parse errors from all entries are reported together.
pub fn parse_matrix_function(
    cfg: &MatrixConfig,
    params: &Params,
    t0: f64,
) -> Result<MatrixFunction, MatrixConfigError> {
    parse_matrix_entries(cfg.n, &cfg.entries, params, t0).map(|m| m.with_hermitian(cfg.hermitian))
}

pub fn parse_matrix_entries(
    n: usize,
    rows: &[Vec<String>],
    params: &Params,
    t0: f64,
) -> Result<MatrixFunction, MatrixConfigError> {
    if n == 0 {
        return Err(MatrixConfigError::ZeroDimension);
    }
    if rows.len() != n {
        return Err(MatrixConfigError::DimensionMismatch {
            expected: n,
            row: None,
            found: rows.len(),
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(MatrixConfigError::DimensionMismatch {
                expected: n,
                row: Some(i),
                found: row.len(),
            });
        }
    }
    let mut entries = Vec::with_capacity(n * n);
    let mut failures: Vec<(usize, usize, ParseError)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, src) in row.iter().enumerate() {
            match parse_scalar_expr_with(src, params) {
                Ok(e) => entries.push(e),
                Err(e) => {
                    failures.push((i, j, e));
                    entries.push(ScalarExpr::zero());
                }
            }
        }
    }
    if !failures.is_empty() {
        return Err(MatrixConfigError::Entries(failures));
    }
    MatrixFunction::new(n, entries, t0)
}

/// Default finite-difference step `1e-5 * max(1, |t|)`.
pub fn default_step(t: f64) -> f64 {
    1e-5 * t.abs().max(1.0)
}

/// Central difference `(M(t+h) - M(t-h)) / 2h`.
pub fn num_derivative(m: &dyn TimeMatrix, t: f64, h: f64) -> Result<CMat, Error> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if t - h < m.t0() - 1e-12 * m.t0().abs().max(1.0) {
        return Err(EvalError::Domain { t: t - h, t0: m.t0() }.into());
    }
    let plus = m.eval(t + h)?;
    let minus = m.eval(t - h)?;
    Ok((plus - minus) / Complex64::new(2.0 * h, 0.0))
}

/// Fourth-order derivative used for composite quantities: exact when the
/// source provides it, otherwise a five-point stencil (forward-biased when
/// the central stencil would leave the domain).
pub fn derivative_auto(m: &dyn TimeMatrix, t: f64, h: f64) -> Result<CMat, Error> {
    if let Some(exact) = m.exact_derivative(t) {
        return exact;
    }
    let scale = |c: f64| Complex64::new(c / (12.0 * h), 0.0);
    if t - 2.0 * h >= m.t0() {
        let f = |k: f64| m.eval(t + k * h);
        let d = (f(-2.0)? - f(-1.0)? * Complex64::new(8.0, 0.0) + f(1.0)? * Complex64::new(8.0, 0.0)
            - f(2.0)?)
            * scale(1.0);
        Ok(d)
    } else {
        let f = |k: f64| m.eval(t + k * h);
        let coeffs = [-25.0, 48.0, -36.0, 16.0, -3.0];
        let mut acc = CMat::zeros(m.dim(), m.dim());
        for (k, c) in coeffs.iter().enumerate() {
            acc += f(k as f64)? * Complex64::new(*c, 0.0);
        }
        Ok(acc * scale(1.0))
    }
}

/// Step used by [`derivative_auto`] for composite quantities.
pub fn composite_step(t: f64) -> f64 {
    1e-3 * t.abs().max(1.0)
}

/// Adapter turning a closure into a [`TimeMatrix`].
pub struct FnMatrix<F> {
    n: usize,
    t0: f64,
    f: F,
}

impl<F> FnMatrix<F>
where
    F: Fn(f64) -> Result<CMat, Error> + Send + Sync,
{
    pub fn new(n: usize, t0: f64, f: F) -> Self {
        FnMatrix { n, t0, f }
    }
}

impl<F> TimeMatrix for FnMatrix<F>
where
    F: Fn(f64) -> Result<CMat, Error> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn t0(&self) -> f64 {
        self.t0
    }

    fn eval(&self, t: f64) -> Result<CMat, Error> {
        (self.f)(t)
    }
}
