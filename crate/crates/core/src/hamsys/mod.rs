//! Hamiltonian system instances and their numerical oracles.

mod integrate;
mod oracle;
mod riccati;

pub use integrate::{detect_det_zeros, integrate_system, median_zero_tol, IntegratorSettings, OracleTrace};
pub use oracle::{oracle_verdict, oracle_verdict_with, trial_seed, OracleEvidence, OracleOutcome, TrialResult};
pub use riccati::{integrate_riccati, RiccatiTrace};

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_check, max_abs, HermitianCheckReport};
use crate::matexpr::{parse_matrix_entries, MatrixConfigError, MatrixFunction, Params};
use crate::{CMat, Error, Result};

/// `Φ' = AΦ + BΨ`, `Ψ' = CΦ − A*Ψ` on `[t0, ∞)`.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub label: String,
    pub n: usize,
    pub t0: f64,
    pub a: MatrixFunction,
    pub b: MatrixFunction,
    pub c: MatrixFunction,
}

impl SystemSpec {
    pub fn new(
        label: impl Into<String>,
        a: MatrixFunction,
        b: MatrixFunction,
        c: MatrixFunction,
    ) -> Result<Self> {
        let n = a.n();
        for (name, m) in [("B", &b), ("C", &c)] {
            if m.n() != n {
                return Err(Error::Config(format!(
                    "coefficient {name} is {}x{} but A is {n}x{n}",
                    m.n(),
                    m.n()
                )));
            }
        }
        let t0 = a.t0();
        Ok(SystemSpec {
            label: label.into(),
            n,
            t0,
            b: b.with_t0(t0).with_hermitian(true),
            c: c.with_t0(t0).with_hermitian(true),
            a,
        })
    }

    /// `Φ'' + K Φ = 0` written as `A = 0`, `B = I`, `C = −K`.
    pub fn second_order(label: impl Into<String>, k: MatrixFunction) -> Result<Self> {
        let n = k.n();
        let t0 = k.t0();
        Self::new(
            label,
            MatrixFunction::zeros(n, t0),
            MatrixFunction::identity(n, t0),
            k.negated(),
        )
    }

    /// `(A(t), B(t), C(t))`.
    pub fn coefficients(&self, t: f64) -> Result<(CMat, CMat, CMat)> {
        Ok((self.a.eval(t)?, self.b.eval(t)?, self.c.eval(t)?))
    }

    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        SystemConfig::build(cfg)
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let cfg: SystemConfig =
            serde_json::from_str(src).map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        Self::from_config(&cfg)
    }

    pub fn to_config(&self) -> SystemConfig {
        let rows = |m: &MatrixFunction| Some(m.to_config().entries.into_iter().map(|r| r.into_iter().map(Entry::Expr).collect()).collect());
        SystemConfig {
            label: Some(self.label.clone()),
            n: self.n,
            t0: self.t0,
            a: rows(&self.a),
            b: rows(&self.b),
            c: rows(&self.c),
            k: None,
            second_order: false,
            params: BTreeMap::new(),
        }
    }
}

/// A matrix entry in a config file: an expression string or a bare number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Expr(String),
    Number(f64),
}

impl Entry {
    fn source(&self) -> String {
        match self {
            Entry::Expr(s) => s.clone(),
            Entry::Number(v) => format!("{v:?}"),
        }
    }
}

/// JSON system file: `{ "n": 2, "t0": 1, "A": [[...]], "B": [[...]], "C": [[...]] }`.
///
/// With `"second_order": true` the file gives `"K"` instead and describes
/// `Φ'' + K Φ = 0`. Omitted `A` means zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub n: usize,
    #[serde(default)]
    pub t0: f64,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<Entry>>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<Entry>>>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<Entry>>>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub second_order: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: Params,
}

impl SystemConfig {
    fn matrix(&self, name: &str, rows: &[Vec<Entry>]) -> Result<MatrixFunction> {
        let src: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(Entry::source).collect()).collect();
        parse_matrix_entries(self.n, &src, &self.params, self.t0)
            .map_err(|e| Error::Config(format!("{name}: {e}")))
    }

    fn build(&self) -> Result<SystemSpec> {
        if self.n == 0 {
            return Err(MatrixConfigError::ZeroDimension.into());
        }
        if !self.t0.is_finite() {
            return Err(Error::Config("t0 must be finite".into()));
        }
        let label = self.label.clone().unwrap_or_else(|| "system".into());
        if self.second_order {
            if self.a.is_some() || self.b.is_some() || self.c.is_some() {
                return Err(Error::Config("second_order systems take K only, not A/B/C".into()));
            }
            let k = self
                .k
                .as_ref()
                .ok_or_else(|| Error::Config("second_order: true requires K".into()))?;
            return SystemSpec::second_order(label, self.matrix("K", k)?);
        }
        if self.k.is_some() {
            return Err(Error::Config("K is only accepted with second_order: true".into()));
        }
        let a = match &self.a {
            Some(rows) => self.matrix("A", rows)?,
            None => MatrixFunction::zeros(self.n, self.t0),
        };
        let b = self.matrix("B", self.b.as_deref().ok_or_else(|| Error::Config("missing B".into()))?)?;
        let c = self.matrix("C", self.c.as_deref().ok_or_else(|| Error::Config("missing C".into()))?)?;
        SystemSpec::new(label, a, b, c)
    }
}

/// Hermitian diagnostics of B and C over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub b: HermitianCheckReport,
    pub c: HermitianCheckReport,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.b.passed && self.c.passed
    }
}

pub fn validate_system(spec: &SystemSpec, grid: &[f64], tol: f64) -> Result<ValidationReport> {
    let zero = HermitianCheckReport {
        max_asymmetry: 0.0,
        passed: true,
        tol,
    };
    let mut rep = ValidationReport { b: zero, c: zero };
    for &t in grid {
        rep.b = rep.b.merge(hermitian_check(&spec.b.eval(t)?, tol));
        rep.c = rep.c.merge(hermitian_check(&spec.c.eval(t)?, tol));
    }
    Ok(rep)
}

/// Uniform grid of `n ≥ 2` points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|k| if k + 1 == n { b } else { a + h * k as f64 })
        .collect()
}

/// Initial data `(Φ(a), Ψ(a))` with hermitian `Φ*Ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedInitial {
    pub phi0: CMat,
    pub psi0: CMat,
}

impl PreparedInitial {
    /// `‖Φ0*Ψ0 − Ψ0*Φ0‖_∞`.
    pub fn invariant(&self) -> f64 {
        max_abs(&(self.phi0.adjoint() * &self.psi0 - self.psi0.adjoint() * &self.phi0))
    }

    pub fn norm(&self) -> f64 {
        max_abs(&self.phi0).max(max_abs(&self.psi0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    /// `(I, H)` for the given hermitian H.
    Hermitian(CMat),
    /// `(I, H)` with H drawn from the seeded generator.
    RandomHermitian,
    /// `(sin t0 · I, cos t0 · I)`, the sinusoidal pair started at `t0`.
    Sinusoidal { t0: f64 },
}

/// Seeded random hermitian matrix with entries of modulus at most ~1.
pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMat {
    let mut h = CMat::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in (i + 1)..n {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

pub fn make_prepared_initial(n: usize, kind: &InitialKind, seed: u64) -> Result<PreparedInitial> {
    if n == 0 {
        return Err(MatrixConfigError::ZeroDimension.into());
    }
    match kind {
        InitialKind::Hermitian(h) => {
            if h.nrows() != n || h.ncols() != n {
                return Err(Error::InvalidArgument(format!(
                    "initial H is {}x{}, expected {n}x{n}",
                    h.nrows(),
                    h.ncols()
                )));
            }
            let rep = hermitian_check(h, 1e-12);
            if !rep.passed {
                return Err(Error::InvalidArgument(format!(
                    "initial H is not hermitian (asymmetry {:e})",
                    rep.max_asymmetry
                )));
            }
            Ok(PreparedInitial {
                phi0: CMat::identity(n, n),
                psi0: crate::linalg::hermitian_part(h),
            })
        }
        InitialKind::RandomHermitian => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(PreparedInitial {
                phi0: CMat::identity(n, n),
                psi0: random_hermitian(n, &mut rng),
            })
        }
        InitialKind::Sinusoidal { t0 } => {
            let s = t0.sin();
            if s.abs() < 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "sinusoidal start at t0 = {t0} gives a singular Φ0"
                )));
            }
            let id = CMat::identity(n, n);
            Ok(PreparedInitial {
                phi0: &id * Complex64::new(s, 0.0),
                psi0: id * Complex64::new(t0.cos(), 0.0),
            })
        }
    }
}
