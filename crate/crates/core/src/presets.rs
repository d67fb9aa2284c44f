//! Catalog of example systems with their associated gauges and closed forms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::hamsys::SystemSpec;
use crate::matexpr::{parse_matrix_entries, parse_scalar_expr, MatrixFunction, Params, ScalarExpr};
use crate::{Error, Result};

pub const PRESET_IDS: [&str; 7] = ["ex2.1", "ex2.2", "ex2.3", "ex2.4", "ex2.5", "remark2.6", "permutable"];

/// Knobs accepted by the presets; unused fields are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PresetOptions {
    /// Amplitude ν of `ex2.3`.
    pub nu: Option<f64>,
    /// Dimension of `ex2.3` and `remark2.6`.
    pub n: Option<usize>,
    /// μ(t) of `ex2.4`, as an expression.
    pub mu: Option<String>,
    /// α, β of `ex2.2`.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

fn matrix(n: usize, rows: &[Vec<String>], params: &Params, t0: f64) -> Result<MatrixFunction> {
    parse_matrix_entries(n, rows, params, t0).map_err(|e| Error::Config(e.to_string()))
}

fn rows(src: &[&[&str]]) -> Vec<Vec<String>> {
    src.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
}

fn diagonal(n: usize, entry: &str) -> Vec<Vec<String>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { entry.to_string() } else { "0".into() }).collect())
        .collect()
}

/// `A = 0`, `B = I`, `C = −I`.
pub fn remark26(n: usize) -> Result<SystemSpec> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    SystemSpec::new(
        "remark2.6",
        MatrixFunction::zeros(n, 0.0),
        MatrixFunction::identity(n, 0.0),
        MatrixFunction::identity(n, 0.0).negated(),
    )
}

/// Parameters of the 3×3 second-order equation `Φ'' + K Φ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ex21Params {
    pub a1: f64,
    pub a2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t0: f64,
}

impl Default for Ex21Params {
    fn default() -> Self {
        Ex21Params {
            a1: 1.0,
            a2: 1.0,
            mu1: 1.0,
            mu2: 2f64.sqrt(),
            mu3: 1.0,
            mu4: 1.0,
            b: 1.0,
            c: 1.0,
            alpha: 2.0,
            beta: 2.0,
            t0: 1.0,
        }
    }
}

impl Ex21Params {
    fn params(&self) -> Params {
        [
            ("a1", self.a1),
            ("a2", self.a2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("mu3", self.mu3),
            ("mu4", self.mu4),
            ("b", self.b),
            ("c", self.c),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// The common diagonal `a1 sin μ1 t + a2 sin μ2 t`.
    pub fn diagonal_expr(&self) -> Result<ScalarExpr> {
        Ok(crate::matexpr::parse_scalar_expr_with(DIAG21, &self.params())?)
    }
}

const DIAG21: &str = "a1*sin(mu1*t) + a2*sin(mu2*t)";

/// `Φ'' + K Φ = 0` with the quasi-periodic diagonal. The coupling `(2,3)`
/// and `(3,2)` both decay like `t^{−β}` so that K is hermitian.
pub fn ex21(p: &Ex21Params) -> Result<SystemSpec> {
    let k = rows(&[
        &[DIAG21, "b*cos(mu3*t)/t^alpha", "0"],
        &["b*cos(mu3*t)/t^alpha", DIAG21, "c*sin(mu4*t)/t^beta"],
        &["0", "c*sin(mu4*t)/t^beta", DIAG21],
    ]);
    SystemSpec::second_order("ex2.1", matrix(3, &k, &p.params(), p.t0)?)
}

/// The 2×2 system with `a(t) = sin t`, `c(t) = i cos t / t` on `[1, ∞)`.
pub fn ex22(alpha: f64, beta: f64) -> Result<SystemSpec> {
    let params: Params = [("alpha".to_string(), alpha), ("beta".to_string(), beta)].into_iter().collect();
    // A* = [[cos t, a], [−ā, cos t]].
    let a = rows(&[&["cos(t)", "-sin(t)"], &["sin(t)", "cos(t)"]]);
    let b = rows(&[&["1/t", "sin(t)/t"], &["sin(t)/t", "1/t"]]);
    let c = rows(&[&["-1/t + alpha*cos(t)", "i*cos(t)/t"], &["-i*cos(t)/t", "beta*sin(t)"]]);
    SystemSpec::new("ex2.2", matrix(2, &a, &params, 1.0)?, matrix(2, &b, &params, 1.0)?, matrix(2, &c, &params, 1.0)?)
}

/// `Φ' = K2 Ψ`, `Ψ' = −K2 Φ` with `K2 = ν sin t · I_n`.
pub fn ex23(nu: f64, n: usize) -> Result<SystemSpec> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let params: Params = [("nu".to_string(), nu)].into_iter().collect();
    let k2 = matrix(n, &diagonal(n, "nu*sin(t)"), &params, 0.0)?;
    SystemSpec::new("ex2.3", MatrixFunction::zeros(n, 0.0), k2.clone(), k2.negated())
}

/// Zeros of `det Φ` for `ex2.3` from `(I, 0)` at 0: `ν(1 − cos t) ≡ π/2 (mod π)`.
pub fn ex23_zero_times(nu: f64, a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::new();
    // s(t) = ν(1 − cos t) is monotone on each [kπ, (k+1)π].
    let mut k = (a / PI).floor() as i64;
    while (k as f64) * PI < b {
        let (lo, hi) = ((k as f64) * PI, ((k + 1) as f64) * PI);
        let s = |t: f64| nu * (1.0 - t.cos());
        let (s_lo, s_hi) = (s(lo), s(hi));
        let (smin, smax) = (s_lo.min(s_hi), s_lo.max(s_hi));
        let mut j = ((smin - PI / 2.0) / PI).ceil() as i64;
        while PI / 2.0 + (j as f64) * PI <= smax {
            let target = PI / 2.0 + (j as f64) * PI;
            let c = 1.0 - target / nu;
            if c.abs() <= 1.0 {
                let base = c.acos();
                for t in [2.0 * PI * (k as f64 / 2.0).floor() + base, 2.0 * PI * ((k as f64 + 1.0) / 2.0).floor() - base] {
                    if t >= lo.max(a) && t <= hi.min(b) && !out.iter().any(|&u: &f64| (u - t).abs() < 1e-12) {
                        out.push(t);
                    }
                }
            }
            j += 1;
        }
        k += 1;
    }
    out.sort_by(f64::total_cmp);
    out
}

const M24: &str = "max(sin(t), 0)";

/// The 3×3 system with `𝓜(t) = max(sin t, 0)` and the given μ(t), on `[0, ∞)`.
pub fn ex24(mu: &str) -> Result<SystemSpec> {
    parse_scalar_expr(mu)?;
    let mu = format!("({mu})");
    let one_m = format!("(1 + {M24})");
    let a = vec![
        vec![mu.clone(), "2*sin(t)".into(), format!("{one_m}*cos(t)")],
        vec!["0".into(), mu.clone(), format!("{one_m}*sin(t)")],
        vec!["0".into(), "0".into(), mu],
    ];
    let b = diagonal_entries(&["1", "1", M24]);
    let c = diagonal_entries(&[&format!("-{M24}*sin(t)^2"), "-1", &format!("-2*{M24}")]);
    let p = Params::new();
    SystemSpec::new("ex2.4", matrix(3, &a, &p, 0.0)?, matrix(3, &b, &p, 0.0)?, matrix(3, &c, &p, 0.0)?)
}

fn diagonal_entries(d: &[&str]) -> Vec<Vec<String>> {
    (0..d.len())
        .map(|i| (0..d.len()).map(|j| if i == j { d[i].to_string() } else { "0".into() }).collect())
        .collect()
}

/// Hermitian solution of `B X + X B = 2μ I − A − A*` for `ex2.4`, valid
/// for every μ. Its `(3,2)` entry is `−sin t`, which hermiticity forces.
pub fn ex24_gauge() -> Result<MatrixFunction> {
    let s = rows(&[
        &["0", "-sin(t)", "-cos(t)"],
        &["-sin(t)", "0", "-sin(t)"],
        &["-cos(t)", "-sin(t)", "0"],
    ]);
    Ok(matrix(3, &s, &Params::new(), 0.0)?.with_hermitian(true))
}

/// The constant instantiation `a11 = a12 = a33 = 1` (other `a_jk = 0`),
/// `C = I`, `β(t) = 2 + sin t` of the singular-B system.
pub fn ex25() -> Result<SystemSpec> {
    // A* = [[1, 1, 0], [0, 0, 0], [0, 0, 1]].
    let a = rows(&[&["1", "0", "0"], &["1", "0", "0"], &["0", "0", "1"]]);
    let b = rows(&[&["1", "1", "0"], &["1", "1", "0"], &["0", "0", "2 + sin(t)"]]);
    let p = Params::new();
    SystemSpec::new("ex2.5", matrix(3, &a, &p, 0.0)?, matrix(3, &b, &p, 0.0)?, MatrixFunction::identity(3, 0.0))
}

/// The explicit solution `F3` of `G X √B = G` for `ex2.5`.
pub fn ex25_f3() -> Result<MatrixFunction> {
    let q = "sqrt(2)/4";
    let f = rows(&[&[q, q, "0"], &[q, q, "0"], &["0", "0", "1/sqrt(2 + sin(t))"]]);
    matrix(3, &f, &Params::new(), 0.0)
}

fn beta25(t: f64) -> (f64, f64, f64) {
    let b = 2.0 + t.sin();
    let k = t.cos() / (2.0 * b);
    let kd = -(2.0 * t.sin() + 1.0) / (2.0 * b * b);
    (b, k, kd)
}

/// The displayed closed form `−g' − g² − c11 − 2 Re c12 − c22` with
/// `g = Re(a11 + a21 + a33) − β'/(2β)` for the `ex2.5` instantiation.
pub fn ex25_printed_trace(t: f64) -> f64 {
    let (_, k, kd) = beta25(t);
    let g = 2.0 - k;
    kd - g * g - 2.0
}

/// Trace of `𝒟_F3` worked out from the definition for the `ex2.5`
/// instantiation: `K' − 1 − (1 − K)² − 2 − β` with `K = β'/(2β)`.
pub fn ex25_trace(t: f64) -> f64 {
    let (b, k, kd) = beta25(t);
    kd - 1.0 - (1.0 - k) * (1.0 - k) - 2.0 - b
}

/// `B = diag(2, 3)` with a diagonal time-varying A, so `√B` and A commute.
pub fn permutable() -> Result<SystemSpec> {
    let p = Params::new();
    let a = matrix(2, &diagonal_entries(&["sin(t) + i", "cos(2*t)"]), &p, 0.0)?;
    let b = matrix(2, &diagonal_entries(&["2", "3"]), &p, 0.0)?;
    let c = matrix(2, &diagonal_entries(&["-1", "-2"]), &p, 0.0)?;
    SystemSpec::new("permutable", a, b, c)
}

/// `−tr[H' + H² + B C − (√B'√B⁻¹)' + H √B'√B⁻¹]` with `H = (A + A*)/2`,
/// for `permutable` (where `√B' = 0`).
pub fn permutable_trace(t: f64) -> f64 {
    let h = [t.sin(), (2.0 * t).cos()];
    let hd = [t.cos(), -2.0 * (2.0 * t).sin()];
    let bc = [-2.0, -6.0];
    -(0..2).map(|i| hd[i] + h[i] * h[i] + bc[i]).sum::<f64>()
}

/// Build a preset by id.
pub fn build_preset(id: &str, opts: &PresetOptions) -> Result<SystemSpec> {
    match id {
        "ex2.1" => ex21(&Ex21Params::default()),
        "ex2.2" => ex22(opts.alpha.unwrap_or(0.1), opts.beta.unwrap_or(0.1)),
        "ex2.3" => ex23(opts.nu.unwrap_or(1.6), opts.n.unwrap_or(1)),
        "ex2.4" => ex24(opts.mu.as_deref().unwrap_or("0")),
        "ex2.5" => ex25(),
        "remark2.6" => remark26(opts.n.unwrap_or(3)),
        "permutable" => permutable(),
        other => Err(Error::Config(format!(
            "unknown example '{other}'; available: {}",
            PRESET_IDS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_build() {
        for id in PRESET_IDS {
            let spec = build_preset(id, &PresetOptions::default()).unwrap();
            let t = spec.t0 + 0.7;
            spec.coefficients(t).unwrap();
        }
        assert!(build_preset("ex9", &PresetOptions::default()).unwrap_err().is_config());
    }

    #[test]
    fn ex21_is_hermitian() {
        let spec = ex21(&Ex21Params::default()).unwrap();
        let c = spec.c.eval(3.3).unwrap();
        assert!(crate::linalg::max_abs(&(&c - c.adjoint())) == 0.0);
    }

    #[test]
    fn ex23_zero_times_solve_the_phase_equation() {
        let nu = 2.0;
        let z = ex23_zero_times(nu, 0.0, 12.0);
        assert!(!z.is_empty());
        for t in &z {
            let s = nu * (1.0 - t.cos());
            let r = (s - PI / 2.0) / PI;
            assert!((r - r.round()).abs() < 1e-12, "t = {t}");
        }
        for w in z.windows(2) {
            assert!(w[0] < w[1]);
        }
        // 1 − cos t = π/4 on the first half-period.
        let first = (1.0 - PI / 4.0).acos();
        assert!((z[0] - first).abs() < 1e-12);
    }

    #[test]
    fn ex23_single_zero_per_hump_for_small_nu() {
        // s = ν(1 − cos t) peaks at 3.2 < 3π/2, so it crosses π/2 once per half-period.
        let z = ex23_zero_times(1.6, 0.0, 2.0 * PI);
        assert_eq!(z.len(), 2);
        assert!((z[0] - (1.0 - PI / 3.2).acos()).abs() < 1e-12);
    }
}
