//! Scalar and matrix-valued expressions in the time variable `t`.
//!
//! Coefficients `A(t)`, `B(t)`, `C(t)` and gauges `S(t)` are written as
//! strings such as `"(1/t)*sin(t)"` or `"cos(t) + i*sin(t)"`, parsed once
//! and evaluated in complex arithmetic. Expressions are immutable after
//! parsing and evaluation is a pure function of `t`.

mod expr;
mod matrix;
mod parser;

pub use expr::{BinOp, Dual, EvalMode, Func, Node, ScalarExpr};
pub use matrix::{
    composite_step, default_step, derivative_auto, num_derivative, parse_matrix_entries,
    parse_matrix_function, FnMatrix, MatrixConfig, MatrixFunction, TimeMatrix,
};
pub use parser::{parse_scalar_expr, parse_scalar_expr_with, Params};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier '{name}' at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("sqrt of negative real {0}")]
    SqrtOfNegative(f64),
    #[error("logarithm of non-positive value {0}")]
    LogOfNonPositive(f64),
    #[error("fractional power of negative real {0}")]
    FractionalPowerOfNegative(f64),
    #[error("max/min of non-real arguments")]
    NonRealComparison,
    #[error("non-finite result")]
    NonFinite,
    #[error("expected a real value, imaginary part {imag:e}")]
    NotReal { imag: f64 },
    #[error("expression not differentiable here")]
    Kink,
    #[error("t = {t} lies outside the domain [{t0}, inf)")]
    Domain { t: f64, t0: f64 },
    #[error("entry ({row}, {col}): {source}")]
    Entry {
        row: usize,
        col: usize,
        source: Box<EvalError>,
    },
}

impl EvalError {
    pub fn at(self, row: usize, col: usize) -> Self {
        EvalError::Entry {
            row,
            col,
            source: Box::new(self),
        }
    }

    pub fn is_kink(&self) -> bool {
        match self {
            EvalError::Kink => true,
            EvalError::Entry { source, .. } => source.is_kink(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixConfigError {
    #[error("matrix dimension must be positive")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, found {found}{}", row.map(|r| format!(" in row {r}")).unwrap_or_default())]
    DimensionMismatch {
        expected: usize,
        row: Option<usize>,
        found: usize,
    },
    #[error("{} entry parse error(s): {}", .0.len(), format_entry_errors(.0))]
    Entries(Vec<(usize, usize, ParseError)>),
}

fn format_entry_errors(errs: &[(usize, usize, ParseError)]) -> String {
    errs.iter()
        .map(|(i, j, e)| format!("({i}, {j}): {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn eval(src: &str, t: f64) -> Complex64 {
        parse_scalar_expr(src).unwrap().eval(t).unwrap()
    }

    #[test]
    fn sin_at_half_pi() {
        assert!((eval("sin(t)", PI / 2.0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn undeclared_identifier() {
        let err = parse_scalar_expr("a").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "a".into(),
                pos: 0
            }
        );
    }

    #[test]
    fn quasi_periodic_sum() {
        let got = eval("2*sin(1*t)+1*sin(1.41421356*t)", 1.0);
        let want = 2.0 * 1f64.sin() + 1.41421356f64.sin();
        assert!((got.re - want).abs() < 1e-15);
        assert_eq!(got.im, 0.0);
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("-2^2", 0.0).re, -4.0);
        assert_eq!(eval("2^-1", 0.0).re, 0.5);
        assert_eq!(eval("2^3^2", 0.0).re, 512.0);
        assert_eq!(eval("1 - 2 - 3", 0.0).re, -4.0);
        assert_eq!(eval("8/2/2", 0.0).re, 2.0);
        assert_eq!(eval("2*3 + 4*5", 0.0).re, 26.0);
        assert_eq!(eval("3 - -t", 2.0).re, 5.0);
        assert_eq!(eval("  1.5e1  +\tt ", 1.0).re, 16.0);
    }

    #[test]
    fn complex_literals() {
        let z = eval("1 + i*2", 0.0);
        assert_eq!(z, Complex64::new(1.0, 2.0));
        assert_eq!(eval("i*i", 0.0), Complex64::new(-1.0, 0.0));
        assert!((eval("sqrt(-4)", 0.0) - Complex64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_errors() {
        let e = parse_scalar_expr("1/(t-1)").unwrap();
        assert_eq!(e.eval(1.0), Err(EvalError::DivisionByZero));
        let s = parse_scalar_expr("sqrt(t)").unwrap();
        assert_eq!(s.eval_real(-1.0), Err(EvalError::SqrtOfNegative(-1.0)));
        let l = parse_scalar_expr("ln(t)").unwrap();
        assert!(l.eval_real(0.0).is_err());
        let m = parse_scalar_expr("max(i, 1)").unwrap();
        assert_eq!(m.eval(0.0), Err(EvalError::NonRealComparison));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_scalar_expr("sin(t").unwrap_err() {
            ParseError::Syntax { pos, .. } => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        match parse_scalar_expr("1 + * 2").unwrap_err() {
            ParseError::Syntax { pos, .. } => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_scalar_expr("  "), Err(ParseError::Empty));
        assert!(parse_scalar_expr("1 2").is_err());
    }

    #[test]
    fn params_substitute() {
        let mut p = Params::new();
        p.insert("nu".into(), 1.6);
        let e = parse_scalar_expr_with("nu*sin(t)", &p).unwrap();
        assert!((e.eval(PI / 2.0).unwrap().re - 1.6).abs() < 1e-15);
    }

    #[test]
    fn max_kink_is_reported() {
        let e = parse_scalar_expr("max(sin(t), 0)").unwrap();
        assert!(e.derivative(0.0).unwrap_err().is_kink());
        assert!((e.derivative(1.0).unwrap().re - 1f64.cos()).abs() < 1e-15);
        assert_eq!(e.derivative(4.0).unwrap().re, 0.0);
    }

    #[test]
    fn dual_derivatives_match_closed_forms() {
        let cases: [(&str, fn(f64) -> f64); 5] = [
            ("t^3", |t| 3.0 * t * t),
            ("exp(2*t)*cos(t)", |t| (2.0 * t).exp() * (2.0 * t.cos() - t.sin())),
            ("sqrt(2 + sin(t))", |t| t.cos() / (2.0 * (2.0 + t.sin()).sqrt())),
            ("ln(t)/t", |t| (1.0 - t.ln()) / (t * t)),
            ("t^t", |t| t.powf(t) * (t.ln() + 1.0)),
        ];
        for (src, d) in cases {
            let e = parse_scalar_expr(src).unwrap();
            for &t in &[0.5, 1.3, 2.7] {
                let got = e.derivative(t).unwrap().re;
                assert!((got - d(t)).abs() < 1e-12 * (1.0 + d(t).abs()), "{src} at {t}");
            }
        }
    }

    #[test]
    fn printing_round_trips_examples() {
        for src in [
            "-2^2",
            "(-2)^2",
            "-(2)",
            "--t",
            "2^3^2",
            "(2^3)^2",
            "a - (b - c)",
            "1/t^2*cos(3*t)",
            "max(sin(t), 0)*(1 + i)",
            "1e-5*t - -0.5",
        ] {
            let mut p = Params::new();
            for k in ["a", "b", "c"] {
                p.insert(k.into(), 1.25);
            }
            let e = parse_scalar_expr_with(src, &p).unwrap();
            let again = parse_scalar_expr(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} printed as {e}");
        }
    }
}
