use std::f64::consts::PI;

use num_complex::Complex64;

use super::*;
use crate::hamsys::uniform_grid;
use crate::linalg::{max_abs, trace};
use crate::matexpr::{parse_matrix_entries, parse_scalar_expr, Params};
use crate::presets;
use crate::scalarosc::{sl_oscillation_check, Coefficient, ScalarMode, VerdictStatus, MIN_INTEGRAL};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn coarse() -> Tolerances {
    Tolerances {
        grid_n: 201,
        ..Tolerances::default()
    }
}

fn mf(n: usize, src: &[&[&str]], t0: f64) -> MatrixFunction {
    let rows: Vec<Vec<String>> = src.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
    parse_matrix_entries(n, &rows, &Params::new(), t0).unwrap()
}

#[test]
fn zero_gauge_gives_minus_c() {
    let spec = presets::ex22(0.3, -0.2).unwrap();
    let s = SChoice::zero(2, 1.0);
    for t in [1.0, 2.5, 7.0] {
        let d = build_ds(&spec, &s, t).unwrap();
        let c = spec.c.eval(t).unwrap();
        assert!(max_abs(&(d + c)) < 1e-15);
    }
}

#[test]
fn ex22_reduction_values() {
    let (alpha, beta) = (0.1, 0.1);
    let spec = presets::ex22(alpha, beta).unwrap();
    let s = SChoice::zero(2, 1.0);
    for t in uniform_grid(1.0, 60.0, 301) {
        let sigma = sigma_s(&spec, &s, t, &tol()).unwrap();
        assert!((sigma - t.cos()).abs() < 1e-10, "t = {t}");
        let tr = trace(&build_ds(&spec, &s, t).unwrap());
        let want = 1.0 / t - alpha * t.cos() - beta * t.sin();
        assert!((tr.re - want).abs() < 1e-12 && tr.im.abs() < 1e-15);
        let lam = crate::linalg::least_eigenvalue(&spec.b.eval(t).unwrap(), 1e-10).unwrap();
        assert!((lam - (1.0 - t.sin().abs()) / t).abs() < 1e-10);
    }
}

#[test]
fn shifted_skew_gauge_has_w_two() {
    let a = mf(2, &[&["2", "-i"], &["-i", "2"]], 0.0);
    let spec = SystemSpec::new("w2", a, MatrixFunction::identity(2, 0.0), MatrixFunction::zeros(2, 0.0)).unwrap();
    let s = SChoice::zero(2, 0.0);
    assert!((sigma_s(&spec, &s, 0.4, &tol()).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn non_member_signals_omega_failure() {
    let a = mf(2, &[&["1", "0"], &["0", "2"]], 0.0);
    let spec = SystemSpec::new("spread", a, MatrixFunction::identity(2, 0.0), MatrixFunction::zeros(2, 0.0)).unwrap();
    match sigma_s(&spec, &SChoice::zero(2, 0.0), 1.0, &tol()) {
        Err(Error::NotInOmega { report, .. }) => assert!((report.re_spread - 1.0).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
    let v = theorem21_check(&spec, &SChoice::zero(2, 0.0), 0.0, 10.0, ScalarMode::Criterion, &coarse()).unwrap();
    assert_eq!(v.status, VerdictStatus::Inconclusive);
    assert!(!v.condition(OMEGA_MEMBERSHIP).unwrap().passed);
}

#[test]
fn ex24_preset_gauge_solves_lyapunov_and_trace_on_lower_half() {
    let spec = presets::ex24("0").unwrap();
    let s = SChoice::user(presets::ex24_gauge().unwrap());
    let lya = SChoice::lyapunov(&spec, parse_scalar_expr("0").unwrap(), 1e-10);
    for t in uniform_grid(0.1, 12.0, 157) {
        let (a, b, _) = spec.coefficients(t).unwrap();
        let sm = s.eval(t).unwrap();
        let res = max_abs(&(&b * &sm + &sm * &b + &a + a.adjoint()));
        assert!(res < 1e-14, "t = {t}: {res}");
        assert!(max_abs(&(lya.eval(t).unwrap() - &sm)) < 1e-12);
    }
    // Where max(sin t, 0) vanishes the trace equals −2 sin² t.
    for t in uniform_grid(PI + 0.05, 2.0 * PI - 0.05, 50) {
        let tr = trace(&build_ds(&spec, &s, t).unwrap()).re;
        assert!((tr + 2.0 * t.sin().powi(2)).abs() < 1e-8, "t = {t}: {tr}");
    }
}

#[test]
fn ex24_trace_on_upper_half_includes_m_terms() {
    // Independent expansion with M = sin t on (0, π):
    // tr D_S = tr(S B S) + 2 Re tr(A* S) − tr C, S' traceless.
    let spec = presets::ex24("0").unwrap();
    let s = SChoice::user(presets::ex24_gauge().unwrap());
    for t in uniform_grid(0.2, PI - 0.2, 40) {
        let sm = s.eval(t).unwrap();
        let (a, b, c) = spec.coefficients(t).unwrap();
        let direct = trace(&(&sm * &b * &sm)).re + 2.0 * trace(&(a.adjoint() * &sm)).re - trace(&c).re;
        let got = trace(&build_ds(&spec, &s, t).unwrap()).re;
        assert!((got - direct).abs() < 1e-12);
        let m = t.sin();
        assert!((got - (-2.0 * m * m + m * (1.0 + m * m))).abs() < 1e-12);
    }
}

#[test]
fn remark26_reduction_and_sharpness() {
    let spec = presets::remark26(3).unwrap();
    let s = SChoice::zero(3, 0.0);
    let pass = theorem21_check(&spec, &s, 0.0, 3.0 * PI + 0.1, ScalarMode::Criterion, &coarse()).unwrap();
    assert_eq!(pass.status, VerdictStatus::OscillatoryOnInterval);
    let scalar = &pass.data["scalar"];
    let integral = scalar["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == MIN_INTEGRAL)
        .unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!((integral - (3.0 * PI + 0.1) / 3.0).abs() < 1e-9);
    let fail = theorem21_check(&spec, &s, 0.0, 3.0, ScalarMode::Criterion, &coarse()).unwrap();
    assert_eq!(fail.status, VerdictStatus::Inconclusive);
    let spec_arc = std::sync::Arc::new(spec.clone());
    let sys = grid::gauge_reduction(&spec_arc, &s, Coefficient::constant(0.0), &tol());
    for t in [0.0, 1.0, 5.0] {
        assert_eq!(sys.a12.eval(t).unwrap(), 1.0 / 3.0);
        assert_eq!(sys.a21.eval(t).unwrap(), -3.0);
    }
}

#[test]
fn ex21_oracle_mode_on_interval() {
    let spec = presets::ex21(&presets::Ex21Params::default()).unwrap();
    let v = theorem21_check(&spec, &SChoice::zero(3, 1.0), 1.0, 60.0, ScalarMode::Oracle, &coarse()).unwrap();
    assert_eq!(v.status, VerdictStatus::OscillatoryOnInterval, "{v:#?}");
}

#[test]
fn lyapunov_gauge_with_identity_b() {
    let spec = presets::remark26(2).unwrap();
    let mu = parse_scalar_expr("1").unwrap();
    let s = SChoice::lyapunov(&spec, mu.clone(), 1e-10);
    let d = build_ds(&spec, &s, 0.7).unwrap();
    assert!(max_abs(&(s.eval(0.7).unwrap() - CMat::identity(2, 2))) < 1e-15);
    assert!((trace(&d).re - 4.0).abs() < 1e-12);
    let v = theorem22_check(&spec, &mu, 0.0, 4.0, ScalarMode::Criterion, &coarse()).unwrap();
    assert!(v.condition(LYAPUNOV_SOLVABLE).unwrap().passed);
    assert!(v.condition(SMOOTH_GAUGE).unwrap().passed);
}

#[test]
fn lyapunov_failure_names_time() {
    // B = diag(1, −1) makes β1 + β2 = 0 with a nonzero right-hand side.
    let a = mf(2, &[&["0", "1"], &["1", "0"]], 0.0);
    let b = mf(2, &[&["1", "0"], &["0", "-1"]], 0.0);
    let spec = SystemSpec::new("sing", a, b, MatrixFunction::zeros(2, 0.0)).unwrap();
    let v = theorem22_check(&spec, &parse_scalar_expr("0").unwrap(), 0.0, 1.0, ScalarMode::Criterion, &coarse()).unwrap();
    assert_eq!(v.status, VerdictStatus::Inconclusive);
    let c = v.condition(LYAPUNOV_SOLVABLE).unwrap();
    assert!(!c.passed && c.detail.as_ref().unwrap().contains("t = 0"));
}

#[test]
fn identity_b_sqrt_pipeline_reduces_to_minus_trace_c() {
    let spec = presets::remark26(2).unwrap();
    let ev = DfEvaluator::new(&spec, &tol());
    for t in [0.0, 0.5, 3.0] {
        let d = ev.d_f(t).unwrap();
        assert!(max_abs(&(d - CMat::identity(2, 2))) < 1e-15);
    }
    for (b, want) in [(PI, VerdictStatus::OscillatoryOnInterval), (3.0, VerdictStatus::Inconclusive)] {
        let v = theorem25_check(&spec, 0.0, b, ScalarMode::Criterion, &coarse()).unwrap();
        let direct = sl_oscillation_check(&Coefficient::constant(1.0), 0.0, b, ScalarMode::Criterion, &coarse()).unwrap();
        assert_eq!(v.status, want);
        assert_eq!(direct.status, want);
        assert_eq!(v.data["scalar"]["conditions"], serde_json::to_value(&direct.conditions).unwrap());
    }
}

#[test]
fn ex25_trace_matches_definition_not_printed_form() {
    let spec = presets::ex25().unwrap();
    let solver = DfEvaluator::new(&spec, &tol());
    let f3_eval = DfEvaluator::new(&spec, &tol()).with_f(presets::ex25_f3().unwrap());
    let mut worst_printed: f64 = 0.0;
    for t in uniform_grid(0.5, 20.0, 60) {
        let a = solver.trace(t).unwrap();
        let b = f3_eval.trace(t).unwrap();
        assert!((a - b).norm() < 1e-8, "t = {t}: {a} vs {b}");
        assert!((a.re - presets::ex25_trace(t)).abs() < 1e-7, "t = {t}");
        assert!(a.im.abs() < 1e-10);
        worst_printed = worst_printed.max((a.re - presets::ex25_printed_trace(t)).abs());
    }
    assert!(worst_printed > 0.5);
}

#[test]
fn ex25_f3_solves_the_equation() {
    let spec = presets::ex25().unwrap();
    let ev = DfEvaluator::new(&spec, &tol());
    let f3 = presets::ex25_f3().unwrap();
    for t in [0.3, 2.0, 5.0] {
        let (r, g) = ev.g(t).unwrap();
        let res = max_abs(&(&g * f3.eval(t).unwrap() * &r - &g));
        assert!(res < 1e-9, "{res}");
    }
}

#[test]
fn permutable_preset_matches_closed_form() {
    let spec = presets::permutable().unwrap();
    let ev = DfEvaluator::new(&spec, &tol());
    for t in uniform_grid(0.0, 10.0, 41) {
        let got = ev.trace(t).unwrap().re;
        assert!((got - presets::permutable_trace(t)).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn time_varying_commuting_b_uses_full_expansion() {
    // Diagonal everything: 𝒟_ii = −ℓ_i' − ℓ_i² − b_i c_i with
    // ℓ_i = Re a_i − b_i'/(2 b_i).
    let a = mf(2, &[&["sin(t) + i", "0"], &["0", "cos(2*t)"]], 0.0);
    let b = mf(2, &[&["2 + sin(t)", "0"], &["0", "3 + cos(t)"]], 0.0);
    let c = mf(2, &[&["1", "0"], &["0", "t"]], 0.0);
    let spec = SystemSpec::new("diag", a, b, c).unwrap();
    let ev = DfEvaluator::new(&spec, &tol());
    for t in uniform_grid(0.5, 8.0, 30) {
        let (b1, b1d, b1dd) = (2.0 + t.sin(), t.cos(), -t.sin());
        let (b2, b2d, b2dd) = (3.0 + t.cos(), -t.sin(), -t.cos());
        let ell = |re: f64, red: f64, b: f64, bd: f64, bdd: f64| {
            let k = bd / (2.0 * b);
            let kd = (bdd * b - bd * bd) / (2.0 * b * b);
            (re - k, red - kd)
        };
        let (l1, l1d) = ell(t.sin(), t.cos(), b1, b1d, b1dd);
        let (l2, l2d) = ell((2.0 * t).cos(), -2.0 * (2.0 * t).sin(), b2, b2d, b2dd);
        let want = -l1d - l1 * l1 - b1 - l2d - l2 * l2 - b2 * t;
        let got = ev.trace(t).unwrap();
        assert!((got.re - want).abs() < 1e-7, "t = {t}: {} vs {want}", got.re);
    }
}

#[test]
fn case_iii_gauge() {
    let n = 3;
    let j = CMat::from_element(n, n, Complex64::new(1.0 / n as f64, 0.0));
    let jrow: Vec<Vec<String>> = (0..n).map(|_| (0..n).map(|_| "(sin(t))/3".to_string()).collect()).collect();
    let brow: Vec<Vec<String>> = (0..n).map(|_| (0..n).map(|_| "(1 + t^2)/3".to_string()).collect()).collect();
    let p = Params::new();
    // A* = sin t · J, so A = A* and A1 = 0.
    let a = parse_matrix_entries(n, &jrow, &p, 0.0).unwrap();
    let b = parse_matrix_entries(n, &brow, &p, 0.0).unwrap();
    let spec = SystemSpec::new("case3", a, b, MatrixFunction::zeros(n, 0.0)).unwrap();
    let case = SCase::III {
        j: j.clone(),
        a: parse_scalar_expr("sin(t)").unwrap(),
        b: parse_scalar_expr("1 + t^2").unwrap(),
    };
    let grid = uniform_grid(0.0, 5.0, 51);
    let s = suggest_s(&spec, &case, &grid, &tol()).unwrap();
    assert_eq!(s.provenance, SProvenance::CaseIII);
    for t in [0.3_f64, 1.7, 4.0] {
        let want = &j * Complex64::new(-t.sin() / (1.0 + t * t), 0.0);
        assert!(max_abs(&(s.eval(t).unwrap() - want)) < 1e-15);
    }
}

#[test]
fn case_iv_gauge_cancels() {
    let a1 = mf(2, &[&["t", "i"], &["-i", "1"]], 0.0);
    let b = mf(2, &[&["2", "0"], &["0", "1 + t"]], 0.0);
    // A* = A1 B, so A = (A1 B)* = B A1.
    let a = MatrixFunction::from_fn(2, 0.0, |i, k| {
        let terms = (0..2)
            .map(|m| b.entry(i, m).clone().mul(a1.entry(m, k).clone()))
            .reduce(|x, y| crate::matexpr::ScalarExpr::binary(crate::matexpr::BinOp::Add, x, y))
            .unwrap();
        terms
    });
    let spec = SystemSpec::new("case4", a, b, MatrixFunction::identity(2, 0.0).negated()).unwrap();
    let grid = uniform_grid(0.0, 3.0, 31);
    let s = suggest_s(&spec, &SCase::IV { a1 }, &grid, &tol()).unwrap();
    for &t in &grid {
        let r = gauge_omega(&spec, &s, t, &tol()).unwrap();
        assert!(r.is_member && r.w.abs() < 1e-12);
    }
    let wrong = SCase::IV {
        a1: mf(2, &[&["1", "0"], &["0", "1"]], 0.0),
    };
    assert!(suggest_s(&spec, &wrong, &grid, &tol()).unwrap_err().is_config());
}

#[test]
fn case_i_requires_omega() {
    let spec = presets::ex22(0.1, 0.1).unwrap();
    let grid = uniform_grid(1.0, 10.0, 21);
    let s = suggest_s(&spec, &SCase::I, &grid, &tol()).unwrap();
    assert_eq!(s.provenance, SProvenance::CaseI);
    let a = mf(2, &[&["1", "0"], &["0", "2"]], 0.0);
    let bad = SystemSpec::new("bad", a, MatrixFunction::identity(2, 0.0), MatrixFunction::zeros(2, 0.0)).unwrap();
    assert!(suggest_s(&bad, &SCase::I, &grid, &tol()).is_err());
}

#[test]
fn aggregate_over_ex23_intervals() {
    let spec = presets::ex23(1.6, 1).unwrap();
    let s = SChoice::zero(1, 0.0);
    let verdicts: Vec<_> = (1..=5)
        .map(|m| {
            let a = 2.0 * PI * m as f64;
            theorem21_check(&spec, &s, a, a + PI, ScalarMode::Criterion, &coarse()).unwrap()
        })
        .collect();
    for v in &verdicts {
        assert_eq!(v.status, VerdictStatus::OscillatoryOnInterval, "{v:#?}");
    }
    let agg = remark21_aggregate(&verdicts).unwrap();
    assert_eq!(agg.status, VerdictStatus::Oscillatory);
    assert_eq!(agg.horizon, Some(11.0 * PI));
    assert_eq!(remark21_aggregate(&verdicts[..1]).unwrap(), verdicts[0]);
    assert_eq!(remark21_aggregate(&[]).unwrap().status, VerdictStatus::Inconclusive);
    let swapped = vec![verdicts[1].clone(), verdicts[0].clone()];
    assert!(remark21_aggregate(&swapped).is_err());
}

#[test]
fn corollary_on_remark26_via_divergence() {
    let spec = presets::remark26(3).unwrap();
    let v = corollary_check(&spec, &CorollaryVariant::Gauge(SChoice::zero(3, 0.0)), 1e3, ScalarMode::Criterion, &coarse())
        .unwrap();
    assert_eq!(v.status, VerdictStatus::Oscillatory);
    assert_eq!(v.horizon, Some(1e3));
}

#[test]
fn ex25_psd_but_scalar_fails() {
    let spec = presets::ex25().unwrap();
    let v = theorem25_check(&spec, 0.0, 10.0, ScalarMode::Criterion, &coarse()).unwrap();
    assert!(v.condition(B_PSD).unwrap().passed);
    assert!(v.condition(FACTOR_SOLVABLE).unwrap().passed);
    assert_eq!(v.status, VerdictStatus::Inconclusive);
}
