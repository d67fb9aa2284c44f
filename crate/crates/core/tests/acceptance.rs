//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::f64::consts::PI;
use std::time::Instant;

use hamosc::criteria::{corollary_check, remark21_aggregate, sigma_s, theorem21_check, CorollaryVariant, DfEvaluator, SChoice};
use hamosc::hamsys::{
    integrate_riccati, integrate_system, make_prepared_initial, oracle_verdict, random_hermitian, uniform_grid,
    InitialKind, IntegratorSettings, OracleOutcome,
};
use hamosc::linalg::{least_eigenvalue, max_abs, omega_membership, solve_lyapunov, sqrt_psd, OmegaTolerances};
use hamosc::presets::{self, PresetOptions, PRESET_IDS};
use hamosc::report::{run_example, Bundle, ExampleOptions, EX24_SIGN_NOTE};
use hamosc::scalarosc::{prufer_integrate, theorem23_check, Coefficient, ScalarMode, ScalarSystem, VerdictStatus, MIN_INTEGRAL};
use hamosc::{CMat, Tolerances};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within_budget(start: Instant, secs: f64, what: &str) -> Check {
    let el = start.elapsed().as_secs_f64();
    ensure(el < secs, format!("{what} took {el:.2} s (budget {secs} s)"))
}

fn harmonic_zeros() -> Check {
    let start = Instant::now();
    let spec = presets::remark26(3).map_err(|e| e.to_string())?;
    let init = make_prepared_initial(3, &InitialKind::Hermitian(CMat::zeros(3, 3)), 0).map_err(|e| e.to_string())?;
    let tr = integrate_system(&spec, &init, PI / 2.0, 10.0, &IntegratorSettings::default()).map_err(|e| e.to_string())?;
    let zeros = &tr.det_zero_times;
    let dev = if zeros.len() == 3 {
        zeros.iter().enumerate().map(|(k, z)| (z - (k + 1) as f64 * PI).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    ensure(dev <= 1e-4, format!("zeros {zeros:?}, max deviation from k pi {dev:.2e}"))?;
    ensure(tr.max_drift <= 1e-8, format!("invariant drift {:.2e}", tr.max_drift))?;
    within_budget(start, 1.0, "oracle run")?;
    Ok(format!("3 zeros within {dev:.1e} of k pi, drift {:.1e}, {:.3} s", tr.max_drift, start.elapsed().as_secs_f64()))
}

fn ex25_closed_form() -> Check {
    let start = Instant::now();
    let tol = Tolerances::default();
    let spec = presets::ex25().map_err(|e| e.to_string())?;
    let ev = DfEvaluator::new(&spec, &tol).with_f(presets::ex25_f3().map_err(|e| e.to_string())?);
    let (mut printed, mut corrected): (f64, f64) = (0.0, 0.0);
    for t in uniform_grid(0.0, 20.0, 200) {
        let v = ev.trace(t).map_err(|e| e.to_string())?.re;
        printed = printed.max((v - presets::ex25_printed_trace(t)).abs());
        corrected = corrected.max((v - presets::ex25_trace(t)).abs());
    }
    within_budget(start, 5.0, "trace comparison")?;
    ensure(
        printed <= 1e-6,
        format!("max |numeric - displayed closed form| = {printed:.3e} at 200 points (form derived from the definition: {corrected:.1e})"),
    )
}

fn ex22_pipeline() -> Check {
    let tol = Tolerances::default();
    let spec = presets::ex22(0.1, 0.1).map_err(|e| e.to_string())?;
    let zero = SChoice::zero(2, 1.0);
    let (mut ds, mut dl): (f64, f64) = (0.0, 0.0);
    for t in uniform_grid(1.0, 60.0, tol.grid_n) {
        ds = ds.max((sigma_s(&spec, &zero, t, &tol).map_err(|e| e.to_string())? - t.cos()).abs());
        let lam = least_eigenvalue(&spec.b.eval(t).map_err(|e| e.to_string())?, tol.tol_herm).map_err(|e| e.to_string())?;
        dl = dl.max((lam - (1.0 - t.sin().abs()) / t).abs());
    }
    let analytic = ds <= 1e-10 && dl <= 1e-10;
    let ev = oracle_verdict(&spec, 1.0, 60.0, 3, 0, &IntegratorSettings::default()).map_err(|e| e.to_string())?;
    let oracle_ok = ev.outcome == OracleOutcome::AllTrialsOscillated;
    let v = corollary_check(&spec, &CorollaryVariant::Gauge(zero), 1e4, ScalarMode::Criterion, &tol).map_err(|e| e.to_string())?;
    let ladder_ok = v.status == VerdictStatus::Oscillatory;
    let msg = format!(
        "sigma err {ds:.1e}, lambda err {dl:.1e}; oracle {:?} {:?}; half-line verdict {:?}",
        ev.outcome,
        ev.zero_counts(),
        v.status
    );
    ensure(analytic && oracle_ok && ladder_ok, msg)
}

fn harmonic_sharpness() -> Check {
    let tol = Tolerances::default();
    let sys = ScalarSystem::second_order(Coefficient::constant(1.0), 0.0);
    let pass = theorem23_check(&sys, 0.0, PI, &tol).map_err(|e| e.to_string())?;
    let integral = pass.condition(MIN_INTEGRAL).and_then(|c| c.value).unwrap_or(f64::NAN);
    let short = theorem23_check(&sys, 0.0, PI - 0.01, &tol).map_err(|e| e.to_string())?;
    let spec = presets::remark26(1).map_err(|e| e.to_string())?;
    let z = SChoice::zero(1, 0.0);
    let m_pass = theorem21_check(&spec, &z, 0.0, PI, ScalarMode::Criterion, &tol).map_err(|e| e.to_string())?;
    let m_short = theorem21_check(&spec, &z, 0.0, PI - 0.01, ScalarMode::Criterion, &tol).map_err(|e| e.to_string())?;
    let ok = pass.status == VerdictStatus::OscillatoryOnInterval
        && (integral - PI).abs() <= 1e-9
        && short.status == VerdictStatus::Inconclusive
        && m_pass.status == VerdictStatus::OscillatoryOnInterval
        && m_short.status == VerdictStatus::Inconclusive;
    ensure(
        ok,
        format!(
            "[0, pi] {:?} with integral - pi = {:.1e}; [0, pi - 0.01] {:?}; matrix n = 1: {:?} / {:?}",
            pass.status,
            integral - PI,
            short.status,
            m_pass.status,
            m_short.status
        ),
    )
}

fn ex23_intervals() -> Check {
    let tol = Tolerances::default();
    let spec = presets::ex23(1.6, 1).map_err(|e| e.to_string())?;
    let z = SChoice::zero(1, 0.0);
    let mut verdicts = Vec::new();
    for m in 1..=5 {
        let a = 2.0 * PI * m as f64;
        verdicts.push(theorem21_check(&spec, &z, a, a + PI, ScalarMode::Criterion, &tol).map_err(|e| e.to_string())?);
    }
    let all = verdicts.iter().all(|v| v.status == VerdictStatus::OscillatoryOnInterval);
    let agg = remark21_aggregate(&verdicts).map_err(|e| e.to_string())?;
    let end = 11.0 * PI;
    let init = make_prepared_initial(1, &InitialKind::Hermitian(CMat::zeros(1, 1)), 0).map_err(|e| e.to_string())?;
    let tr = integrate_system(&spec, &init, 0.0, end, &IntegratorSettings::default()).map_err(|e| e.to_string())?;
    let closed = presets::ex23_zero_times(1.6, 0.0, end);
    let dev = hamosc::report::zero_deviation(&tr.det_zero_times, &closed);
    ensure(
        all && agg.status == VerdictStatus::Oscillatory && dev <= 1e-3,
        format!(
            "5/5 intervals: {all}; aggregate {:?}; {} zeros vs {} closed-form, max deviation {dev:.1e}",
            agg.status,
            tr.det_zero_times.len(),
            closed.len()
        ),
    )
}

fn ex21_zeros() -> Check {
    let tol = Tolerances::default();
    let q = Coefficient::parse("sin(t) + sin(sqrt(2)*t)").map_err(|e| e.to_string())?;
    let opts = IntegratorSettings::from_tolerances(&tol).ode;
    let pr = prufer_integrate(&ScalarSystem::second_order(q, 0.0), 0.0, 200.0, 0.0, &opts).map_err(|e| e.to_string())?;
    let spec = presets::ex21(&presets::Ex21Params::default()).map_err(|e| e.to_string())?;
    let ev = oracle_verdict(&spec, 1.0, 200.0, 3, 0, &IntegratorSettings::default()).map_err(|e| e.to_string())?;
    let counts = ev.zero_counts();
    let fewest = counts.iter().copied().min().unwrap_or(0);
    ensure(
        pr.crossing_count() >= 15 && fewest >= 10 && ev.outcome != OracleOutcome::Unreliable,
        format!("scalar crossings {}; 3x3 det zeros per trial {counts:?} ({:?})", pr.crossing_count(), ev.outcome),
    )
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = random_hermitian(n, rng) + CMat::from_fn(n, n, |i, j| Complex64::new(0.0, if i < j { 0.3 } else { -0.3 }));
    let shift = rng.gen_range(0.05..1.0);
    &g * g.adjoint() + CMat::identity(n, n) * Complex64::new(shift, 0.0)
}

fn solver_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_lyap: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let b = random_spd(n, &mut rng);
        let r = random_hermitian(n, &mut rng);
        let sol = solve_lyapunov(&b, &r, 1e-10).map_err(|e| e.to_string())?;
        worst_lyap = worst_lyap.max(max_abs(&(&b * &sol.x + &sol.x * &b - &r)));
    }
    let mut worst_sqrt: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let rank = rng.gen_range(0..=n);
        let g = CMat::from_fn(n, rank, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = &g * g.adjoint();
        let p = sqrt_psd(&h, 1e-12, 1e-10).map_err(|e| e.to_string())?;
        worst_sqrt = worst_sqrt.max(max_abs(&(&p * &p - &h)) / max_abs(&h).max(1.0));
    }
    let mut worst_w: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.gen_range(1..=6);
        let alpha = rng.gen_range(-5.0..5.0);
        let h = random_hermitian(n, &mut rng);
        let m = CMat::identity(n, n) * Complex64::new(alpha, 0.0) + h * Complex64::new(0.0, 1.0);
        let rep = omega_membership(&m, OmegaTolerances::default());
        if !rep.is_member {
            return Err(format!("alpha I + iH rejected from Omega_n (alpha = {alpha})"));
        }
        worst_w = worst_w.max((rep.w - alpha).abs());
    }
    ensure(
        worst_lyap <= 1e-10 && worst_sqrt <= 1e-10 && worst_w <= 1e-10,
        format!("Lyapunov residual {worst_lyap:.1e}, sqrt residual {worst_sqrt:.1e}, W error {worst_w:.1e}"),
    )
}

fn soundness(bundles: &[(String, Bundle)]) -> Check {
    let start = Instant::now();
    let settings = IntegratorSettings::default();
    let mut checked = 0;
    for (id, bundle) in bundles {
        let spec = presets::build_preset(id, &PresetOptions::default()).map_err(|e| e.to_string())?;
        for nv in &bundle.report.verdicts {
            let v = &nv.verdict;
            if !v.is_oscillatory() {
                continue;
            }
            let [a, b] = match (v.interval, v.horizon) {
                (Some(iv), _) => iv,
                (None, Some(h)) => [spec.t0, h.min(spec.t0 + 200.0)],
                (None, None) => return Err(format!("{id} {}: oscillatory verdict without a span", nv.criterion)),
            };
            let ev = oracle_verdict(&spec, a, b, 3, 0, &settings).map_err(|e| e.to_string())?;
            checked += 1;
            if ev.zero_counts().iter().any(|&c| c == 0) {
                return Err(format!("{id} {} on [{a}, {b}]: oracle zero counts {:?}", nv.criterion, ev.zero_counts()));
            }
        }
    }
    let total = start.elapsed().as_secs_f64();
    ensure(total < 120.0, format!("{checked} oscillatory verdicts all matched by det zeros in every trial ({total:.1} s)"))
}

fn riccati_consistency() -> Check {
    let spec = presets::remark26(3).map_err(|e| e.to_string())?;
    let settings = IntegratorSettings::default();
    let init = make_prepared_initial(3, &InitialKind::Hermitian(CMat::zeros(3, 3)), 0).map_err(|e| e.to_string())?;
    let tr = integrate_system(&spec, &init, PI / 2.0, 10.0, &settings).map_err(|e| e.to_string())?;
    let ric = integrate_riccati(&spec, &init.psi0, PI / 2.0, 10.0, &settings).map_err(|e| e.to_string())?;
    let (Some(&z), Some(b)) = (tr.det_zero_times.first(), ric.first_blowup()) else {
        return Err(format!("zeros {:?}, blow-ups {:?}", tr.det_zero_times, ric.blowups));
    };
    ensure((z - b).abs() <= 1e-3, format!("first det zero {z:.8}, Riccati blow-up {b:.8}, |diff| {:.1e}", (z - b).abs()))
}

fn ex24_note(bundle: &Bundle) -> Check {
    let r = &bundle.report;
    let note = r.notes.iter().any(|n| n == EX24_SIGN_NOTE);
    let ev = r.oracle.as_ref().ok_or("no oracle evidence in the report")?;
    let counts = ev.zero_counts();
    ensure(
        note && ev.interval == [0.0, 100.0] && counts.len() == 3,
        format!("sign note present: {note}; oracle on {:?} zero counts {counts:?}", ev.interval),
    )
}

fn main() {
    let start = Instant::now();
    let tol = Tolerances::default();
    let bundles: Vec<(String, Bundle)> = PRESET_IDS
        .iter()
        .map(|id| {
            let b = run_example(id, &ExampleOptions::default(), &tol).unwrap_or_else(|e| panic!("example {id}: {e}"));
            (id.to_string(), b)
        })
        .collect();
    let ex24 = &bundles.iter().find(|(id, _)| id == "ex2.4").expect("ex2.4 preset").1;
    let results: Vec<(&str, Check)> = vec![
        ("harmonic det zeros at k pi", harmonic_zeros()),
        ("ex2.5 displayed closed form", ex25_closed_form()),
        ("ex2.2 pipeline", ex22_pipeline()),
        ("interval test sharpness", harmonic_sharpness()),
        ("ex2.3 intervals and zeros", ex23_intervals()),
        ("ex2.1 zero counts", ex21_zeros()),
        ("solver properties", solver_properties()),
        ("criterion/oracle soundness", soundness(&bundles)),
        ("Riccati/linear consistency", riccati_consistency()),
        ("ex2.4 sign note and oracle", ex24_note(ex24)),
    ];
    let mut failed = 0;
    for (k, (name, res)) in results.iter().enumerate() {
        match res {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1} s)",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
