use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{PreparedInitial, SystemSpec};
use crate::linalg::sigma_min;
use crate::ode::{golden_min, integrate, Control, DenseSegment, OdeOptions, StepStats};
use crate::{check_interval, CMat, Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub ode: OdeOptions,
    /// Dense-output samples recorded inside each accepted step.
    pub samples_per_step: usize,
    /// Steps are capped at `interval length / min_steps`.
    pub min_steps: usize,
    pub drift_rel: f64,
    pub zero_tol_rel: f64,
    pub blowup: f64,
}

impl IntegratorSettings {
    pub fn from_tolerances(tol: &Tolerances) -> Self {
        IntegratorSettings {
            ode: OdeOptions {
                rtol: tol.ode_rtol,
                atol: tol.ode_atol,
                min_step: tol.min_step,
                ..OdeOptions::default()
            },
            samples_per_step: 8,
            min_steps: 200,
            drift_rel: tol.drift_rel,
            zero_tol_rel: tol.zero_tol_rel,
            blowup: tol.blowup,
        }
    }

    pub(crate) fn ode_for(&self, a: f64, b: f64) -> OdeOptions {
        OdeOptions {
            max_step: self.ode.max_step.min((b - a) / self.min_steps.max(1) as f64),
            ..self.ode
        }
    }
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self::from_tolerances(&Tolerances::default())
    }
}

pub(crate) fn pack(mats: &[&CMat]) -> Vec<f64> {
    let mut y = Vec::new();
    for m in mats {
        for z in m.iter() {
            y.push(z.re);
            y.push(z.im);
        }
    }
    y
}

pub(crate) fn unpack(y: &[f64], n: usize, k: usize) -> CMat {
    let off = 2 * n * n * k;
    CMat::from_iterator(n, n, (0..n * n).map(|i| Complex64::new(y[off + 2 * i], y[off + 2 * i + 1])))
}

pub(crate) fn write_packed(out: &mut [f64], m: &CMat, k: usize) {
    let off = 2 * m.len() * k;
    for (i, z) in m.iter().enumerate() {
        out[off + 2 * i] = z.re;
        out[off + 2 * i + 1] = z.im;
    }
}

const RENORMALIZE_ABOVE: f64 = 1e6;

/// `(σ_min(U_Φ), ‖U_Φ* U_Ψ − U_Ψ* U_Φ‖_F)` for the thin QR factorization
/// `[Φ; Ψ] = U R`. Both are unchanged when `(Φ, Ψ)` is multiplied on the
/// right by a nonsingular matrix, so they do not grow with the solution.
pub fn frame_measures(phi: &CMat, psi: &CMat) -> (f64, f64) {
    let n = phi.nrows();
    let mut stacked = CMat::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(phi);
    stacked.view_mut((n, 0), (n, n)).copy_from(psi);
    let q = stacked.qr().q();
    let top = q.rows(0, n).into_owned();
    let bot = q.rows(n, n).into_owned();
    (sigma_min(&top), (top.adjoint() * &bot - bot.adjoint() * &top).norm())
}

fn orthonormalize(y: &[f64], n: usize) -> Vec<f64> {
    let mut stacked = CMat::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&unpack(y, n, 0));
    stacked.view_mut((n, 0), (n, n)).copy_from(&unpack(y, n, 1));
    let q = stacked.qr().q();
    pack(&[&q.rows(0, n).into_owned(), &q.rows(n, n).into_owned()])
}

fn merge_stats(a: StepStats, b: StepStats) -> StepStats {
    StepStats {
        accepted: a.accepted + b.accepted,
        rejected: a.rejected + b.rejected,
        rhs_evals: a.rhs_evals + b.rhs_evals,
        smallest_step: a.smallest_step.min(b.smallest_step),
        largest_step: a.largest_step.max(b.largest_step),
    }
}

/// Time-sampled record of one integration of a prepared solution.
#[derive(Debug, Clone, Serialize)]
pub struct OracleTrace {
    pub interval: [f64; 2],
    pub n: usize,
    pub times: Vec<f64>,
    pub min_singular_values: Vec<f64>,
    pub invariant_drift: Vec<f64>,
    pub det_zero_times: Vec<f64>,
    pub riccati_blowups: Vec<f64>,
    pub step_stats: StepStats,
    /// Restarts from the orthonormalized frame after the state grew large.
    pub renormalizations: usize,
    pub zero_tol: f64,
    pub drift_tol: f64,
    pub max_drift: f64,
    /// False when the drift bound was breached; zero lists are then untrusted.
    pub reliable: bool,
    #[serde(skip)]
    segments: Vec<DenseSegment>,
}

impl OracleTrace {
    fn segment_at(&self, t: f64) -> Option<&DenseSegment> {
        if self.segments.is_empty() || t < self.interval[0] || t > self.interval[1] {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.t_end() < t);
        self.segments.get(idx.min(self.segments.len() - 1))
    }

    /// `(Φ(t), Ψ(t))` from the dense output, up to right multiplication by
    /// a nonsingular matrix once the run has been renormalized.
    pub fn state_at(&self, t: f64) -> Option<(CMat, CMat)> {
        let seg = self.segment_at(t)?;
        let y = seg.eval(t);
        Some((unpack(&y, self.n, 0), unpack(&y, self.n, 1)))
    }

    /// Frame-invariant `σ_min`, see [`frame_measures`].
    pub fn sigma_min_at(&self, t: f64) -> Option<f64> {
        self.state_at(t).map(|(phi, psi)| frame_measures(&phi, &psi).0)
    }

    /// CSV with header `t,sigma_min,drift`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,sigma_min,drift\n");
        for ((t, s), d) in self.times.iter().zip(&self.min_singular_values).zip(&self.invariant_drift) {
            out.push_str(&format!("{t:.16e},{s:.16e},{d:.16e}\n"));
        }
        out
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// `zero_tol_rel · median(σ_min)` over the trace.
pub fn median_zero_tol(trace: &OracleTrace, zero_tol_rel: f64) -> f64 {
    zero_tol_rel * median(&trace.min_singular_values)
}

/// Integrate a prepared solution of the system over `[a, b]`.
pub fn integrate_system(
    spec: &SystemSpec,
    init: &PreparedInitial,
    a: f64,
    b: f64,
    settings: &IntegratorSettings,
) -> Result<OracleTrace> {
    check_interval(a, b)?;
    if a < spec.t0 {
        return Err(Error::InvalidArgument(format!(
            "interval start {a} precedes the system's t0 = {}",
            spec.t0
        )));
    }
    let n = spec.n;
    if init.phi0.nrows() != n || init.psi0.nrows() != n {
        return Err(Error::InvalidArgument("initial data dimension differs from the system".into()));
    }
    let y0 = pack(&[&init.phi0, &init.psi0]);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (am, bm, cm) = spec.coefficients(t)?;
        let phi = unpack(y, n, 0);
        let psi = unpack(y, n, 1);
        let dphi = &am * &phi + &bm * &psi;
        let dpsi = &cm * &phi - am.adjoint() * &psi;
        write_packed(dy, &dphi, 0);
        write_packed(dy, &dpsi, 1);
        Ok(())
    };

    let mut times = vec![a];
    let (s0, d0) = frame_measures(&init.phi0, &init.psi0);
    let mut sig = vec![s0];
    let mut drift = vec![d0];
    let mut segments = Vec::new();
    let m = settings.samples_per_step.max(1);
    let mut buf = vec![0.0; y0.len()];
    let opts = settings.ode_for(a, b);
    let mut stats: Option<StepStats> = None;
    let (mut t, mut y) = (a, y0);
    let mut renormalizations = 0;
    while t < b {
        let sol = integrate(&rhs, t, &y, b, &opts, |seg| {
            for k in 1..=m {
                let tk = if k == m { seg.t_end() } else { seg.t + seg.h * k as f64 / m as f64 };
                seg.eval_into(tk, &mut buf);
                let (s, d) = frame_measures(&unpack(&buf, n, 0), &unpack(&buf, n, 1));
                times.push(tk);
                sig.push(s);
                drift.push(d);
            }
            segments.push(seg.clone());
            if buf.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) > RENORMALIZE_ABOVE {
                Control::Stop
            } else {
                Control::Continue
            }
        })?;
        stats = Some(match stats {
            None => sol.stats,
            Some(s) => merge_stats(s, sol.stats),
        });
        t = sol.t;
        y = sol.y;
        if sol.stopped && t < b {
            y = orthonormalize(&y, n);
            renormalizations += 1;
        }
    }

    let drift_tol = settings.drift_rel;
    let max_drift = drift.iter().copied().fold(0.0, f64::max);
    let mut trace = OracleTrace {
        interval: [a, b],
        n,
        times,
        min_singular_values: sig,
        invariant_drift: drift,
        det_zero_times: Vec::new(),
        riccati_blowups: Vec::new(),
        step_stats: stats.unwrap_or_default(),
        renormalizations,
        zero_tol: 0.0,
        drift_tol,
        max_drift,
        reliable: max_drift <= drift_tol,
        segments,
    };
    trace.zero_tol = median_zero_tol(&trace, settings.zero_tol_rel);
    trace.det_zero_times = detect_det_zeros(&trace, trace.zero_tol);
    Ok(trace)
}

/// Times where `σ_min(Φ)` has a local minimum below `zero_tol`.
///
/// Each sampled local minimum is refined by golden-section search over its
/// two neighbouring sample intervals before the threshold is applied. An
/// empty result means no zero was found, not that none exists.
pub fn detect_det_zeros(trace: &OracleTrace, zero_tol: f64) -> Vec<f64> {
    let s = &trace.min_singular_values;
    let t = &trace.times;
    let len = s.len();
    let mut out: Vec<f64> = Vec::new();
    if len < 2 {
        return out;
    }
    for i in 0..len {
        let left_ok = i == 0 || s[i] <= s[i - 1];
        let right_ok = i + 1 == len || s[i] < s[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let lo = t[i.saturating_sub(1)];
        let hi = t[(i + 1).min(len - 1)];
        let f = |x: f64| trace.sigma_min_at(x).unwrap_or(f64::INFINITY);
        let (tz, fz) = if hi > lo {
            golden_min(f, lo, hi, 1e-11 * hi.abs().max(1.0))
        } else {
            (t[i], s[i])
        };
        let (tz, fz) = if s[i] < fz { (t[i], s[i]) } else { (tz, fz) };
        if fz <= zero_tol {
            let dup = out.last().is_some_and(|&p| (tz - p).abs() <= 1e-7 * tz.abs().max(1.0));
            if !dup {
                out.push(tz);
            }
        }
    }
    out
}
