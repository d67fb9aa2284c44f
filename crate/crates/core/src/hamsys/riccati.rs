use serde::Serialize;

use super::integrate::{pack, unpack, write_packed, IntegratorSettings};
use super::SystemSpec;
use crate::linalg::{hermitian_check, max_abs};
use crate::ode::{bisect_root, integrate, Control, DenseSegment, OdeError, StepStats};
use crate::{check_interval, CMat, Error, Result};

/// Record of a Riccati run `Y' = C − YBY − A*Y − YA`.
#[derive(Debug, Clone, Serialize)]
pub struct RiccatiTrace {
    pub interval: [f64; 2],
    pub n: usize,
    pub times: Vec<f64>,
    /// `‖Y(t)‖_∞`.
    pub norms: Vec<f64>,
    /// `‖Y(t) − Y(t)*‖_∞`.
    pub asymmetry: Vec<f64>,
    /// Escape times; the run stops at the first one.
    pub blowups: Vec<f64>,
    pub step_stats: StepStats,
    pub blowup_threshold: f64,
    #[serde(skip)]
    segments: Vec<DenseSegment>,
}

impl RiccatiTrace {
    pub fn y_at(&self, t: f64) -> Option<CMat> {
        let first = self.segments.first()?;
        let last = self.segments.last()?;
        if t < first.t || t > last.t_end() {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.t_end() < t);
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        Some(unpack(&seg.eval(t), self.n, 0))
    }

    pub fn first_blowup(&self) -> Option<f64> {
        self.blowups.first().copied()
    }
}

/// Integrate the matrix Riccati flow from a hermitian `Y0` at `a`.
///
/// A blow-up is recorded when `‖Y‖_∞` crosses the threshold (located by
/// bisection on the dense output) or when the step size collapses while
/// `‖Y‖` is already large.
pub fn integrate_riccati(
    spec: &SystemSpec,
    y0: &CMat,
    a: f64,
    b: f64,
    settings: &IntegratorSettings,
) -> Result<RiccatiTrace> {
    check_interval(a, b)?;
    if a < spec.t0 {
        return Err(Error::InvalidArgument(format!(
            "interval start {a} precedes the system's t0 = {}",
            spec.t0
        )));
    }
    let n = spec.n;
    if y0.nrows() != n || y0.ncols() != n {
        return Err(Error::InvalidArgument("Y0 dimension differs from the system".into()));
    }
    let herm = hermitian_check(y0, 1e-10);
    if !herm.passed {
        return Err(Error::InvalidArgument(format!(
            "Y0 is not hermitian (asymmetry {:e})",
            herm.max_asymmetry
        )));
    }
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (am, bm, cm) = spec.coefficients(t)?;
        let ym = unpack(y, n, 0);
        let d = cm - &ym * bm * &ym - am.adjoint() * &ym - &ym * am;
        write_packed(dy, &d, 0);
        Ok(())
    };
    let threshold = settings.blowup;
    let mut times = vec![a];
    let mut norms = vec![max_abs(y0)];
    let mut asym = vec![herm.max_asymmetry];
    let mut blowups = Vec::new();
    let mut segments: Vec<DenseSegment> = Vec::new();
    let m = settings.samples_per_step.max(1);

    let run = integrate(rhs, a, &pack(&[y0]), b, &settings.ode_for(a, b), |seg| {
        segments.push(seg.clone());
        for k in 1..=m {
            let t = if k == m { seg.t_end() } else { seg.t + seg.h * k as f64 / m as f64 };
            let ym = unpack(&seg.eval(t), n, 0);
            let norm = max_abs(&ym);
            times.push(t);
            norms.push(norm);
            asym.push(max_abs(&(&ym - ym.adjoint())));
            if norm > threshold {
                let lo = if k == 1 { seg.t } else { seg.t + seg.h * (k - 1) as f64 / m as f64 };
                let tb = bisect_root(
                    |s| max_abs(&unpack(&seg.eval(s), n, 0)) - threshold,
                    lo,
                    t,
                    1e-14 * t.abs().max(1.0),
                );
                blowups.push(tb);
                return Control::Stop;
            }
        }
        Control::Continue
    });
    let step_stats = match run {
        Ok(sol) => sol.stats,
        Err(Error::Integration(OdeError::StepCollapse { t, .. }))
        | Err(Error::Integration(OdeError::NonFinite { t }))
            if norms.last().copied().unwrap_or(0.0) > threshold.sqrt() =>
        {
            blowups.push(t);
            StepStats::default()
        }
        Err(e) => return Err(e),
    };
    Ok(RiccatiTrace {
        interval: [a, b],
        n,
        times,
        norms,
        asymmetry: asym,
        blowups,
        step_stats,
        blowup_threshold: threshold,
        segments,
    })
}
