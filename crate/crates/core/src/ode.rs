//! Dormand–Prince 5(4) with the fourth-order continuous extension.
//!
//! States are flat `f64` slices; complex matrix states are packed by the
//! callers. Every accepted step is handed to an observer as a
//! [`DenseSegment`], which can be evaluated anywhere inside the step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Result;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size collapsed to {h:e} at t = {t}")]
    StepCollapse { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            min_step: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub smallest_step: f64,
    pub largest_step: f64,
}

/// Continuous extension over one accepted step `[t, t + h]`.
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t: f64,
    pub h: f64,
    coeffs: [Vec<f64>; 5],
}

impl DenseSegment {
    pub fn t_end(&self) -> f64 {
        self.t + self.h
    }

    pub fn start(&self) -> &[f64] {
        &self.coeffs[0]
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let s = (t - self.t) / self.h;
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        for i in 0..out.len() {
            out[i] = r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.coeffs[0].len()];
        self.eval_into(t, &mut out);
        out
    }
}

/// Observer verdict after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub t: f64,
    pub y: Vec<f64>,
    pub stats: StepStats,
    /// True when the observer stopped the run before `t_end`.
    pub stopped: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combo(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn rms_norm(v: &[f64], sc: impl Fn(usize) -> f64) -> f64 {
    let n = v.len().max(1) as f64;
    (v.iter()
        .enumerate()
        .map(|(i, x)| (x / sc(i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end > t0`.
pub fn integrate<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(&DenseSegment) -> Control,
{
    crate::check_interval(t0, t_end)?;
    let dim = y0.len();
    let mut stats = StepStats {
        smallest_step: f64::INFINITY,
        ..StepStats::default()
    };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut ytmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    let mut err = vec![0.0; dim];

    f(t, &y, &mut k1)?;
    stats.rhs_evals += 1;
    let scale = |y: &[f64], yn: &[f64], i: usize| opts.atol + opts.rtol * y[i].abs().max(yn[i].abs());

    // Initial step guess.
    let mut h = {
        let d0 = rms_norm(&y, |i| scale(&y, &y, i));
        let d1 = rms_norm(&k1, |i| scale(&y, &y, i));
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(opts.max_step).min(t_end - t0);
        combo(&mut ytmp, &y, h0, &[(1.0, &k1)]);
        f(t + h0, &ytmp, &mut k2)?;
        stats.rhs_evals += 1;
        for i in 0..dim {
            err[i] = (k2[i] - k1[i]) / h0;
        }
        let d2 = rms_norm(&err, |i| scale(&y, &y, i));
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(opts.max_step).min(t_end - t0)
    };

    let mut reject_streak = false;
    let mut stopped = false;
    loop {
        if t >= t_end {
            break;
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeError::TooManySteps {
                t,
                max_steps: opts.max_steps,
            }
            .into());
        }
        let last = t + h >= t_end - 1e-15 * t_end.abs().max(1.0);
        if last {
            h = t_end - t;
        }
        if h < opts.min_step && !last {
            return Err(OdeError::StepCollapse { t, h }.into());
        }

        combo(&mut ytmp, &y, h, &[(A21, &k1)]);
        f(t + C2 * h, &ytmp, &mut k2)?;
        combo(&mut ytmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        f(t + C3 * h, &ytmp, &mut k3)?;
        combo(&mut ytmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(t + C4 * h, &ytmp, &mut k4)?;
        combo(&mut ytmp, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(t + C5 * h, &ytmp, &mut k5)?;
        combo(
            &mut ytmp,
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        let t_new = if last { t_end } else { t + h };
        f(t_new, &ytmp, &mut k6)?;
        combo(
            &mut ynew,
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        f(t_new, &ynew, &mut k7)?;
        stats.rhs_evals += 6;

        for i in 0..dim {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = rms_norm(&err, |i| scale(&y, &ynew, i));
        if !en.is_finite() {
            if h <= opts.min_step {
                return Err(OdeError::NonFinite { t }.into());
            }
            h *= 0.25;
            stats.rejected += 1;
            reject_streak = true;
            continue;
        }

        if en <= 1.0 {
            let mut coeffs: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; dim]);
            for i in 0..dim {
                let dy = ynew[i] - y[i];
                let bspl = h * k1[i] - dy;
                coeffs[0][i] = y[i];
                coeffs[1][i] = dy;
                coeffs[2][i] = bspl;
                coeffs[3][i] = dy - h * k7[i] - bspl;
                coeffs[4][i] =
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let seg = DenseSegment { t, h, coeffs };
            stats.accepted += 1;
            stats.smallest_step = stats.smallest_step.min(h);
            stats.largest_step = stats.largest_step.max(h);
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NonFinite { t }.into());
            }
            if observer(&seg) == Control::Stop {
                stopped = t < t_end;
                break;
            }
            let mut fac = 0.9 * en.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, if reject_streak { 1.0 } else { 10.0 });
            reject_streak = false;
            h = (h * fac).min(opts.max_step);
        } else {
            let fac = (0.9 * en.powf(-0.2)).max(0.2);
            h *= fac;
            stats.rejected += 1;
            reject_streak = true;
        }
    }
    if stats.accepted == 0 {
        stats.smallest_step = 0.0;
    }
    Ok(OdeSolution {
        t,
        y,
        stats,
        stopped,
    })
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
///
/// Stops when the bracket is below `tol` or a few ulps of the endpoints.
pub fn golden_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let floor = 4.0 * f64::EPSILON * a.abs().max(b.abs());
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a).abs() > tol.max(floor) && iters < 200 {
        iters += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    (x, fx)
}

/// Bisection for a sign change of `f` on `[a, b]`; `f(a)` and `f(b)` must differ in sign.
pub fn bisect_root(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[0] = y[1];
        dy[1] = -y[0];
        Ok(())
    }

    #[test]
    fn harmonic_endpoint() {
        let sol = integrate(harmonic, 0.0, &[0.0, 1.0], 10.0, &OdeOptions::default(), |_| {
            Control::Continue
        })
        .unwrap();
        assert!((sol.y[0] - 10f64.sin()).abs() < 1e-8);
        assert!((sol.y[1] - 10f64.cos()).abs() < 1e-8);
        assert_eq!(sol.t, 10.0);
        assert!(!sol.stopped);
    }

    #[test]
    fn dense_output_is_accurate_inside_steps() {
        let mut worst: f64 = 0.0;
        let opts = OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            ..OdeOptions::default()
        };
        integrate(harmonic, 0.0, &[0.0, 1.0], 20.0, &opts, |seg| {
            for k in 0..=10 {
                let t = seg.t + seg.h * k as f64 / 10.0;
                let y = seg.eval(t);
                worst = worst.max((y[0] - t.sin()).abs()).max((y[1] - t.cos()).abs());
            }
            Control::Continue
        })
        .unwrap();
        assert!(worst < 1e-7, "dense error {worst:e}");
    }

    #[test]
    fn dense_matches_endpoints() {
        integrate(harmonic, 0.0, &[0.0, 1.0], 3.0, &OdeOptions::default(), |seg| {
            let y1 = seg.eval(seg.t_end());
            let y0 = seg.eval(seg.t);
            assert_eq!(y0, seg.start());
            assert!((y1[0] - seg.t_end().sin()).abs() < 1e-8);
            Control::Continue
        })
        .unwrap();
    }

    #[test]
    fn observer_stop() {
        let mut n = 0;
        let sol = integrate(harmonic, 0.0, &[0.0, 1.0], 100.0, &OdeOptions::default(), |_| {
            n += 1;
            if n == 3 {
                Control::Stop
            } else {
                Control::Continue
            }
        })
        .unwrap();
        assert!(sol.stopped);
        assert_eq!(sol.stats.accepted, 3);
    }

    #[test]
    fn finite_time_blowup_collapses() {
        // y' = y², y(0) = 1 escapes at t = 1.
        let res = integrate(
            |_t, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            2.0,
            &OdeOptions::default(),
            |_| Control::Continue,
        );
        match res {
            Err(crate::Error::Integration(OdeError::StepCollapse { t, .. }))
            | Err(crate::Error::Integration(OdeError::NonFinite { t })) => {
                assert!((t - 1.0).abs() < 1e-4)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn golden_and_bisect() {
        let (x, _) = golden_min(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        // A bracket narrower than an ulp of the endpoints still terminates.
        let (y, _) = golden_min(|x| (x - 1e4).abs(), 1e4 - 1.0, 1e4 + 1.0, 1e-15);
        assert!((y - 1e4).abs() < 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }
}
