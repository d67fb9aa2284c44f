//! Prüfer angle `θ' = A12 cos²θ − A21 sin²θ` with `A12 = a12 e^{−∫E}`,
//! `A21 = a21 e^{∫E}`. Zeros of φ are the times where θ ≡ 0 (mod π).

use std::f64::consts::PI;

use serde::Serialize;

use super::{e_function, ScalarSystem};
use crate::ode::{bisect_root, integrate, Control, OdeOptions, StepStats};
use crate::{check_interval, Result};

#[derive(Debug, Clone, Serialize)]
pub struct PruferTrace {
    pub interval: [f64; 2],
    pub theta0: f64,
    pub times: Vec<f64>,
    /// θ tracked continuously, never wrapped.
    pub theta: Vec<f64>,
    /// Crossing times of θ through multiples of π in `(a, b]`.
    pub crossings: Vec<f64>,
    pub step_stats: StepStats,
}

impl PruferTrace {
    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }
}

const SNAP: f64 = 1e-8;

/// Integrate the angle over `[a, b]` from `θ(a) = theta0`.
pub fn prufer_integrate(sys: &ScalarSystem, a: f64, b: f64, theta0: f64, opts: &OdeOptions) -> Result<PruferTrace> {
    check_interval(a, b)?;
    let e = e_function(sys);
    // State (θ, I) with I' = E.
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let a12 = sys.a12.eval(t)? * (-y[1]).exp();
        let a21 = sys.a21.eval(t)? * y[1].exp();
        let (s, c) = y[0].sin_cos();
        dy[0] = a12 * c * c - a21 * s * s;
        dy[1] = e.eval(t)?;
        Ok(())
    };
    let mut times = vec![a];
    let mut theta = vec![theta0];
    let mut crossings = Vec::new();
    let samples = 8;
    let opts = OdeOptions {
        max_step: opts.max_step.min((b - a) / 50.0),
        ..*opts
    };
    let end_snap = SNAP * b.abs().max(1.0);
    let sol = integrate(rhs, a, &[theta0, 0.0], b, &opts, |seg| {
        for k in 1..=samples {
            let t1 = if k == samples { seg.t_end() } else { seg.t + seg.h * k as f64 / samples as f64 };
            let t_prev = *times.last().expect("starts non-empty");
            let th_prev = *theta.last().expect("starts non-empty");
            let th = seg.eval(t1)[0];
            let (lo, hi) = (th_prev.min(th), th_prev.max(th));
            // Multiples kπ strictly inside (lo, hi], in travel order.
            let mut ks: Vec<i64> = ((lo / PI).floor() as i64 + 1..=(hi / PI).floor() as i64).collect();
            if th < th_prev {
                ks.reverse();
            }
            for kk in ks {
                let target = kk as f64 * PI;
                if (th_prev - target).abs() <= SNAP && t_prev == a {
                    continue;
                }
                let tc = if (th - target).abs() == 0.0 {
                    t1
                } else {
                    bisect_root(|s| seg.eval(s)[0] - target, t_prev, t1, 1e-13 * t1.abs().max(1.0))
                };
                if tc - a > SNAP * a.abs().max(1.0) {
                    crossings.push(tc);
                }
            }
            times.push(t1);
            theta.push(th);
        }
        Control::Continue
    })?;
    // A crossing that lands on b within the snap tolerance counts.
    let th_end = sol.y[0];
    let nearest = (th_end / PI).round() * PI;
    let last_is_b = crossings.last().is_some_and(|&c| (c - b).abs() <= end_snap);
    if (th_end - nearest).abs() <= SNAP && !last_is_b {
        let approaching = if th_end >= theta0 { th_end < nearest } else { th_end > nearest };
        if approaching && (nearest - theta0).abs() > SNAP {
            crossings.push(b);
        }
    }
    Ok(PruferTrace {
        interval: [a, b],
        theta0,
        times,
        theta,
        crossings,
        step_stats: sol.stats,
    })
}
