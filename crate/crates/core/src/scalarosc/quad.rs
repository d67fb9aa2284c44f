//! Adaptive Simpson quadrature of integrands weighted by `exp(±∫E)`.
//!
//! The inner integral `I(t) = ∫_a^t E` is accumulated on the same panel
//! tree as the outer integrals: every panel integrates E with the quadratic
//! interpolants through its five nodes, and panels are visited left to
//! right so each starts from the refined value at its left end. Outer sums
//! are kept as `mantissa · e^{log_scale}` so `e^{±I}` never overflows.

use serde::Serialize;

use crate::{Error, Result};

/// `mantissa · e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledSum {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl Default for ScaledSum {
    fn default() -> Self {
        ScaledSum {
            mantissa: 0.0,
            log_scale: 0.0,
        }
    }
}

impl ScaledSum {
    pub fn from_value(v: f64) -> Self {
        ScaledSum {
            mantissa: v,
            log_scale: 0.0,
        }
    }

    /// Add `v · e^{s}`.
    pub fn add(&mut self, v: f64, s: f64) {
        if v == 0.0 {
            return;
        }
        if self.mantissa == 0.0 {
            self.mantissa = v;
            self.log_scale = s;
        } else if s > self.log_scale {
            self.mantissa = self.mantissa * (self.log_scale - s).exp() + v;
            self.log_scale = s;
        } else {
            self.mantissa += v * (s - self.log_scale).exp();
        }
    }

    pub fn add_sum(&mut self, other: &ScaledSum) {
        self.add(other.mantissa, other.log_scale);
    }

    /// Plain value; infinite when it overflows `f64`.
    pub fn value(&self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa * self.log_scale.exp()
        }
    }

    /// `ln |value|` without overflow.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.abs().ln() + self.log_scale
    }

    pub fn exceeds(&self, threshold: f64) -> bool {
        self.mantissa > 0.0 && self.ln_abs() > threshold.ln()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedIntegral {
    pub sums: Vec<ScaledSum>,
    /// `I(b)`.
    pub inner_end: f64,
    pub panels: usize,
    /// False when some panel hit the depth limit before meeting `tol`.
    pub converged: bool,
}

#[derive(Clone)]
struct Node {
    t: f64,
    e: f64,
    raw: Vec<f64>,
}

const MAX_DEPTH: usize = 40;
/// Relative floor, against the larger of the panel value and the running
/// sum, so exponentially large integrands can still converge.
const REL_TOL: f64 = 1e-12;
/// Accepted panels per call before refinement stops.
const MAX_PANELS: usize = 4_000_000;

struct Engine<'a, S, C> {
    sample: &'a S,
    combine: &'a C,
    nterms: usize,
    tol: f64,
    sums: Vec<ScaledSum>,
    panels: usize,
    converged: bool,
    scratch: Vec<(f64, f64)>,
}

impl<'a, S, C> Engine<'a, S, C>
where
    S: Fn(f64) -> Result<(f64, Vec<f64>)>,
    C: Fn(&[f64], f64, &mut [(f64, f64)]),
{
    fn node(&self, t: f64) -> Result<Node> {
        let (e, raw) = (self.sample)(t)?;
        if !e.is_finite() || raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite integrand at t = {t}")));
        }
        Ok(Node { t, e, raw })
    }

    fn terms(&mut self, n: &Node, inner: f64) -> Vec<(f64, f64)> {
        self.scratch.clear();
        self.scratch.resize(self.nterms, (0.0, 0.0));
        (self.combine)(&n.raw, inner, &mut self.scratch);
        self.scratch.clone()
    }

    /// Integrate over `[l, r]` given `I(l)`; returns `I(r)`.
    fn panel(&mut self, l: &Node, m: &Node, r: &Node, i_l: f64, depth: usize) -> Result<f64> {
        let h = r.t - l.t;
        let d = h / 4.0;
        let q1 = self.node(l.t + d)?;
        let q3 = self.node(l.t + 3.0 * d)?;
        let i_q1 = i_l + d / 12.0 * (5.0 * l.e + 8.0 * q1.e - m.e);
        let i_m = i_l + d / 3.0 * (l.e + 4.0 * q1.e + m.e);
        let i_q3 = i_m + d / 12.0 * (5.0 * m.e + 8.0 * q3.e - r.e);
        let i_r = i_m + d / 3.0 * (m.e + 4.0 * q3.e + r.e);
        let i_r_coarse = i_l + h / 6.0 * (l.e + 4.0 * m.e + r.e);

        let nodes = [l, &q1, m, &q3, r];
        let inners = [i_l, i_q1, i_m, i_q3, i_r];
        let vals: Vec<Vec<(f64, f64)>> = nodes.iter().zip(inners).map(|(n, i)| self.terms(n, i)).collect();

        let e_scale = h * l.e.abs().max(m.e.abs()).max(r.e.abs());
        let mut accept = (i_r - i_r_coarse).abs() <= 15.0 * self.tol.max(REL_TOL * e_scale);
        let mut contributions = Vec::with_capacity(self.nterms);
        for k in 0..self.nterms {
            let s = (0..5).map(|p| vals[p][k].1).fold(f64::NEG_INFINITY, f64::max);
            let g: Vec<f64> = (0..5).map(|p| vals[p][k].0 * (vals[p][k].1 - s).exp()).collect();
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "integrand overflow on [{}, {}]",
                    l.t, r.t
                )));
            }
            let coarse = h / 6.0 * (g[0] + 4.0 * g[2] + g[4]);
            let fine = h / 12.0 * (g[0] + 4.0 * g[1] + 2.0 * g[2] + 4.0 * g[3] + g[4]);
            let diff = (fine - coarse).abs();
            let scale = (fine.abs().ln() + s).max(self.sums[k].ln_abs());
            let allowed = (15.0 * self.tol).ln().max((15.0 * REL_TOL).ln() + scale);
            if diff > 0.0 && diff.ln() + s > allowed {
                accept = false;
            }
            contributions.push((fine + (fine - coarse) / 15.0, s));
        }
        let too_small = h <= 1e-13 * r.t.abs().max(1.0);
        if accept || depth >= MAX_DEPTH || too_small || self.panels >= MAX_PANELS {
            if !accept {
                self.converged = false;
            }
            for (k, (v, s)) in contributions.into_iter().enumerate() {
                self.sums[k].add(v, s);
            }
            self.panels += 1;
            return Ok(i_r + (i_r - i_r_coarse) / 15.0);
        }
        let i_mid = self.panel(l, &q1, m, i_l, depth + 1)?;
        self.panel(m, &q3, r, i_mid, depth + 1)
    }
}

/// Integrate `Σ` terms over `[a, b]` where each term is `c · e^{x}` as
/// produced by `combine(raw(t), I(t))`, with `sample(t) = (E(t), raw(t))`
/// and `I(t) = inner_a + ∫_a^t E`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_weighted<S, C>(
    sample: S,
    combine: C,
    nterms: usize,
    a: f64,
    b: f64,
    inner_a: f64,
    tol: f64,
    initial_panels: usize,
) -> Result<WeightedIntegral>
where
    S: Fn(f64) -> Result<(f64, Vec<f64>)>,
    C: Fn(&[f64], f64, &mut [(f64, f64)]),
{
    crate::check_interval(a, b)?;
    let mut eng = Engine {
        sample: &sample,
        combine: &combine,
        nterms,
        tol,
        sums: vec![ScaledSum::default(); nterms],
        panels: 0,
        converged: true,
        scratch: Vec::new(),
    };
    let np = initial_panels.max(1);
    let w = (b - a) / np as f64;
    let mut left = eng.node(a)?;
    let mut inner = inner_a;
    for k in 0..np {
        let r_t = if k + 1 == np { b } else { a + w * (k + 1) as f64 };
        let right = eng.node(r_t)?;
        let mid = eng.node(0.5 * (left.t + r_t))?;
        inner = eng.panel(&left, &mid, &right, inner, 0)?;
        left = right;
    }
    Ok(WeightedIntegral {
        sums: eng.sums,
        inner_end: inner,
        panels: eng.panels,
        converged: eng.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_integral_of_sine() {
        let r = integrate_weighted(
            |t| Ok((0.0, vec![t.sin()])),
            |raw, _i, out| out[0] = (raw[0], 0.0),
            1,
            0.0,
            std::f64::consts::PI,
            0.0,
            1e-12,
            1,
        )
        .unwrap();
        assert!((r.sums[0].value() - 2.0).abs() < 1e-11);
        assert!(r.converged);
    }

    #[test]
    fn inner_integral_is_consistent() {
        // E = cos t, so I(t) = sin t and ∫_0^T e^{I} cos t dt = e^{sin T} − 1.
        let r = integrate_weighted(
            |t| Ok((t.cos(), vec![t.cos()])),
            |raw, i, out| out[0] = (raw[0], i),
            1,
            0.0,
            7.0,
            0.0,
            1e-12,
            4,
        )
        .unwrap();
        assert!((r.inner_end - 7f64.sin()).abs() < 1e-10);
        assert!((r.sums[0].value() - (7f64.sin().exp() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn huge_exponents_do_not_overflow() {
        // E = 2000: ∫_0^1 e^{2000 t} dt = (e^{2000} − 1)/2000.
        let r = integrate_weighted(
            |_| Ok((2000.0, vec![1.0])),
            |raw, i, out| out[0] = (raw[0], i),
            1,
            0.0,
            1.0,
            0.0,
            1e-9,
            64,
        )
        .unwrap();
        assert!(r.sums[0].value().is_infinite());
        let expected_ln = 2000.0 - 2000f64.ln();
        assert!((r.sums[0].ln_abs() - expected_ln).abs() < 1e-9);
    }

    #[test]
    fn scaled_sum_arithmetic() {
        let mut s = ScaledSum::default();
        s.add(1.0, 0.0);
        s.add(2.0, 1.0);
        assert!((s.value() - (1.0 + 2.0 * 1f64.exp())).abs() < 1e-14);
        assert!(s.exceeds(5.0) && !s.exceeds(7.0));
    }
}
