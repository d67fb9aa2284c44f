use serde::{Deserialize, Serialize};

use crate::linalg::OmegaTolerances;
use crate::Error;

/// Every numerical threshold used by the checks and oracles.
///
/// Reports embed the full set so a run can be reproduced exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `‖M − M*‖_∞` bound for hermitian checks.
    pub tol_herm: f64,
    /// Normality residual bound is `tol_norm_rel · ‖M‖²`.
    pub tol_norm_rel: f64,
    /// Real-part spread bound is `tol_spread_rel · (1 + ‖M‖)`.
    pub tol_spread_rel: f64,
    /// `|β_i + β_j|` below this makes the Lyapunov equation singular.
    pub tol_sing: f64,
    /// Relative residual accepted for `G X √B = G`.
    pub tol_res: f64,
    /// PSD test: least eigenvalue must be at least `-tol_psd`.
    pub tol_psd: f64,
    /// Absolute quadrature tolerance per adaptive Simpson panel.
    pub quad_tol: f64,
    /// Uniform grid size for hypothesis checks.
    pub grid_n: usize,
    /// Jump threshold for grid-solved gauges is `jump_factor · grid spacing`.
    pub jump_factor: f64,
    /// det Φ zero threshold is `zero_tol_rel · median(σ_min)`.
    pub zero_tol_rel: f64,
    /// Integrator relative and absolute tolerances.
    pub ode_rtol: f64,
    pub ode_atol: f64,
    /// Smallest accepted step before the integrator reports collapse.
    pub min_step: f64,
    /// `‖Y‖_∞` threshold recorded as a Riccati blow-up.
    pub blowup: f64,
    /// Bound on the prepared-ness drift measured on the orthonormalized frame.
    pub drift_rel: f64,
    /// Divergence ladder for half-line integrals.
    pub horizon: f64,
    pub growth_threshold: f64,
    pub ladder_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_herm: 1e-10,
            tol_norm_rel: 1e-8,
            tol_spread_rel: 1e-8,
            tol_sing: 1e-10,
            tol_res: 1e-8,
            tol_psd: 1e-12,
            quad_tol: 1e-9,
            grid_n: 2001,
            jump_factor: 1e3,
            zero_tol_rel: 1e-5,
            ode_rtol: 1e-11,
            ode_atol: 1e-13,
            min_step: 1e-12,
            blowup: 1e8,
            drift_rel: 1e-8,
            horizon: 1e4,
            growth_threshold: 10.0,
            ladder_ratio: 2.0,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 18] = [
        "tol_herm",
        "tol_norm_rel",
        "tol_spread_rel",
        "tol_sing",
        "tol_res",
        "tol_psd",
        "quad_tol",
        "grid_n",
        "jump_factor",
        "zero_tol_rel",
        "ode_rtol",
        "ode_atol",
        "min_step",
        "blowup",
        "drift_rel",
        "horizon",
        "growth_threshold",
        "ladder_ratio",
    ];

    pub fn omega(&self) -> OmegaTolerances {
        OmegaTolerances {
            norm_rel: self.tol_norm_rel,
            spread_rel: self.tol_spread_rel,
        }
    }

    /// Apply one `KEY=VAL` override. Values must be positive and finite.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), Error> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Config(format!(
                "tolerance {key} must be positive and finite, got {value}"
            )));
        }
        let slot = match key {
            "tol_herm" => &mut self.tol_herm,
            "tol_norm_rel" => &mut self.tol_norm_rel,
            "tol_spread_rel" => &mut self.tol_spread_rel,
            "tol_sing" => &mut self.tol_sing,
            "tol_res" => &mut self.tol_res,
            "tol_psd" => &mut self.tol_psd,
            "quad_tol" => &mut self.quad_tol,
            "grid_n" => {
                if value.fract() != 0.0 || value < 3.0 {
                    return Err(Error::Config(format!(
                        "grid_n must be an integer ≥ 3, got {value}"
                    )));
                }
                self.grid_n = value as usize;
                return Ok(());
            }
            "jump_factor" => &mut self.jump_factor,
            "zero_tol_rel" => &mut self.zero_tol_rel,
            "ode_rtol" => &mut self.ode_rtol,
            "ode_atol" => &mut self.ode_atol,
            "min_step" => &mut self.min_step,
            "blowup" => &mut self.blowup,
            "drift_rel" => &mut self.drift_rel,
            "horizon" => &mut self.horizon,
            "growth_threshold" => &mut self.growth_threshold,
            "ladder_ratio" => {
                if value <= 1.0 {
                    return Err(Error::Config(format!(
                        "ladder_ratio must exceed 1, got {value}"
                    )));
                }
                &mut self.ladder_ratio
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown tolerance '{other}' (known: {})",
                    Self::KEYS.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    /// Parse and apply `KEY=VAL`.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), Error> {
        let (key, val) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected KEY=VAL, got '{spec}'")))?;
        let value: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("tolerance {key}: '{val}' is not a number")))?;
        self.set(key.trim(), value)
    }
}
