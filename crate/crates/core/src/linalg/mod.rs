//! Dense complex kernels for small (n ≤ 10) matrices.
//!
//! Norms written `‖·‖_∞` throughout the crate are the largest entry
//! modulus, `max |m_ij|`.

mod eigen;
mod equations;

pub use eigen::{eigh, HermitianEigen};
pub use equations::{solve_eq27, solve_lyapunov, FactorMethod, FactorSolution, LyapunovSolution};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::CMat;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not hermitian: max asymmetry {max_asymmetry:e} > {tol:e}")]
    NotHermitian { max_asymmetry: f64, tol: f64 },
    #[error("matrix is not positive semidefinite: least eigenvalue {least:e} < -{tol:e}")]
    NotPsd { least: f64, tol: f64 },
    #[error(
        "Lyapunov equation singular: eigenvalues β{i} = {beta_i:e} and β{j} = {beta_j:e} sum to {:e}",
        beta_i + beta_j
    )]
    LyapunovSingular {
        i: usize,
        j: usize,
        beta_i: f64,
        beta_j: f64,
    },
    #[error("equation (√B A* - √B') X √B = √B A* - √B' unsolvable: residual {residual:e} > {tol:e}")]
    FactorUnsolvable { residual: f64, tol: f64 },
}

pub fn complex(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMat) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn diag_real(values: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| complex(v)),
    ))
}

/// Hermitian part `(M + M*)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * complex(0.5)
}

/// Smallest singular value (used for det Φ zero detection).
pub fn sigma_min(m: &CMat) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianCheckReport {
    pub max_asymmetry: f64,
    pub passed: bool,
    pub tol: f64,
}

impl HermitianCheckReport {
    /// Worst of two reports (used when aggregating over a grid).
    pub fn merge(self, other: HermitianCheckReport) -> HermitianCheckReport {
        let max_asymmetry = self.max_asymmetry.max(other.max_asymmetry);
        HermitianCheckReport {
            max_asymmetry,
            passed: self.passed && other.passed,
            tol: self.tol,
        }
    }
}

pub fn hermitian_check(m: &CMat, tol: f64) -> HermitianCheckReport {
    let max_asymmetry = if m.is_square() {
        max_abs(&(m - m.adjoint()))
    } else {
        f64::INFINITY
    };
    HermitianCheckReport {
        max_asymmetry,
        passed: max_asymmetry <= tol,
        tol,
    }
}

fn require_hermitian(h: &CMat, tol: f64) -> Result<(), LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    let rep = hermitian_check(h, tol);
    if !rep.passed {
        return Err(LinalgError::NotHermitian {
            max_asymmetry: rep.max_asymmetry,
            tol,
        });
    }
    Ok(())
}

/// `λ(H)`, the least eigenvalue of a hermitian matrix.
pub fn least_eigenvalue(h: &CMat, tol_herm: f64) -> Result<f64, LinalgError> {
    require_hermitian(h, tol_herm)?;
    Ok(eigh(h).values[0])
}

pub fn is_psd(h: &CMat, tol: f64, tol_herm: f64) -> Result<bool, LinalgError> {
    Ok(least_eigenvalue(h, tol_herm)? >= -tol)
}

/// Hermitian PSD square root; eigenvalues in `[-tol, 0)` are clamped to 0.
pub fn sqrt_psd(h: &CMat, tol: f64, tol_herm: f64) -> Result<CMat, LinalgError> {
    require_hermitian(h, tol_herm)?;
    let eig = eigh(h);
    if eig.values[0] < -tol {
        return Err(LinalgError::NotPsd {
            least: eig.values[0],
            tol,
        });
    }
    Ok(hermitian_part(&eig.map(|x| x.max(0.0).sqrt())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub is_member: bool,
    /// Common real part of the eigenvalues; meaningful only when `is_member`.
    #[serde(rename = "W")]
    pub w: f64,
    pub normality_residual: f64,
    pub re_spread: f64,
    pub tol_norm: f64,
    pub tol_spread: f64,
}

/// Relative tolerances for Ω_n membership, scaled by `‖M‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaTolerances {
    pub norm_rel: f64,
    pub spread_rel: f64,
}

impl Default for OmegaTolerances {
    fn default() -> Self {
        OmegaTolerances {
            norm_rel: 1e-8,
            spread_rel: 1e-8,
        }
    }
}

/// Membership in Ω_n: normal, with all eigenvalues sharing one real part.
///
/// For a normal matrix the hermitian part `(M + M*)/2` has the real parts of
/// the eigenvalues of `M` as its spectrum, so only a hermitian
/// diagonalization is needed.
pub fn omega_membership(m: &CMat, tols: OmegaTolerances) -> OmegaReport {
    let norm = max_abs(m);
    let tol_norm = tols.norm_rel * norm * norm;
    let tol_spread = tols.spread_rel * (1.0 + norm);
    let normality_residual = max_abs(&(m.adjoint() * m - m * m.adjoint()));
    let eig = eigh(&hermitian_part(m));
    let lo = eig.values[0];
    let hi = *eig.values.last().expect("non-empty spectrum");
    let re_spread = hi - lo;
    let w = eig.values.iter().sum::<f64>() / eig.values.len() as f64;
    OmegaReport {
        is_member: normality_residual <= tol_norm && re_spread <= tol_spread,
        w,
        normality_residual,
        re_spread,
        tol_norm,
        tol_spread,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trace_of_identity() {
        assert_eq!(trace(&CMat::identity(3, 3)), c(3.0, 0.0));
    }

    #[test]
    fn least_eigenvalue_of_diagonal() {
        assert_eq!(least_eigenvalue(&diag_real(&[1.0, 2.0, 3.0]), 1e-10).unwrap(), 1.0);
    }

    #[test]
    fn least_eigenvalue_rejects_non_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            least_eigenvalue(&m, 1e-10),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn example_b1_at_half_pi_is_singular() {
        // (1/t)[[1, sin t], [sin t, 1]] at t = π/2
        let t = PI / 2.0;
        let b = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(t.sin(), 0.0), c(t.sin(), 0.0), c(1.0, 0.0)])
            * c(1.0 / t, 0.0);
        assert!(least_eigenvalue(&b, 1e-10).unwrap().abs() < 1e-15);
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&CMat::identity(2, 2), 1e-12, 1e-10).unwrap());
        assert!(!is_psd(&diag_real(&[1.0, -1e-3]), 1e-12, 1e-10).unwrap());
        assert!(is_psd(&diag_real(&[1.0, 1.0, 0.0]), 1e-12, 1e-10).unwrap());
    }

    #[test]
    fn sqrt_of_diagonal() {
        let r = sqrt_psd(&diag_real(&[4.0, 9.0]), 1e-12, 1e-10).unwrap();
        assert!((r - diag_real(&[2.0, 3.0])).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        assert!(matches!(
            sqrt_psd(&diag_real(&[1.0, -0.5]), 1e-12, 1e-10),
            Err(LinalgError::NotPsd { .. })
        ));
        // Tiny negative eigenvalues are clamped.
        let r = sqrt_psd(&diag_real(&[1.0, -1e-14]), 1e-12, 1e-10).unwrap();
        assert_eq!(r[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn sqrt_of_example_b3() {
        // [[1,1,0],[1,1,0],[0,0,β]] with β = 2.5
        let beta = 2.5;
        let b = CMat::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
                c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
                c(0.0, 0.0), c(0.0, 0.0), c(beta, 0.0),
            ],
        );
        let r = sqrt_psd(&b, 1e-12, 1e-10).unwrap();
        let h = 2f64.sqrt() / 2.0;
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((r[(i, j)].re - h).abs() < 1e-14);
        }
        assert!((r[(2, 2)].re - beta.sqrt()).abs() < 1e-14);
        assert!(r[(0, 2)].norm() < 1e-15 && r[(2, 1)].norm() < 1e-15);
    }

    #[test]
    fn omega_of_identity_and_shifted_skew() {
        let rep = omega_membership(&CMat::identity(3, 3), OmegaTolerances::default());
        assert!(rep.is_member);
        assert!((rep.w - 1.0).abs() < 1e-15);

        let h = CMat::from_row_slice(2, 2, &[c(0.3, 0.0), c(1.0, 2.0), c(1.0, -2.0), c(-0.7, 0.0)]);
        let m = CMat::identity(2, 2) * c(2.0, 0.0) + h * c(0.0, 1.0);
        let rep = omega_membership(&m, OmegaTolerances::default());
        assert!(rep.is_member);
        assert!((rep.w - 2.0).abs() < 1e-12);
    }

    #[test]
    fn omega_rejects_jordan_block() {
        let m = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let rep = omega_membership(&m, OmegaTolerances::default());
        assert!(!rep.is_member);
        assert_eq!(rep.normality_residual, 1.0);
    }

    #[test]
    fn omega_rejects_normal_with_spread() {
        let rep = omega_membership(&diag_real(&[1.0, 2.0]), OmegaTolerances::default());
        assert!(!rep.is_member);
        assert!((rep.re_spread - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hermitian_check_skew_entry() {
        // (1,2) = (2,1) = i is not hermitian: M - M* has entries 2i.
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]);
        let rep = hermitian_check(&m, 1e-10);
        assert!(!rep.passed);
        assert_eq!(rep.max_asymmetry, 2.0);
    }

    #[test]
    fn sigma_min_of_rank_deficient() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert!(sigma_min(&m) < 1e-14);
        assert!((sigma_min(&CMat::identity(3, 3)) - 1.0).abs() < 1e-15);
    }
}
