//! The two matrix equations the criteria reduce to:
//!
//! * `B X + X B = R` with hermitian `B`, `R` (the μ-gauge equation), solved in
//!   the eigenbasis of `B`;
//! * `G X √B = G` with `G = √B A* - √B'`, solved in the least-squares sense
//!   through its vectorized form `(√Bᵀ ⊗ G) vec X = vec G`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{complex, eigh, hermitian_part, max_abs, LinalgError};
use crate::CMat;

#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    /// Hermitian solution `(X + X*)/2`.
    pub x: CMat,
    pub residual: f64,
    /// Eigenvalue pairs with `|β_i + β_j| < tol_sing` whose right-hand side
    /// component vanished; the corresponding component of X is set to 0.
    pub degenerate_pairs: Vec<(usize, usize)>,
}

/// Solve `B X + X B = R`.
///
/// In B's eigenbasis the equation decouples into `(β_i + β_j) X̃_ij = R̃_ij`.
/// A pair with `|β_i + β_j| < tol_sing` is accepted only when `R̃_ij` is
/// negligible; the minimum-norm choice `X̃_ij = 0` is taken there.
pub fn solve_lyapunov(b: &CMat, r: &CMat, tol_sing: f64) -> Result<LyapunovSolution, LinalgError> {
    let n = b.nrows();
    if !b.is_square() || !r.is_square() {
        return Err(LinalgError::NotSquare {
            rows: b.nrows(),
            cols: b.ncols(),
        });
    }
    if r.nrows() != n {
        return Err(LinalgError::DimensionMismatch(n, r.nrows()));
    }
    let eig = eigh(b);
    let v = &eig.vectors;
    let rt = v.adjoint() * r * v;
    let rhs_scale = max_abs(r).max(1.0);
    let mut xt = CMat::zeros(n, n);
    let mut degenerate_pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let denom = eig.values[i] + eig.values[j];
            if denom.abs() < tol_sing {
                if rt[(i, j)].norm() <= 1e-10 * rhs_scale {
                    degenerate_pairs.push((i, j));
                    continue;
                }
                return Err(LinalgError::LyapunovSingular {
                    i,
                    j,
                    beta_i: eig.values[i],
                    beta_j: eig.values[j],
                });
            }
            xt[(i, j)] = rt[(i, j)] / complex(denom);
        }
    }
    let x = hermitian_part(&(v * xt * v.adjoint()));
    let residual = max_abs(&(b * &x + &x * b - r));
    Ok(LyapunovSolution {
        x,
        residual,
        degenerate_pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorMethod {
    /// `√B` invertible and `G ≠ 0`: the unique solution `√B⁻¹`.
    InverseSqrt,
    /// Minimum-norm least squares on the vectorized system.
    LeastSquares,
}

#[derive(Debug, Clone)]
pub struct FactorSolution {
    pub f: CMat,
    /// `‖G F √B - G‖_F`.
    pub residual: f64,
    pub method: FactorMethod,
}

/// Solve `G X √B = G` for X.
///
/// `tol_res` is relative: the solution is accepted when the Frobenius
/// residual is at most `tol_res * max(1, ‖G‖_F)`.
pub fn solve_eq27(g: &CMat, sqrt_b: &CMat, tol_res: f64) -> Result<FactorSolution, LinalgError> {
    let n = g.nrows();
    if !g.is_square() || !sqrt_b.is_square() {
        return Err(LinalgError::NotSquare {
            rows: g.nrows(),
            cols: g.ncols(),
        });
    }
    if sqrt_b.nrows() != n {
        return Err(LinalgError::DimensionMismatch(n, sqrt_b.nrows()));
    }
    let g_norm = g.norm();
    let tol = tol_res * g_norm.max(1.0);
    let eig = eigh(sqrt_b);
    let s_scale = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let invertible = eig.values[0] > 1e-8 * s_scale.max(1.0);

    let (f, method) = if invertible && max_abs(g) > 0.0 {
        (eig.map(|x| 1.0 / x), FactorMethod::InverseSqrt)
    } else {
        // vec(G F √B) = (√Bᵀ ⊗ G) vec(F), column-major vec.
        let k = sqrt_b.transpose().kronecker(g);
        let rhs = DVector::from_column_slice(g.as_slice());
        let svd = k.svd(true, true);
        let sv_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let eps = 1e-12 * sv_max.max(f64::MIN_POSITIVE);
        let sol = svd
            .solve(&rhs, eps)
            .expect("SVD computed with both factors");
        (CMat::from_column_slice(n, n, sol.as_slice()), FactorMethod::LeastSquares)
    };
    let residual = (g * &f * sqrt_b - g).norm();
    if residual > tol {
        return Err(LinalgError::FactorUnsolvable { residual, tol });
    }
    Ok(FactorSolution { f, residual, method })
}
