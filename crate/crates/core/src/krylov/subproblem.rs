//! The two small least-squares problems solved in every iteration: the
//! unregularized LSQR projection and the projected Tikhonov problem
//! `min ‖B y − ‖r₀‖e₁‖² + λ‖L V_k y‖²`.

use super::bidiag::BidiagonalMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::vector::{axpy, norm};

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub y: Vec<f64>,
    /// `‖B y − ‖r₀‖e₁‖`, which equals the full residual `‖b − A(x₀ + V y)‖`
    /// while `U` stays orthonormal.
    pub residual: f64,
}

/// How the penalty `‖L V_k y‖` is evaluated in the projected problem.
pub enum Penalty<'a> {
    /// `L = I`: the penalty is `‖y‖` and `V_k` is never touched.
    Identity,
    /// A general regularizer, projected onto the given basis on every call.
    Operator {
        op: &'a dyn LinearOperator,
        basis: &'a [Vec<f64>],
    },
    /// A regularizer whose projection is maintained incrementally.
    Factored(&'a PenaltyFactor),
}

/// Thin QR factorization `L V_k = Q R`, grown one column per iteration so
/// that `‖L V_k y‖ = ‖R y‖`.
#[derive(Debug, Clone, Default)]
pub struct PenaltyFactor {
    q: Vec<Vec<f64>>,
    // Column j of R, length = number of Q columns when it was added (+1).
    r_cols: Vec<Vec<f64>>,
}

impl PenaltyFactor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the column `L v_k`.
    pub fn push(&mut self, mut lv: Vec<f64>) {
        let original = norm(&lv);
        let mut col: Vec<f64> = vec![0.0; self.q.len()];
        for _ in 0..2 {
            let coeffs: Vec<f64> = self.q.iter().map(|q| crate::vector::dot(q, &lv)).collect();
            for (j, (q, c)) in self.q.iter().zip(coeffs).enumerate() {
                axpy(-c, q, &mut lv);
                col[j] += c;
            }
        }
        let rest = norm(&lv);
        if rest > 1e-14 * original && rest > 0.0 {
            crate::vector::scale(1.0 / rest, &mut lv);
            self.q.push(lv);
            col.push(rest);
        }
        self.r_cols.push(col);
    }

    pub fn columns(&self) -> usize {
        self.r_cols.len()
    }

    /// The `rank × k` triangular factor as a dense matrix.
    pub fn r_matrix(&self) -> DenseMatrix {
        let rank = self.q.len();
        let mut r = DenseMatrix::zeros(rank, self.r_cols.len());
        for (j, col) in self.r_cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                r[(i, j)] = *v;
            }
        }
        r
    }

    fn from_operator(op: &dyn LinearOperator, basis: &[Vec<f64>]) -> Result<Self> {
        let mut f = PenaltyFactor::new();
        for v in basis {
            f.push(op.apply(v)?);
        }
        Ok(f)
    }
}

fn rhs_residual(b: &BidiagonalMatrix, y: &[f64], r0_norm: f64) -> f64 {
    let mut r = b.mul(y);
    r[0] -= r0_norm;
    norm(&r)
}

/// Givens QR of `[B; √λ I]` exploiting the bidiagonal structure, O(k).
fn damped_bidiagonal_solve(b: &BidiagonalMatrix, damp: f64, r0_norm: f64) -> Vec<f64> {
    let k = b.k();
    let mut rho = vec![0.0; k];
    let mut theta = vec![0.0; k];
    let mut f = vec![0.0; k];
    let mut rho_bar = b.alphas.first().copied().unwrap_or(0.0);
    let mut phi_bar = r0_norm;
    for j in 0..k {
        // Fold the damping row √λ·e_j into the active row.
        let (rho_t, phi_t) = if damp > 0.0 {
            let r = rho_bar.hypot(damp);
            (r, (rho_bar / r) * phi_bar)
        } else {
            (rho_bar, phi_bar)
        };
        // Eliminate β_{j+2} below the diagonal.
        let beta = b.betas[j];
        let r = rho_t.hypot(beta);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (rho_t / r, beta / r) };
        rho[j] = r;
        f[j] = c * phi_t;
        phi_bar = -s * phi_t;
        if j + 1 < k {
            let next_alpha = b.alphas[j + 1];
            theta[j] = s * next_alpha;
            rho_bar = c * next_alpha;
        }
    }
    let rmax = rho.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut y = vec![0.0; k];
    for j in (0..k).rev() {
        if rho[j].abs() <= 1e-14 * rmax || rho[j] == 0.0 {
            // Rank-deficient direction: leave its coefficient at zero.
            y[j] = 0.0;
            continue;
        }
        let mut s = f[j];
        if j + 1 < k {
            s -= theta[j] * y[j + 1];
        }
        y[j] = s / rho[j];
    }
    y
}

/// `min_y ‖‖r₀‖e₁ − B y‖`; the minimum is `φ_k(0)`.
pub fn solve_lsqr_subproblem(b: &BidiagonalMatrix, r0_norm: f64) -> Result<SubproblemSolution> {
    if b.k() == 0 {
        return Err(Error::arg("projected problem has no columns"));
    }
    let y = damped_bidiagonal_solve(b, 0.0, r0_norm);
    let residual = rhs_residual(b, &y, r0_norm);
    Ok(SubproblemSolution { y, residual })
}

/// Projected Tikhonov problem at a fixed `λ ≥ 0`; `residual` is `φ_k(λ)`.
pub fn solve_tikhonov_subproblem(
    b: &BidiagonalMatrix,
    penalty: &Penalty<'_>,
    lambda: f64,
    r0_norm: f64,
) -> Result<SubproblemSolution> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::arg(format!("regularization parameter must be finite and ≥ 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return solve_lsqr_subproblem(b, r0_norm);
    }
    if b.k() == 0 {
        return Err(Error::arg("projected problem has no columns"));
    }
    let y = match penalty {
        Penalty::Identity => damped_bidiagonal_solve(b, lambda.sqrt(), r0_norm),
        Penalty::Operator { op, basis } => {
            if basis.len() != b.k() {
                return Err(Error::shape(format!(
                    "{} basis vectors for a projection with {} columns",
                    basis.len(),
                    b.k()
                )));
            }
            let factor = PenaltyFactor::from_operator(*op, basis)?;
            stacked_solve(b, &factor, lambda, r0_norm)?
        }
        Penalty::Factored(factor) => {
            if factor.columns() != b.k() {
                return Err(Error::shape(format!(
                    "penalty factor has {} columns, projection has {}",
                    factor.columns(),
                    b.k()
                )));
            }
            stacked_solve(b, factor, lambda, r0_norm)?
        }
    };
    let residual = rhs_residual(b, &y, r0_norm);
    Ok(SubproblemSolution { y, residual })
}

fn stacked_solve(
    b: &BidiagonalMatrix,
    factor: &PenaltyFactor,
    lambda: f64,
    r0_norm: f64,
) -> Result<Vec<f64>> {
    let k = b.k();
    let r = factor.r_matrix();
    let rank = r.nrows();
    let sl = lambda.sqrt();
    let mut stacked = DenseMatrix::zeros(k + 1 + rank, k);
    for j in 0..k {
        stacked[(j, j)] = b.alphas[j];
        stacked[(j + 1, j)] = b.betas[j];
        for i in 0..rank {
            stacked[(k + 1 + i, j)] = sl * r[(i, j)];
        }
    }
    let mut rhs = vec![0.0; k + 1 + rank];
    rhs[0] = r0_norm;
    stacked.least_squares(&rhs)
}
