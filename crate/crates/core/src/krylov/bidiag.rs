//! Golub-Kahan lower bidiagonalization (Paige-Saunders Bidiag1) with full
//! reorthogonalization.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::vector::{axpy, dot, norm, scale};

/// Coefficients below this fraction of the running operator scale end the
/// recursion.
pub const BREAKDOWN_TOL: f64 = 1e-14;

/// The `(k+1)×k` lower-bidiagonal projection `B_{k+1,k}`, stored as its two
/// coefficient sequences.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BidiagonalMatrix {
    /// `α₁ … α_k` on the diagonal.
    pub alphas: Vec<f64>,
    /// `β₂ … β_{k+1}` on the subdiagonal.
    pub betas: Vec<f64>,
}

impl BidiagonalMatrix {
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if alphas.len() != betas.len() {
            return Err(Error::shape(format!(
                "{} diagonal and {} subdiagonal coefficients",
                alphas.len(),
                betas.len()
            )));
        }
        Ok(BidiagonalMatrix { alphas, betas })
    }

    /// Number of columns `k`.
    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    /// `B·y`, a vector of length `k+1`.
    pub fn mul(&self, y: &[f64]) -> Vec<f64> {
        let k = self.k();
        let mut out = vec![0.0; k + 1];
        for j in 0..k {
            out[j] += self.alphas[j] * y[j];
            out[j + 1] += self.betas[j] * y[j];
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let k = self.k();
        let mut m = DenseMatrix::zeros(k + 1, k);
        for j in 0..k {
            m[(j, j)] = self.alphas[j];
            m[(j + 1, j)] = self.betas[j];
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownKind {
    /// `α_k` vanished: no new right vector, the basis is not extended.
    Alpha,
    /// `β_{k+1}` vanished: `v_k` was appended, `u_{k+1}` does not exist.
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Extended,
    Breakdown(BreakdownKind),
}

/// Growing decomposition `A·V_k = U_{k+1}·B_{k+1,k}` started from `r₀`.
pub struct Bidiagonalization<'a> {
    op: &'a dyn LinearOperator,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    b: BidiagonalMatrix,
    r0_norm: f64,
    op_scale: f64,
    breakdown: Option<BreakdownKind>,
}

impl<'a> Bidiagonalization<'a> {
    /// Sets `u₁ = r₀/‖r₀‖`. The start vector must be nonzero.
    pub fn new(op: &'a dyn LinearOperator, r0: &[f64]) -> Result<Self> {
        if r0.len() != op.rows() {
            return Err(Error::shape(format!(
                "start vector of length {} for an operator with {} rows",
                r0.len(),
                op.rows()
            )));
        }
        let r0_norm = norm(r0);
        if r0_norm == 0.0 || !r0_norm.is_finite() {
            return Err(Error::arg(format!(
                "bidiagonalization needs a nonzero finite start vector, got norm {r0_norm}"
            )));
        }
        let mut u1 = r0.to_vec();
        scale(1.0 / r0_norm, &mut u1);
        Ok(Bidiagonalization {
            op,
            u: vec![u1],
            v: Vec::new(),
            b: BidiagonalMatrix::default(),
            r0_norm,
            op_scale: 0.0,
            breakdown: None,
        })
    }

    pub fn k(&self) -> usize {
        self.v.len()
    }

    pub fn r0_norm(&self) -> f64 {
        self.r0_norm
    }

    pub fn u(&self) -> &[Vec<f64>] {
        &self.u
    }

    pub fn v(&self) -> &[Vec<f64>] {
        &self.v
    }

    pub fn matrix(&self) -> &BidiagonalMatrix {
        &self.b
    }

    pub fn breakdown(&self) -> Option<BreakdownKind> {
        self.breakdown
    }

    /// One Bidiag1 step: appends `v_k`, `α_k`, `β_{k+1}` and (unless it
    /// vanished) `u_{k+1}`. After a breakdown further calls change nothing.
    pub fn step(&mut self) -> StepOutcome {
        if let Some(kind) = self.breakdown {
            return StepOutcome::Breakdown(kind);
        }
        let (m, n) = (self.op.rows(), self.op.cols());
        let uk = self.u.last().expect("u₁ is always present");

        // r_k = Aᵀu_k − β_k v_{k−1}
        let mut r = vec![0.0; n];
        self.op.apply_transpose_into(uk, &mut r);
        if let (Some(vprev), Some(beta)) = (self.v.last(), self.b.betas.last()) {
            axpy(-beta, vprev, &mut r);
        }
        reorthogonalize(&mut r, &self.v);
        let alpha = norm(&r);
        if !alpha.is_finite() || alpha == 0.0 || alpha <= BREAKDOWN_TOL * self.op_scale {
            self.breakdown = Some(BreakdownKind::Alpha);
            return StepOutcome::Breakdown(BreakdownKind::Alpha);
        }
        self.op_scale = self.op_scale.max(alpha);
        scale(1.0 / alpha, &mut r);

        // p_k = A v_k − α_k u_k
        let mut p = vec![0.0; m];
        self.op.apply_into(&r, &mut p);
        axpy(-alpha, uk, &mut p);
        reorthogonalize(&mut p, &self.u);
        let beta = norm(&p);
        self.v.push(r);
        self.b.alphas.push(alpha);
        if !beta.is_finite() || beta <= BREAKDOWN_TOL * self.op_scale.max(beta) {
            self.b.betas.push(0.0);
            self.breakdown = Some(BreakdownKind::Beta);
            return StepOutcome::Breakdown(BreakdownKind::Beta);
        }
        self.op_scale = self.op_scale.max(beta);
        scale(1.0 / beta, &mut p);
        self.b.betas.push(beta);
        self.u.push(p);
        StepOutcome::Extended
    }

    /// `x₀ + V_k·y`.
    pub fn iterate(&self, x0: &[f64], y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.k());
        let mut x = x0.to_vec();
        for (vj, yj) in self.v.iter().zip(y) {
            axpy(*yj, vj, &mut x);
        }
        x
    }
}

/// Classical Gram-Schmidt applied twice against `basis`.
pub(crate) fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|q| dot(q, w)).collect();
        for (q, c) in basis.iter().zip(coeffs) {
            axpy(-c, q, w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::Identity;

    #[test]
    fn identity_breaks_down_after_one_step() {
        let a = Identity::new(3);
        let mut bd = Bidiagonalization::new(&a, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(bd.step(), StepOutcome::Breakdown(BreakdownKind::Beta));
        assert_eq!(bd.matrix().alphas, vec![1.0]);
        assert_eq!(bd.matrix().betas, vec![0.0]);
        assert_eq!(bd.v()[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(bd.step(), StepOutcome::Breakdown(BreakdownKind::Beta));
        assert_eq!(bd.k(), 1);
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut bd = Bidiagonalization::new(&a, &[1.0, 0.0]).unwrap();
        assert_eq!(bd.step(), StepOutcome::Breakdown(BreakdownKind::Beta));
        assert_eq!(bd.matrix().alphas, vec![2.0]);
        assert_eq!(bd.matrix().betas, vec![0.0]);
        assert_eq!(bd.v()[0], vec![1.0, 0.0]);
    }

    #[test]
    fn zero_start_vector_is_rejected() {
        let a = Identity::new(2);
        assert!(Bidiagonalization::new(&a, &[0.0, 0.0]).is_err());
        assert!(Bidiagonalization::new(&a, &[1.0]).is_err());
    }

    #[test]
    fn alpha_breakdown_when_start_is_orthogonal_to_range() {
        let a = DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let mut bd = Bidiagonalization::new(&a, &[0.0, 1.0]).unwrap();
        assert_eq!(bd.step(), StepOutcome::Breakdown(BreakdownKind::Alpha));
        assert_eq!(bd.k(), 0);
    }
}
