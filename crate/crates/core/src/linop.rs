//! Linear operators with a forward and a transpose action.
//!
//! Everything the solver touches (the projector, the difference operators,
//! their composition `D·R`, the regularizer) goes through [`LinearOperator`],
//! so the system matrix is never materialized. Operators are immutable after
//! construction and may be applied concurrently.

use std::sync::Arc;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

pub trait LinearOperator: Send + Sync {
    fn rows(&self) -> usize;

    fn cols(&self) -> usize;

    /// Overwrites `y` with `A·x`. Lengths must match `cols`/`rows`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    /// Overwrites `x` with `Aᵀ·y`. Lengths must match `rows`/`cols`.
    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols() {
            return Err(Error::shape(format!(
                "operator of shape ({}, {}) applied to vector of length {}",
                self.rows(),
                self.cols(),
                x.len()
            )));
        }
        let mut y = vec![0.0; self.rows()];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows() {
            return Err(Error::shape(format!(
                "transpose of operator of shape ({}, {}) applied to vector of length {}",
                self.rows(),
                self.cols(),
                y.len()
            )));
        }
        let mut x = vec![0.0; self.cols()];
        self.apply_transpose_into(y, &mut x);
        Ok(x)
    }

    fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }
}

macro_rules! forward_linop {
    ($($ty:ty),*) => {$(
        impl<T: LinearOperator + ?Sized> LinearOperator for $ty {
            fn rows(&self) -> usize {
                (**self).rows()
            }
            fn cols(&self) -> usize {
                (**self).cols()
            }
            fn apply_into(&self, x: &[f64], y: &mut [f64]) {
                (**self).apply_into(x, y)
            }
            fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
                (**self).apply_transpose_into(y, x)
            }
        }
    )*};
}

forward_linop!(&T, Box<T>, Arc<T>);

/// The `n×n` identity.
#[derive(Debug, Clone, Copy)]
pub struct Identity {
    n: usize,
}

impl Identity {
    pub fn new(n: usize) -> Self {
        Identity { n }
    }
}

impl LinearOperator for Identity {
    fn rows(&self) -> usize {
        self.n
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }

    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        x.copy_from_slice(y);
    }
}

/// `left ∘ right`, i.e. the product `left·right`.
#[derive(Debug, Clone)]
pub struct Compose<L, R> {
    left: L,
    right: R,
}

impl<L, R> Compose<L, R> {
    pub fn left(&self) -> &L {
        &self.left
    }

    pub fn right(&self) -> &R {
        &self.right
    }
}

/// Composes two operators. Pass references to keep the factors shared.
pub fn compose<L: LinearOperator, R: LinearOperator>(left: L, right: R) -> Result<Compose<L, R>> {
    if left.cols() != right.rows() {
        return Err(Error::shape(format!(
            "cannot compose left operator of shape ({}, {}) with right operator of shape ({}, {})",
            left.rows(),
            left.cols(),
            right.rows(),
            right.cols()
        )));
    }
    Ok(Compose { left, right })
}

impl<L: LinearOperator, R: LinearOperator> LinearOperator for Compose<L, R> {
    fn rows(&self) -> usize {
        self.left.rows()
    }

    fn cols(&self) -> usize {
        self.right.cols()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let mut mid = vec![0.0; self.right.rows()];
        self.right.apply_into(x, &mut mid);
        self.left.apply_into(&mid, y);
    }

    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        let mut mid = vec![0.0; self.left.cols()];
        self.left.apply_transpose_into(y, &mut mid);
        self.right.apply_transpose_into(&mid, x);
    }
}

/// `I_l ⊗ block`: applies a square block to each of `l` contiguous segments.
#[derive(Debug, Clone)]
pub struct KronIdentity {
    block: DenseMatrix,
    copies: usize,
}

pub fn kron_identity_blocks(block: DenseMatrix, l: usize) -> Result<KronIdentity> {
    if l == 0 {
        return Err(Error::arg("Kronecker factor l must be at least 1"));
    }
    if block.nrows() != block.ncols() || block.nrows() == 0 {
        return Err(Error::arg(format!(
            "Kronecker block must be square and non-empty, got {}x{}",
            block.nrows(),
            block.ncols()
        )));
    }
    Ok(KronIdentity { block, copies: l })
}

impl KronIdentity {
    pub fn block(&self) -> &DenseMatrix {
        &self.block
    }

    pub fn copies(&self) -> usize {
        self.copies
    }
}

impl LinearOperator for KronIdentity {
    fn rows(&self) -> usize {
        self.block.nrows() * self.copies
    }

    fn cols(&self) -> usize {
        self.rows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let k = self.block.nrows();
        for (xs, ys) in x.chunks_exact(k).zip(y.chunks_exact_mut(k)) {
            self.block.apply_into(xs, ys);
        }
    }

    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        let k = self.block.nrows();
        for (ys, xs) in y.chunks_exact(k).zip(x.chunks_exact_mut(k)) {
            self.block.apply_transpose_into(ys, xs);
        }
    }
}

/// Materializes an operator by probing it with every basis vector.
pub fn densify<A: LinearOperator + ?Sized>(op: &A) -> DenseMatrix {
    let (m, n) = (op.rows(), op.cols());
    let mut out = DenseMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for j in 0..n {
        e[j] = 1.0;
        op.apply_into(&e, &mut col);
        for (i, v) in col.iter().enumerate() {
            out[(i, j)] = *v;
        }
        e[j] = 0.0;
    }
    out
}

/// Relative adjoint mismatch `|⟨Ax, y⟩ − ⟨x, Aᵀy⟩| / (‖Ax‖‖y‖ + ‖x‖‖Aᵀy‖)`.
pub fn adjoint_mismatch<A: LinearOperator + ?Sized>(op: &A, x: &[f64], y: &[f64]) -> Result<f64> {
    use crate::vector::{dot, norm};
    let ax = op.apply(x)?;
    let aty = op.apply_transpose(y)?;
    let lhs = dot(&ax, y);
    let rhs = dot(x, &aty);
    let scale = norm(&ax) * norm(y) + norm(x) * norm(&aty);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).abs() / scale)
}
