//! Detector-direction finite differences `D = I_l ⊗ T_k` and their inverses.
//!
//! The stencils carry no `1/h` factor: the forward block has −1 on the
//! diagonal and +1 above it, the central block is ½·tridiag(−1, 0, +1).
//! Scaling by the physical detector spacing is left to the caller.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::linop::LinearOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffScheme {
    Forward,
    Central,
}

impl DiffScheme {
    pub fn name(self) -> &'static str {
        match self {
            DiffScheme::Forward => "forward",
            DiffScheme::Central => "central",
        }
    }

    /// The literal `k×k` stencil block.
    pub fn block(self, k: usize) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(k, k);
        for i in 0..k {
            match self {
                DiffScheme::Forward => {
                    t[(i, i)] = -1.0;
                    if i + 1 < k {
                        t[(i, i + 1)] = 1.0;
                    }
                }
                DiffScheme::Central => {
                    if i > 0 {
                        t[(i, i - 1)] = -0.5;
                    }
                    if i + 1 < k {
                        t[(i, i + 1)] = 0.5;
                    }
                }
            }
        }
        t
    }
}

impl std::str::FromStr for DiffScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(DiffScheme::Forward),
            "central" => Ok(DiffScheme::Central),
            other => Err(Error::arg(format!("unknown difference scheme '{other}'"))),
        }
    }
}

/// Block-diagonal difference operator acting on angle-major sinograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffOperator {
    scheme: DiffScheme,
    k: usize,
    l: usize,
}

pub fn make_diff(scheme: DiffScheme, k: usize, l: usize) -> Result<DiffOperator> {
    if k < 2 {
        return Err(Error::arg(format!(
            "difference operator needs at least 2 detectors, got {k}"
        )));
    }
    if l == 0 {
        return Err(Error::arg("difference operator needs at least one angle"));
    }
    Ok(DiffOperator { scheme, k, l })
}

impl DiffOperator {
    pub fn scheme(&self) -> DiffScheme {
        self.scheme
    }

    pub fn detectors(&self) -> usize {
        self.k
    }

    pub fn num_angles(&self) -> usize {
        self.l
    }

    /// Solves `D y = b`; the forward scheme is always invertible, the central
    /// one only for even `k`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self.scheme {
            DiffScheme::Forward => invert_forward(b, self.k, self.l),
            DiffScheme::Central => invert_central(b, self.k, self.l),
        }
    }
}

impl LinearOperator for DiffOperator {
    fn rows(&self) -> usize {
        self.k * self.l
    }

    fn cols(&self) -> usize {
        self.k * self.l
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let k = self.k;
        for (xs, ys) in x.chunks_exact(k).zip(y.chunks_exact_mut(k)) {
            match self.scheme {
                DiffScheme::Forward => {
                    for i in 0..k - 1 {
                        ys[i] = xs[i + 1] - xs[i];
                    }
                    ys[k - 1] = -xs[k - 1];
                }
                DiffScheme::Central => {
                    ys[0] = 0.5 * xs[1];
                    for i in 1..k - 1 {
                        ys[i] = 0.5 * (xs[i + 1] - xs[i - 1]);
                    }
                    ys[k - 1] = -0.5 * xs[k - 2];
                }
            }
        }
    }

    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        let k = self.k;
        for (ys, xs) in y.chunks_exact(k).zip(x.chunks_exact_mut(k)) {
            match self.scheme {
                DiffScheme::Forward => {
                    xs[0] = -ys[0];
                    for i in 1..k {
                        xs[i] = ys[i - 1] - ys[i];
                    }
                }
                DiffScheme::Central => {
                    xs[0] = -0.5 * ys[1];
                    for i in 1..k - 1 {
                        xs[i] = 0.5 * (ys[i - 1] - ys[i + 1]);
                    }
                    xs[k - 1] = 0.5 * ys[k - 2];
                }
            }
        }
    }
}

fn check_len(b: &[f64], k: usize, l: usize) -> Result<()> {
    if b.len() != k * l {
        return Err(Error::shape(format!(
            "vector of length {} does not match k·l = {}·{}",
            b.len(),
            k,
            l
        )));
    }
    if k == 0 {
        return Err(Error::arg("k must be positive"));
    }
    Ok(())
}

/// Back substitution for the forward scheme: `y_i = −Σ_{j≥i} b_j` per block.
pub fn invert_forward(b: &[f64], k: usize, l: usize) -> Result<Vec<f64>> {
    check_len(b, k, l)?;
    let mut y = vec![0.0; b.len()];
    for (bs, ys) in b.chunks_exact(k).zip(y.chunks_exact_mut(k)) {
        let mut tail = 0.0;
        for i in (0..k).rev() {
            tail += bs[i];
            ys[i] = -tail;
        }
    }
    Ok(y)
}

/// Solves the central-difference system block by block.
///
/// Odd-indexed unknowns follow from the top rows, even-indexed ones from the
/// bottom rows. Fails for odd `k`, where each block has the nullspace
/// `(1, 0, 1, …, 0, 1)ᵀ`.
pub fn invert_central(b: &[f64], k: usize, l: usize) -> Result<Vec<f64>> {
    check_len(b, k, l)?;
    if k % 2 == 1 {
        return Err(Error::Singular(format!(
            "central difference block of odd size {k} is singular: its nullspace is spanned by (1, 0, 1, ..., 0, 1)"
        )));
    }
    let mut y = vec![0.0; b.len()];
    for (bs, ys) in b.chunks_exact(k).zip(y.chunks_exact_mut(k)) {
        // Row i reads ½(y_{i+1} − y_{i−1}) = b_i with y_{−1} = y_k = 0.
        ys[1] = 2.0 * bs[0];
        let mut i = 2;
        while i < k {
            ys[i + 1] = ys[i - 1] + 2.0 * bs[i];
            i += 2;
        }
        ys[k - 2] = -2.0 * bs[k - 1];
        let mut i = k.wrapping_sub(3);
        while i < k {
            // i runs over odd rows k−3, k−5, …, 1; the wrap past 0 ends it.
            ys[i - 1] = ys[i + 1] - 2.0 * bs[i];
            i = i.wrapping_sub(2);
        }
    }
    Ok(y)
}

/// Determinant and nullspace of a single `m×m` stencil block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockProperties {
    pub determinant: f64,
    pub nullspace_basis: Vec<Vec<f64>>,
}

/// Dense determinant and nullspace of one stencil block.
///
/// The nullspace basis is scaled so its first nonzero entry is 1.
pub fn block_structure(scheme: DiffScheme, m: usize) -> Result<BlockProperties> {
    if m == 0 || m > 16 {
        return Err(Error::arg(format!("block size {m} outside 1..=16")));
    }
    let block = scheme.block(m);
    let determinant = block.determinant()?;
    let nullspace_basis = block
        .nullspace(1e-12)
        .into_iter()
        .map(|mut v| {
            if let Some(first) = v.iter().copied().find(|x| *x != 0.0) {
                v.iter_mut().for_each(|x| *x /= first);
            }
            v
        })
        .collect();
    Ok(BlockProperties {
        determinant,
        nullspace_basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_and_central_examples() {
        let df = make_diff(DiffScheme::Forward, 3, 1).unwrap();
        assert_eq!(df.apply(&[1.0, 2.0, 4.0]).unwrap(), vec![1.0, 2.0, -4.0]);
        let dc = make_diff(DiffScheme::Central, 3, 1).unwrap();
        assert_eq!(dc.apply(&[1.0, 2.0, 4.0]).unwrap(), vec![1.0, 1.5, -1.0]);
        for op in [df, dc] {
            assert_eq!(op.apply(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        }
    }

    #[test]
    fn too_few_detectors() {
        assert!(matches!(
            make_diff(DiffScheme::Forward, 1, 4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn forward_inverse_examples() {
        assert_eq!(invert_forward(&[1.0, 1.0, 1.0], 3, 1).unwrap(), vec![-3.0, -2.0, -1.0]);
        assert_eq!(invert_forward(&[0.0, 0.0, 1.0], 3, 1).unwrap(), vec![-1.0, -1.0, -1.0]);
        assert!(matches!(invert_forward(&[1.0; 5], 3, 2), Err(Error::Shape(_))));
    }

    #[test]
    fn central_inverse_examples() {
        assert_eq!(invert_central(&[1.0, 1.0], 2, 1).unwrap(), vec![-2.0, 2.0]);
        assert!(matches!(invert_central(&[1.0; 3], 3, 1), Err(Error::Singular(_))));
    }

    #[test]
    fn central_inverse_matches_printed_pattern() {
        // Columns of the inverse: row 0 has −2 at odd columns, row 1 is 2·e_0, ...
        let k = 6;
        let mut inv = DenseMatrix::zeros(k, k);
        for j in 0..k {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            let col = invert_central(&e, k, 1).unwrap();
            for i in 0..k {
                inv[(i, j)] = col[i];
            }
        }
        let printed = [
            [0.0, -2.0, 0.0, -2.0, 0.0, -2.0],
            [2.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, -2.0, 0.0, -2.0],
            [2.0, 0.0, 2.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, -2.0],
            [2.0, 0.0, 2.0, 0.0, 2.0, 0.0],
        ];
        for i in 0..k {
            assert_eq!(inv.row(i), &printed[i], "row {i}");
        }
    }

    #[test]
    fn constant_vectors_fail_only_at_the_boundary() {
        let c = 3.0;
        let df = make_diff(DiffScheme::Forward, 5, 1).unwrap();
        assert_eq!(df.apply(&[c; 5]).unwrap(), vec![0.0, 0.0, 0.0, 0.0, -c]);
        let dc = make_diff(DiffScheme::Central, 5, 1).unwrap();
        assert_eq!(dc.apply(&[c; 5]).unwrap(), vec![c / 2.0, 0.0, 0.0, 0.0, -c / 2.0]);
    }

    #[test]
    fn block_properties() {
        let f = block_structure(DiffScheme::Forward, 5).unwrap();
        assert_eq!(f.determinant, -1.0);
        assert!(f.nullspace_basis.is_empty());
        let c4 = block_structure(DiffScheme::Central, 4).unwrap();
        assert!((c4.determinant - 1.0 / 16.0).abs() < 1e-15);
        assert!(c4.nullspace_basis.is_empty());
        let c5 = block_structure(DiffScheme::Central, 5).unwrap();
        assert_eq!(c5.determinant, 0.0);
        assert_eq!(c5.nullspace_basis, vec![vec![1.0, 0.0, 1.0, 0.0, 1.0]]);
    }
}
