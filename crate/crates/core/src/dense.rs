//! Row-major dense matrices.
//!
//! These back the small-instance oracles (densified operators, determinant
//! and nullspace checks) and the small projected least-squares solves in the
//! solver when a non-identity regularizer is used.

use crate::error::{Error, Result};
use crate::linop::LinearOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::shape("ragged rows"));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::shape(format!(
                    "column {j} has length {}, expected {rows}",
                    col.len()
                )));
            }
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::vector::norm(&self.data)
    }

    /// Largest absolute entry of `self − other`.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn determinant(&self) -> Result<f64> {
        if self.rows != self.cols {
            return Err(Error::shape(format!(
                "determinant of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a[p * n + col].abs().total_cmp(&a[q * n + col].abs()))
                .unwrap();
            if a[pivot * n + col] == 0.0 {
                return Ok(0.0);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                if f != 0.0 {
                    for j in col..n {
                        a[r * n + j] -= f * a[col * n + j];
                    }
                }
            }
        }
        Ok(det)
    }

    /// Nullspace basis from the reduced row-echelon form.
    ///
    /// Entries with magnitude at most `tol` times the largest entry are treated
    /// as zero. Each basis vector has a 1 in its free-variable position.
    pub fn nullspace(&self, tol: f64) -> Vec<Vec<f64>> {
        let (m, n) = (self.rows, self.cols);
        let mut a = self.data.clone();
        let thresh = tol * crate::vector::max_abs(&a).max(f64::MIN_POSITIVE);
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..n {
            if row == m {
                break;
            }
            let pivot = (row..m)
                .max_by(|&p, &q| a[p * n + col].abs().total_cmp(&a[q * n + col].abs()))
                .unwrap();
            if a[pivot * n + col].abs() <= thresh {
                continue;
            }
            for j in 0..n {
                a.swap(row * n + j, pivot * n + j);
            }
            let p = a[row * n + col];
            for j in 0..n {
                a[row * n + j] /= p;
            }
            for r in 0..m {
                if r != row {
                    let f = a[r * n + col];
                    if f != 0.0 {
                        for j in 0..n {
                            a[r * n + j] -= f * a[row * n + j];
                        }
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![0.0; n];
                v[f] = 1.0;
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = -a[r * n + f];
                }
                v
            })
            .collect()
    }

    /// Least-squares solve `min ‖A y − rhs‖` by Householder QR.
    ///
    /// Columns whose diagonal in R falls below `1e-14·max|R_jj|` are dropped
    /// (their coefficient is set to zero).
    pub fn least_squares(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let (m, n) = (self.rows, self.cols);
        if rhs.len() != m {
            return Err(Error::shape(format!(
                "rhs of length {} for a {m}x{n} system",
                rhs.len()
            )));
        }
        if m < n {
            return Err(Error::shape(format!(
                "underdetermined {m}x{n} least-squares system"
            )));
        }
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        for k in 0..n {
            let mut alpha = 0.0;
            for i in k..m {
                alpha += a[i * n + k] * a[i * n + k];
            }
            let alpha = alpha.sqrt();
            if alpha == 0.0 {
                continue;
            }
            let akk = a[k * n + k];
            let s = if akk >= 0.0 { -alpha } else { alpha };
            // v = x − s e1, stored in place of column k below the diagonal.
            let mut v: Vec<f64> = (k..m).map(|i| a[i * n + k]).collect();
            v[0] -= s;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            if vnorm2 == 0.0 {
                continue;
            }
            for j in k..n {
                let d: f64 = (k..m).map(|i| v[i - k] * a[i * n + j]).sum();
                let f = 2.0 * d / vnorm2;
                for i in k..m {
                    a[i * n + j] -= f * v[i - k];
                }
            }
            let d: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
            let f = 2.0 * d / vnorm2;
            for i in k..m {
                b[i] -= f * v[i - k];
            }
        }
        let rmax = (0..n).fold(0.0_f64, |acc, j| acc.max(a[j * n + j].abs()));
        let cutoff = 1e-14 * rmax;
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let rii = a[i * n + i];
            if rii.abs() <= cutoff {
                y[i] = 0.0;
                continue;
            }
            let mut s = b[i];
            for j in i + 1..n {
                s -= a[i * n + j] * y[j];
            }
            y[i] = s / rii;
        }
        Ok(y)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl LinearOperator for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = crate::vector::dot(self.row(i), x);
        }
    }

    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        x.fill(0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                crate::vector::axpy(yi, self.row(i), x);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_of_permutation() {
        let p = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(p.determinant().unwrap(), -1.0);
    }

    #[test]
    fn nullspace_of_rank_one() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let ns = a.nullspace(1e-12);
        assert_eq!(ns, vec![vec![-2.0, 1.0]]);
    }

    #[test]
    fn least_squares_two_by_one() {
        // min ‖(3,4)ᵀ y − (5,0)ᵀ‖ → y = 15/25
        let a = DenseMatrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let y = a.least_squares(&[5.0, 0.0]).unwrap();
        assert!((y[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_entry_count() {
        assert!(matches!(
            DenseMatrix::from_row_major(2, 2, vec![1.0; 3]),
            Err(Error::Shape(_))
        ));
    }
}
