//! Lower-triangular Cholesky factor of `D_A^T D_A + lambda2 I` that grows and
//! shrinks with the active set.

use alloc::vec::Vec;

use crate::Matrix;

/// Relative pivot threshold below which an appended atom is treated as
/// linearly dependent on the current active set.
const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    /// Row-major rows of increasing length; `rows[i]` holds `L[i, 0..=i]`.
    rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular;

impl CholeskyFactor {
    pub fn new() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends one row/column to the factored matrix. `cross[i]` is the new
    /// off-diagonal entry against the i-th existing index and `diag` the new
    /// diagonal entry.
    pub fn push(&mut self, cross: &[f64], diag: f64) -> Result<(), Singular> {
        debug_assert_eq!(cross.len(), self.dim());
        let w = self.forward(cross);
        let sq = diag - w.iter().map(|v| v * v).sum::<f64>();
        if !(sq > PIVOT_EPS * diag.abs().max(1.0)) {
            return Err(Singular);
        }
        let mut row = w;
        row.push(libm::sqrt(sq));
        self.rows.push(row);
        Ok(())
    }

    /// Removes index `k` from the factored matrix, restoring triangular form
    /// with Givens rotations on the trailing block.
    pub fn remove(&mut self, k: usize) {
        let n = self.dim();
        assert!(k < n, "remove index out of range");
        self.rows.remove(k);
        // Rows k..n-1 now have one entry too many (a superdiagonal element).
        for j in k..n - 1 {
            let a = self.rows[j][j];
            let b = self.rows[j][j + 1];
            let r = libm::hypot(a, b);
            let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
            for i in j..n - 1 {
                let x = self.rows[i][j];
                let y = self.rows[i][j + 1];
                self.rows[i][j] = c * x + s * y;
                self.rows[i][j + 1] = -s * x + c * y;
            }
            self.rows[j].truncate(j + 1);
            if self.rows[j][j] < 0.0 {
                for i in j..n - 1 {
                    self.rows[i][j] = -self.rows[i][j];
                }
            }
        }
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let row = &self.rows[i];
            let mut acc = b[i];
            for (lij, yj) in row[..i].iter().zip(&y) {
                acc -= lij * yj;
            }
            y.push(acc / row[i]);
        }
        y
    }

    /// Solves `L^T x = y` in place.
    pub fn backward(&self, y: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let xi = y[i] / self.rows[i][i];
            y[i] = xi;
            for j in 0..i {
                y[j] -= self.rows[i][j] * xi;
            }
        }
    }

    /// Solves `L L^T x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = self.forward(b);
        self.backward(&mut y);
        y
    }

    /// Dense copy of `L`.
    pub fn to_matrix(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| if j <= i { self.rows[i][j] } else { 0.0 })
    }
}

impl Default for CholeskyFactor {
    fn default() -> Self {
        Self::new()
    }
}
