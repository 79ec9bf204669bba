//! Kronecker-product helpers and the low-rank tensor-product solve.

use faer::Mat;

use crate::c64;
use crate::error::{Error, Result};
use crate::linalg::cholesky::LowRankFactor;
use crate::linalg::dense::DenseLu;
use crate::linalg::sparse::SpdFactor;

/// Anything that can solve a linear system for several right-hand sides.
pub trait ColumnSolver {
    fn dim(&self) -> usize;
    fn solve_columns(&self, cols: &[Vec<c64>]) -> Vec<Vec<c64>>;
}

impl ColumnSolver for DenseLu {
    fn dim(&self) -> usize {
        DenseLu::dim(self)
    }

    fn solve_columns(&self, cols: &[Vec<c64>]) -> Vec<Vec<c64>> {
        DenseLu::solve_columns(self, cols)
    }
}

impl ColumnSolver for SpdFactor {
    fn dim(&self) -> usize {
        SpdFactor::dim(self)
    }

    fn solve_columns(&self, cols: &[Vec<c64>]) -> Vec<Vec<c64>> {
        self.solve_many(cols)
    }
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let (m, n) = (a.nrows(), a.ncols());
    let (p, q) = (b.nrows(), b.ncols());
    Mat::from_fn(m * p, n * q, |i, j| a[(i / p, j / q)] * b[(i % p, j % q)])
}

/// Column-stacking vectorization.
pub fn vec_of(x: &Mat<c64>) -> Vec<c64> {
    (0..x.ncols()).flat_map(|j| (0..x.nrows()).map(move |i| x[(i, j)])).collect()
}

/// Solves `S Ã Mᵀ = Y Lᵀ` for `Ã = U Vᵀ` with `U = S⁻¹Y` and `V = M⁻¹L`, without
/// forming the Kronecker system.
pub fn tensor_solve(s: &dyn ColumnSolver, m: &dyn ColumnSolver, y: &[Vec<c64>], l: &[Vec<f64>]) -> Result<LowRankFactor<c64, c64>> {
    if y.len() != l.len() {
        return Err(Error::Dimension(format!("rank mismatch: {} vs {}", y.len(), l.len())));
    }
    if y.iter().any(|c| c.len() != s.dim()) || l.iter().any(|c| c.len() != m.dim()) {
        return Err(Error::Dimension("factor column length does not match the operator".into()));
    }
    let u = s.solve_columns(y);
    let lc: Vec<Vec<c64>> = l.iter().map(|c| c.iter().map(|&v| c64::new(v, 0.0)).collect()).collect();
    let v = m.solve_columns(&lc);
    Ok(LowRankFactor { left: u, right: Some(v), trace_residual: 0.0, pivots: Vec::new(), residual_history: Vec::new() })
}

impl LowRankFactor<c64, c64> {
    /// Dense `L Rᵀ`.
    pub fn to_dense(&self) -> Mat<c64> {
        let right = self.right.as_ref().unwrap_or(&self.left);
        let (n, m) = (self.left.first().map_or(0, Vec::len), right.first().map_or(0, Vec::len));
        Mat::from_fn(n, m, |i, j| self.left.iter().zip(right).map(|(a, b)| a[i] * b[j]).sum())
    }
}
