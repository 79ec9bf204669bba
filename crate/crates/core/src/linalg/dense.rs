//! Dense complex LU factorization with partial pivoting.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::{factor, solve};
use faer::perm::PermRef;
use faer::{Mat, MatMut, MatRef, Par};

use crate::c64;
use crate::error::{Error, Result};

/// Complex dense matrix type used throughout the crate.
pub type ComplexMatrix = Mat<c64>;

/// In-place LU factorization `PA = LU` of a square complex matrix.
pub struct DenseLu {
    lu: Mat<c64>,
    perm: Vec<usize>,
    perm_inv: Vec<usize>,
    norm1: f64,
    cond: f64,
}

impl std::fmt::Debug for DenseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DenseLu").field("n", &self.lu.nrows()).field("cond_estimate", &self.cond).finish()
    }
}

fn parallelism() -> Par {
    let n = rayon::current_num_threads();
    if n > 1 {
        Par::rayon(n)
    } else {
        Par::Seq
    }
}

/// Matrix 1-norm (maximum absolute column sum).
pub fn norm1(a: MatRef<'_, c64>) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

impl DenseLu {
    /// Factors `a`, consuming its storage.
    pub fn factor(mut a: Mat<c64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("LU of a {}x{} matrix", n, a.ncols())));
        }
        let norm1 = norm1(a.as_ref());
        let mut perm = vec![0usize; n];
        let mut perm_inv = vec![0usize; n];
        let par = parallelism();
        let mut mem = MemBuffer::new(factor::lu_in_place_scratch::<usize, c64>(n, n, par, Default::default()));
        factor::lu_in_place(a.as_mut(), &mut perm, &mut perm_inv, par, MemStack::new(&mut mem), Default::default());

        let threshold = f64::EPSILON * norm1;
        for i in 0..n {
            let p = a[(i, i)].norm();
            if !(p > threshold) {
                return Err(Error::SingularMatrix { pivot: p, step: i });
            }
        }
        let mut lu = Self { lu: a, perm, perm_inv, norm1, cond: f64::NAN };
        lu.cond = lu.norm1 * lu.inverse_norm1_estimate();
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Estimate of the 1-norm condition number.
    pub fn cond_estimate(&self) -> f64 {
        self.cond
    }

    fn perm(&self) -> PermRef<'_, usize> {
        PermRef::new_checked(&self.perm, &self.perm_inv, self.perm.len())
    }

    /// Overwrites `rhs` with `A⁻¹ rhs`.
    pub fn solve_in_place(&self, rhs: MatMut<'_, c64>) {
        let n = self.dim();
        let par = parallelism();
        let mut mem = MemBuffer::new(solve::solve_in_place_scratch::<usize, c64>(n, rhs.ncols(), par));
        solve::solve_in_place(self.lu.as_ref(), self.lu.as_ref(), self.perm(), rhs, par, MemStack::new(&mut mem));
    }

    /// Overwrites `rhs` with `A⁻ᵀ rhs`.
    pub fn solve_transpose_in_place(&self, rhs: MatMut<'_, c64>) {
        let n = self.dim();
        let par = parallelism();
        let mut mem = MemBuffer::new(solve::solve_transpose_in_place_scratch::<usize, c64>(n, rhs.ncols(), par));
        solve::solve_transpose_in_place(self.lu.as_ref(), self.lu.as_ref(), self.perm(), rhs, par, MemStack::new(&mut mem));
    }

    pub fn solve(&self, b: MatRef<'_, c64>) -> Mat<c64> {
        let mut x = b.to_owned();
        self.solve_in_place(x.as_mut());
        x
    }

    pub fn solve_vec(&self, b: &[c64]) -> Vec<c64> {
        let mut x = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        self.solve_in_place(x.as_mut());
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }

    /// Solves for several right-hand sides given as columns.
    pub fn solve_columns(&self, cols: &[Vec<c64>]) -> Vec<Vec<c64>> {
        if cols.is_empty() {
            return Vec::new();
        }
        let n = self.dim();
        let mut x = Mat::from_fn(n, cols.len(), |i, j| cols[j][i]);
        self.solve_in_place(x.as_mut());
        (0..cols.len()).map(|j| (0..n).map(|i| x[(i, j)]).collect()).collect()
    }

    /// Hager–Higham estimate of `‖A⁻¹‖₁`.
    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut x = Mat::from_fn(n, 1, |_, _| c64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(y.as_mut());
            est = (0..n).map(|i| y[(i, 0)].norm()).sum::<f64>();
            // z = A⁻ᴴ sign(y) = conj(A⁻ᵀ conj(sign(y)))
            let mut z = Mat::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                let a = v.norm();
                if a == 0.0 {
                    c64::new(1.0, 0.0)
                } else {
                    (v / a).conj()
                }
            });
            self.solve_transpose_in_place(z.as_mut());
            let (j, zmax) = (0..n).map(|i| (i, z[(i, 0)].norm())).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            let ztx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = Mat::zeros(n, 1);
            x[(j, 0)] = c64::new(1.0, 0.0);
        }
        // Higham's alternating test vector guards against underestimation.
        let mut b = Mat::from_fn(n, 1, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            c64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
        });
        self.solve_in_place(b.as_mut());
        let alt = 2.0 * (0..n).map(|i| b[(i, 0)].norm()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt)
    }
}

/// Solves `AX = B`; returns `X` and the condition estimate of `A`.
pub fn dense_solve(a: Mat<c64>, b: MatRef<'_, c64>) -> Result<(Mat<c64>, f64)> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!("A is {}x{}, B has {} rows", a.nrows(), a.ncols(), b.nrows())));
    }
    let lu = DenseLu::factor(a)?;
    Ok((lu.solve(b), lu.cond_estimate()))
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let a = Mat::<c64>::identity(4, 4);
        let b = Mat::from_fn(4, 2, |i, j| c64::new(i as f64, j as f64));
        let (x, cond) = dense_solve(a, b.as_ref()).unwrap();
        assert_eq!(x, b);
        assert!((cond - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = Mat::from_fn(3, 3, |i, j| c64::new((i + j) as f64, 0.0));
        match DenseLu::factor(a) {
            Err(Error::SingularMatrix { step, .. }) => assert_eq!(step, 2),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn cond_estimate_of_diagonal() {
        let a = Mat::from_fn(5, 5, |i, j| if i == j { c64::new(10f64.powi(i as i32), 0.0) } else { c64::new(0.0, 0.0) });
        let lu = DenseLu::factor(a).unwrap();
        assert!((lu.cond_estimate() - 1e4).abs() < 1e-8);
    }
}
