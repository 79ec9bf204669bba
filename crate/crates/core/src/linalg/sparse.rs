//! Compressed sparse row matrices and sparse SPD solves.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::c64;
use crate::error::{Error, Result};

/// Sparse matrix in CSR layout. Entries of equal position are summed on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<T>,
}

impl<T> CsrMatrix<T>
where
    T: Copy + Default + std::ops::AddAssign,
{
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, T)>) -> Self {
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let row = self.indptr[i]..self.indptr[i + 1];
        match self.indices[row.clone()].binary_search(&j) {
            Ok(k) => self.values[row.start + k],
            Err(_) => T::default(),
        }
    }

    /// Iterator over `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn map<U: Copy + Default + std::ops::AddAssign>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T> CsrMatrix<T>
where
    T: Copy + Default + std::ops::AddAssign + Into<c64>,
{
    pub fn mul_vec(&self, x: &[c64]) -> Vec<c64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v.into() * x[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v.into();
            }
        }
        m
    }
}

impl CsrMatrix<f64> {
    pub fn mul_vec_real(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }
}

/// Sparse Cholesky factorization of a real symmetric positive definite matrix.
pub struct SpdFactor {
    n: usize,
    llt: Llt<usize, f64>,
}

impl std::fmt::Debug for SpdFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpdFactor").field("n", &self.n).finish()
    }
}

impl SpdFactor {
    pub fn new(a: &CsrMatrix<f64>) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::Dimension(format!("SPD factor of a {}x{} matrix", a.nrows, a.ncols)));
        }
        let triplets: Vec<Triplet<usize, usize, f64>> =
            (0..a.nrows).flat_map(|i| a.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| Triplet::new(i, j, v))).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows, a.ncols, &triplets)
            .map_err(|e| Error::Dimension(format!("{e:?}")))?;
        let llt = mat.sp_cholesky(Side::Lower).map_err(|_| Error::NotPositiveSemidefinite { pivot: f64::NAN, step: 0 })?;
        Ok(Self { n: a.nrows, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[c64]) -> Vec<c64> {
        let cols = self.solve_many(&[b.to_vec()]);
        cols.into_iter().next().unwrap()
    }

    pub fn solve_real(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solves for several complex right-hand sides at once.
    pub fn solve_many(&self, bs: &[Vec<c64>]) -> Vec<Vec<c64>> {
        let k = bs.len();
        let mut rhs = Mat::<f64>::zeros(self.n, 2 * k);
        for (c, b) in bs.iter().enumerate() {
            assert_eq!(b.len(), self.n);
            for i in 0..self.n {
                rhs[(i, 2 * c)] = b[i].re;
                rhs[(i, 2 * c + 1)] = b[i].im;
            }
        }
        self.llt.solve_in_place(rhs.as_mut());
        (0..k).map(|c| (0..self.n).map(|i| c64::new(rhs[(i, 2 * c)], rhs[(i, 2 * c + 1)])).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0), (1, 1, 5.0)]);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.transpose().get(0, 1), 2.0);
    }

    #[test]
    fn spd_solve() {
        let a =
            CsrMatrix::from_triplets(3, 3, vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (2, 2, 2.0), (1, 2, 0.5), (2, 1, 0.5)]);
        let f = SpdFactor::new(&a).unwrap();
        let b = vec![c64::new(1.0, 2.0), c64::new(-1.0, 0.5), c64::new(0.0, 3.0)];
        let x = f.solve(&b);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).norm() < 1e-14);
        }
    }
}
