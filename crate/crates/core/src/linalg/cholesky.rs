//! Error-controlled pivoted Cholesky factorization with on-demand matrix entries.

use crate::error::{Error, Result};

/// Rank-k factorization `L Rᵀ` (or `L Lᵀ` when `right` is `None`), stored by columns.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankFactor<L = f64, R = L> {
    pub left: Vec<Vec<L>>,
    pub right: Option<Vec<Vec<R>>>,
    /// Trace of the residual `C - L Lᵀ` after the last step (pivoted Cholesky only).
    pub trace_residual: f64,
    /// Pivot indices in selection order (pivoted Cholesky only).
    pub pivots: Vec<usize>,
    /// Trace residual before each step and after the last one.
    pub residual_history: Vec<f64>,
}

impl<L, R> LowRankFactor<L, R> {
    pub fn rank(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }
}

impl LowRankFactor<f64> {
    pub fn symmetric(columns: Vec<Vec<f64>>) -> Self {
        Self { left: columns, right: None, trace_residual: 0.0, pivots: Vec::new(), residual_history: Vec::new() }
    }

    /// Entry `(i, j)` of `L Lᵀ`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.left.iter().map(|c| c[i] * c[j]).sum()
    }
}

/// Pivoted Cholesky factorization of a symmetric positive semidefinite `n×n` matrix.
///
/// `diagonal` holds the matrix diagonal, `column(p)` returns column `p`. Stops as soon as
/// the trace of the residual is at most `tolerance · trace`.
pub fn pivoted_cholesky(diagonal: Vec<f64>, mut column: impl FnMut(usize) -> Vec<f64>, tolerance: f64) -> Result<LowRankFactor<f64>> {
    let n = diagonal.len();
    let trace: f64 = diagonal.iter().sum();
    let mut d = diagonal;
    let mut chosen = vec![false; n];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut pivots = Vec::new();
    let residual = |d: &[f64], chosen: &[bool]| d.iter().zip(chosen).filter(|(_, &c)| !c).map(|(v, _)| v).sum::<f64>();
    let mut err = residual(&d, &chosen);
    let mut history = vec![err];
    let floor = tolerance * trace.abs();

    let negative_limit = -floor.max(f64::EPSILON * trace.abs());
    let check = |d: &[f64], chosen: &[bool], step: usize| -> Result<()> {
        match d.iter().zip(chosen).filter(|(_, &c)| !c).map(|(v, _)| *v).min_by(f64::total_cmp) {
            Some(v) if v < negative_limit => Err(Error::NotPositiveSemidefinite { pivot: v, step }),
            _ => Ok(()),
        }
    };
    check(&d, &chosen, 0)?;

    while err > floor && columns.len() < n {
        let (p, &dp) =
            d.iter().enumerate().filter(|(i, _)| !chosen[*i]).max_by(|a, b| a.1.total_cmp(b.1)).expect("unpivoted index remains");
        if dp <= 0.0 {
            break;
        }
        let mut l = column(p);
        if l.len() != n {
            return Err(Error::Dimension(format!("column oracle returned {} entries, expected {n}", l.len())));
        }
        for c in &columns {
            let cp = c[p];
            for (li, ci) in l.iter_mut().zip(c) {
                *li -= cp * ci;
            }
        }
        let s = dp.sqrt();
        for v in &mut l {
            *v /= s;
        }
        for (di, li) in d.iter_mut().zip(&l) {
            *di -= li * li;
        }
        chosen[p] = true;
        d[p] = 0.0;
        pivots.push(p);
        columns.push(l);
        err = residual(&d, &chosen);
        history.push(err);
        check(&d, &chosen, columns.len())?;
    }

    Ok(LowRankFactor { left: columns, right: None, trace_residual: err, pivots, residual_history: history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_full_rank() {
        let f = pivoted_cholesky(vec![1.0; 5], |p| (0..5).map(|i| if i == p { 1.0 } else { 0.0 }).collect(), 0.0).unwrap();
        assert_eq!(f.rank(), 5);
        let mut seen = [false; 5];
        for c in &f.left {
            let nz: Vec<usize> = (0..5).filter(|&i| c[i] != 0.0).collect();
            assert_eq!(nz.len(), 1);
            assert_eq!(c[nz[0]], 1.0);
            seen[nz[0]] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn rank_one() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let f = pivoted_cholesky(v.iter().map(|x| x * x).collect(), |p| v.iter().map(|x| x * v[p]).collect(), 1e-12).unwrap();
        assert_eq!(f.rank(), 1);
        assert_eq!(f.pivots, vec![3]);
        assert!((f.entry(1, 2) - 6.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = [[1.0, 2.0], [2.0, 1.0]];
        let r = pivoted_cholesky(vec![1.0, 1.0], |p| vec![a[0][p], a[1][p]], 1e-10);
        assert!(matches!(r, Err(Error::NotPositiveSemidefinite { .. })));
    }
}
