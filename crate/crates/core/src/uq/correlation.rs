//! Galerkin matrix of a correlation kernel in the continuous scalar space, entry by entry.

use rayon::prelude::*;

use crate::geometry::Vec3;
use crate::linalg::CorrelationKernel;
use crate::space::Discretization;

/// Column oracle for `𝐂[i,j] = ∫∫ Cor[r](x,y) φ_j(y) φ_i(x)`.
pub struct CorrelationMatrix<'a> {
    disc: &'a Discretization,
    kernel: &'a CorrelationKernel,
    points: Vec<Vec3>,
    /// For each scalar degree of freedom: `(point index, φ·weight)` over its support.
    support: Vec<Vec<(usize, f64)>>,
    /// `∫ φ_i`.
    moments: Vec<f64>,
}

impl<'a> CorrelationMatrix<'a> {
    pub fn new(disc: &'a Discretization, kernel: &'a CorrelationKernel) -> Self {
        let ns = disc.scalar.dim();
        let mut support = vec![Vec::new(); ns];
        let mut moments = vec![0.0; ns];
        for (k, p) in disc.quad.points.iter().enumerate() {
            for b in &p.nodal {
                support[b.dof].push((k, b.value * p.weight));
                moments[b.dof] += b.value * p.weight;
            }
        }
        let points = disc.quad.points.iter().map(|p| p.x).collect();
        Self { disc, kernel, points, support, moments }
    }

    pub fn dim(&self) -> usize {
        self.moments.len()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match self.kernel {
            CorrelationKernel::Zero => vec![0.0; self.dim()],
            CorrelationKernel::Constant(c) => self.moments.iter().map(|m| c * m * m).collect(),
            _ => self
                .support
                .par_iter()
                .map(|s| {
                    let mut d = 0.0;
                    for &(p, wp) in s {
                        for &(q, wq) in s {
                            d += wp * wq * self.kernel.eval(&self.points[p], &self.points[q]);
                        }
                    }
                    d
                })
                .collect(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        match self.kernel {
            CorrelationKernel::Zero => vec![0.0; self.dim()],
            CorrelationKernel::Constant(c) => self.moments.iter().map(|m| c * m * self.moments[j]).collect(),
            _ => {
                let sj = &self.support[j];
                let s: Vec<f64> =
                    self.points.par_iter().map(|x| sj.iter().map(|&(p, wp)| wp * self.kernel.eval(x, &self.points[p])).sum()).collect();
                let mut col = vec![0.0; self.dim()];
                for (p, sp) in self.disc.quad.points.iter().zip(s) {
                    for b in &p.nodal {
                        col[b.dof] += sp * b.value * p.weight;
                    }
                }
                col
            }
        }
    }
}
