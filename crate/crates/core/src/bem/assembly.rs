//! Galerkin assembly of the Maxwell single- and double-layer boundary operators.

use std::collections::BTreeMap;
use std::sync::Arc;

use faer::Mat;
use rayon::prelude::*;

use crate::bem::kernel::HelmholtzKernel;
use crate::c64;
use crate::geometry::Vec3;
use crate::quadrature::{PairClass, PairQuadrature, QuadratureConfig};
use crate::space::{Discretization, ElementQuadrature, VectorBasisValue};

/// Local 4×4 blocks of both operators for one element pair `(a, b)`, indexed by the
/// local edges of `a` (rows) and `b` (columns).
#[derive(Clone, Debug)]
pub struct PairBlock {
    pub a: usize,
    pub b: usize,
    pub efie: [[c64; 4]; 4],
    pub dlp: [[c64; 4]; 4],
}

/// Which operators a pair pass computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Wanted {
    pub efie: bool,
    pub dlp: bool,
}

const ZERO: c64 = c64::new(0.0, 0.0);

/// Number of row elements processed per parallel batch.
const BATCH: usize = 32;

/// Assembles `S_κ` and `C_κ` on a discretization.
///
/// Entries are `S[i,j] = ∫∫ G(x,y) (ψ_j(y)·ψ_i(x) - κ⁻² div ψ_j(y) div ψ_i(x))` and
/// `C[i,j] = ∫∫ ∇ₓG(x,y)·(ψ_j(y) × ψ_i(x))`; both matrices are complex symmetric.
pub struct Assembler {
    pub disc: Arc<Discretization>,
    pub kernel: HelmholtzKernel,
    pub quadrature: PairQuadrature,
    tensor: BTreeMap<usize, ElementQuadrature>,
}

impl std::fmt::Debug for Assembler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Assembler").field("kappa", &self.kernel.kappa).field("config", &self.quadrature.config).finish()
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn accumulate(
    blk: &mut PairBlock,
    kernel: &HelmholtzKernel,
    inv_k2: f64,
    want: Wanted,
    d: Vec3,
    w: f64,
    ra: &[VectorBasisValue; 4],
    rb: &[VectorBasisValue; 4],
) {
    let (g, f) = kernel.value_and_gradient_factor(&d);
    if want.efie {
        let gw = g * w;
        for i in 0..4 {
            for j in 0..4 {
                let k = ra[i].value.dot(&rb[j].value) - inv_k2 * ra[i].divergence * rb[j].divergence;
                blk.efie[i][j] += gw * k;
            }
        }
    }
    if want.dlp {
        let fw = f * w;
        for j in 0..4 {
            let cj = d.cross(&rb[j].value);
            for i in 0..4 {
                blk.dlp[i][j] += fw * ra[i].value.dot(&cj);
            }
        }
    }
}

impl Assembler {
    pub fn new(disc: Arc<Discretization>, kappa: f64, config: QuadratureConfig) -> Self {
        let quadrature = PairQuadrature::new(config);
        let tensor =
            quadrature.config.tensor_orders().into_iter().map(|o| (o, ElementQuadrature::new(&disc.vector, &disc.scalar, o))).collect();
        Self { disc, kernel: HelmholtzKernel::new(kappa), quadrature, tensor }
    }

    pub fn kappa(&self) -> f64 {
        self.kernel.kappa
    }

    pub fn dim(&self) -> usize {
        self.disc.vector.dim()
    }

    /// Local blocks for the element pair `(a, b)`.
    pub fn pair_block(&self, a: usize, b: usize, want: Wanted) -> PairBlock {
        let mesh = &self.disc.mesh;
        let inv_k2 = 1.0 / (self.kernel.kappa * self.kernel.kappa);
        let mut blk = PairBlock { a, b, efie: [[ZERO; 4]; 4], dlp: [[ZERO; 4]; 4] };
        match self.quadrature.classify(mesh, a, b) {
            PairClass::Regular { order } => {
                let q = &self.tensor[&order];
                let pb = q.element_points(b);
                for px in q.element_points(a) {
                    for py in pb {
                        accumulate(&mut blk, &self.kernel, inv_k2, want, px.x - py.x, px.weight * py.weight, &px.rt, &py.rt);
                    }
                }
            }
            class => {
                let vs = &self.disc.vector;
                for p in self.quadrature.singular_points(mesh, a, b, class) {
                    let fa = mesh.frame(a, p.x[0], p.x[1]);
                    let fb = mesh.frame(b, p.y[0], p.y[1]);
                    let ra = vs.eval_basis_at(a, &fa, p.x[0], p.x[1]);
                    let rb = vs.eval_basis_at(b, &fb, p.y[0], p.y[1]);
                    let w = p.weight * fa.jacobian * fb.jacobian;
                    accumulate(&mut blk, &self.kernel, inv_k2, want, fa.x - fb.x, w, &ra, &rb);
                }
            }
        }
        blk
    }

    /// Visits the blocks of all unordered element pairs `a <= b` in a fixed order.
    ///
    /// Blocks are computed in parallel batches and handed to `sink` sequentially, so
    /// the accumulation order does not depend on the thread count.
    pub fn pair_pass(&self, want: Wanted, mut sink: impl FnMut(&PairBlock)) {
        let n = self.disc.mesh.num_elements();
        let mut start = 0;
        while start < n {
            let end = (start + BATCH).min(n);
            let blocks: Vec<Vec<PairBlock>> =
                (start..end).into_par_iter().map(|a| (a..n).map(|b| self.pair_block(a, b, want)).collect()).collect();
            for row in &blocks {
                for blk in row {
                    sink(blk);
                }
            }
            start = end;
        }
    }

    fn scatter(m: &mut Mat<c64>, disc: &Discretization, blk: &PairBlock, local: &[[c64; 4]; 4]) {
        let ea = &disc.mesh.elements[blk.a];
        let eb = &disc.mesh.elements[blk.b];
        for i in 0..4 {
            for j in 0..4 {
                let v = local[i][j];
                m[(ea.edges[i], eb.edges[j])] += v;
                if blk.a != blk.b {
                    m[(eb.edges[j], ea.edges[i])] += v;
                }
            }
        }
    }

    /// Dense `S_κ`.
    pub fn assemble_efie(&self) -> Mat<c64> {
        let n = self.dim();
        let mut s = Mat::zeros(n, n);
        self.pair_pass(Wanted { efie: true, dlp: false }, |blk| Self::scatter(&mut s, &self.disc, blk, &blk.efie));
        s
    }

    /// Dense `C_κ`.
    pub fn assemble_dlp(&self) -> Mat<c64> {
        let n = self.dim();
        let mut c = Mat::zeros(n, n);
        self.pair_pass(Wanted { efie: false, dlp: true }, |blk| Self::scatter(&mut c, &self.disc, blk, &blk.dlp));
        c
    }

    /// Dense `S_κ` and `C_κ` from one pass.
    pub fn assemble_both(&self) -> (Mat<c64>, Mat<c64>) {
        let n = self.dim();
        let mut s = Mat::zeros(n, n);
        let mut c = Mat::zeros(n, n);
        self.pair_pass(Wanted { efie: true, dlp: true }, |blk| {
            Self::scatter(&mut s, &self.disc, blk, &blk.efie);
            Self::scatter(&mut c, &self.disc, blk, &blk.dlp);
        });
        (s, c)
    }

    /// `C_κ X` for the columns of `X` without storing `C_κ`.
    pub fn apply_dlp(&self, cols: &[Vec<c64>]) -> Vec<Vec<c64>> {
        let n = self.dim();
        let mut out = vec![vec![ZERO; n]; cols.len()];
        if cols.is_empty() {
            return out;
        }
        let disc = &self.disc;
        self.pair_pass(Wanted { efie: false, dlp: true }, |blk| {
            let ea = &disc.mesh.elements[blk.a];
            let eb = &disc.mesh.elements[blk.b];
            for (x, y) in cols.iter().zip(out.iter_mut()) {
                for i in 0..4 {
                    for j in 0..4 {
                        let v = blk.dlp[i][j];
                        y[ea.edges[i]] += v * x[eb.edges[j]];
                        if blk.a != blk.b {
                            y[eb.edges[j]] += v * x[ea.edges[i]];
                        }
                    }
                }
            }
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_unit_sphere, SurfaceMesh};

    #[test]
    fn operators_are_complex_symmetric_and_dlp_apply_matches() {
        let mesh = Arc::new(SurfaceMesh::new(Arc::new(make_unit_sphere()), 1));
        let disc = Arc::new(Discretization::new(mesh).unwrap());
        let asm = Assembler::new(disc, 2.0, QuadratureConfig::default());
        let (s, c) = asm.assemble_both();
        let n = asm.dim();
        let scale = s.norm_max();
        for i in 0..n {
            for j in 0..n {
                assert!((s[(i, j)] - s[(j, i)]).norm() < 1e-12 * scale);
                assert!((c[(i, j)] - c[(j, i)]).norm() < 1e-12 * scale);
            }
        }
        assert_eq!(asm.assemble_efie(), s);
        let x: Vec<c64> = (0..n).map(|i| c64::new((i as f64).sin(), (i as f64).cos())).collect();
        let y = asm.apply_dlp(std::slice::from_ref(&x)).remove(0);
        for i in 0..n {
            let r: c64 = (0..n).map(|j| c[(i, j)] * x[j]).sum();
            assert!((r - y[i]).norm() < 1e-12 * scale);
        }
    }
}
