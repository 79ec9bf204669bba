//! Boundary integral operators: kernel, Galerkin assembly, potentials and operator caching.

pub mod assembly;
pub mod cache;
pub mod kernel;
pub mod potentials;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use faer::Mat;

use crate::c64;
use crate::error::{Error, Result};
use crate::linalg::dense::DenseLu;
use crate::linalg::sparse::CsrMatrix;
use crate::quadrature::QuadratureConfig;
use crate::space::{Discretization, TraceField};

pub use assembly::Assembler;
pub use kernel::HelmholtzKernel;
pub use potentials::{FieldValues, PotentialEvaluator};

/// Largest vector-space dimension for which `C_κ` is kept as a dense matrix by default.
pub const DENSE_DLP_LIMIT: usize = 8192;

#[derive(Clone, Debug, Default)]
pub struct AssemblyOptions {
    pub quadrature: QuadratureConfig,
    /// Store `C_κ` densely; `None` decides by problem size.
    pub store_dlp: Option<bool>,
    /// Directory for cached operator matrices.
    pub cache_dir: Option<PathBuf>,
}

/// How `C_κ` is available.
#[derive(Debug)]
pub enum DlpOperator {
    Dense(Mat<c64>),
    /// Applied by re-running the pair quadrature.
    MatrixFree,
}

/// Factored `S_κ`, `C_κ` and the spaces they act on.
#[derive(Debug)]
pub struct OperatorSet {
    pub kappa: f64,
    pub level: u32,
    pub disc: Arc<Discretization>,
    pub assembler: Assembler,
    pub efie_lu: DenseLu,
    pub dlp: DlpOperator,
    pub assembly_seconds: f64,
    pub from_cache: bool,
}

fn cols_to_mat(cols: &[Vec<c64>], n: usize) -> Mat<c64> {
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

fn mat_to_cols(m: &Mat<c64>) -> Vec<Vec<c64>> {
    (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| m[(i, j)]).collect()).collect()
}

impl OperatorSet {
    /// Assembles (or loads from cache) and factors the operators at wavenumber `kappa`.
    pub fn assemble(disc: Arc<Discretization>, kappa: f64, options: &AssemblyOptions) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Config(format!("wavenumber must be positive, got {kappa}")));
        }
        let start = Instant::now();
        let level = disc.mesh.level;
        let n = disc.vector.dim();
        let store_dlp = options.store_dlp.unwrap_or(n <= DENSE_DLP_LIMIT);
        let assembler = Assembler::new(disc.clone(), kappa, options.quadrature.clone());
        let key = cache::CacheKey::new(kappa, level, &options.quadrature);
        let path = options.cache_dir.as_ref().map(|d| key.path_in(d));

        let mut loaded = None;
        if let Some(p) = path.as_ref().filter(|p| p.exists()) {
            let mats = cache::load(p, &key)?;
            if mats.len() == 2 || (mats.len() == 1 && !store_dlp) {
                loaded = Some(mats);
            }
        }
        let from_cache = loaded.is_some();
        let (s, c) = match loaded {
            Some(mut mats) => {
                let s = mats.remove(0);
                let c = if store_dlp { Some(mats.remove(0)) } else { None };
                (s, c)
            }
            None => {
                let (s, c) = if store_dlp {
                    let (s, c) = assembler.assemble_both();
                    (s, Some(c))
                } else {
                    (assembler.assemble_efie(), None)
                };
                if let Some(p) = &path {
                    std::fs::create_dir_all(p.parent().unwrap_or(p))?;
                    match &c {
                        Some(c) => cache::save(p, &key, &[&s, c])?,
                        None => cache::save(p, &key, &[&s])?,
                    }
                }
                (s, c)
            }
        };
        let efie_lu = DenseLu::factor(s)?;
        let dlp = match c {
            Some(c) => DlpOperator::Dense(c),
            None => DlpOperator::MatrixFree,
        };
        Ok(Self { kappa, level, disc, assembler, efie_lu, dlp, assembly_seconds: start.elapsed().as_secs_f64(), from_cache })
    }

    pub fn dim(&self) -> usize {
        self.disc.vector.dim()
    }

    pub fn cond_estimate(&self) -> f64 {
        self.efie_lu.cond_estimate()
    }

    /// `S_κ⁻¹` applied to each column.
    pub fn solve_efie(&self, cols: &[Vec<c64>]) -> Vec<Vec<c64>> {
        self.efie_lu.solve_columns(cols)
    }

    /// `C_κ` applied to each column.
    pub fn apply_dlp(&self, cols: &[Vec<c64>]) -> Vec<Vec<c64>> {
        match &self.dlp {
            DlpOperator::Dense(c) => {
                if cols.is_empty() {
                    return Vec::new();
                }
                let x = cols_to_mat(cols, self.dim());
                mat_to_cols(&(c * &x))
            }
            DlpOperator::MatrixFree => self.assembler.apply_dlp(cols),
        }
    }

    /// Tested right-hand sides `[⟨(½ - 𝓒_κ) Π g, ψ_i⟩_×]` of the Dirichlet-to-Neumann
    /// equation `𝓢_κ γ_N u = (½ - 𝓒_κ) γ_t u`, given `[⟨g, ψ_i⟩_×]`.
    pub fn d2n_rhs(&self, tested: &[Vec<c64>]) -> Vec<Vec<c64>> {
        let coeffs: Vec<Vec<c64>> = tested.iter().map(|b| self.disc.coefficients_from_cross_tested(b)).collect();
        let cg = self.apply_dlp(&coeffs);
        tested.iter().zip(cg).map(|(b, c)| b.iter().zip(c).map(|(bi, ci)| 0.5 * bi - ci).collect()).collect()
    }

    /// Neumann traces of the radiating solutions whose rotated tangential traces have
    /// the given tested vectors.
    pub fn neumann_from_tested(&self, tested: &[Vec<c64>]) -> Vec<Vec<c64>> {
        self.solve_efie(&self.d2n_rhs(tested))
    }
}

/// The coupling matrices `N_1` and `N_2` built from a discrete Neumann trace.
#[derive(Clone, Debug)]
pub struct CouplingMatrices {
    /// `N_1[i,j] = -⟨(γ_N E)_h φ_j, ψ_i⟩_0`.
    pub n1: CsrMatrix<c64>,
    /// `N_2[i,j] = ⟨(Π_h^0 div_Γ (γ_N E)_h) φ_j, div_Γ ψ_i⟩_0`.
    pub n2: CsrMatrix<c64>,
    /// Coefficients of `Π_h^0 div_Γ (γ_N E)_h`.
    pub projected_divergence: Vec<c64>,
}

pub fn assemble_coupling(disc: &Discretization, neumann: &TraceField) -> Result<CouplingMatrices> {
    if neumann.len() != disc.vector.dim() {
        return Err(Error::Dimension(format!("Neumann field of length {} for {} edges", neumann.len(), disc.vector.dim())));
    }
    let j = &neumann.coefficients;
    let pdiv = disc.project_divergence(j);
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    for p in &disc.quad.points {
        let mut jv = crate::space::CVec3::zeros();
        for b in &p.rt {
            jv += b.value.map(|x| j[b.dof] * x);
        }
        let pv: c64 = p.nodal.iter().map(|b| pdiv[b.dof] * b.value).sum();
        for bi in &p.rt {
            let jdot = crate::space::dot_real(&jv, &bi.value);
            for bj in &p.nodal {
                t1.push((bi.dof, bj.dof, -jdot * (bj.value * p.weight)));
                t2.push((bi.dof, bj.dof, pv * (bj.value * bi.divergence * p.weight)));
            }
        }
    }
    let (nv, ns) = (disc.vector.dim(), disc.scalar.dim());
    Ok(CouplingMatrices { n1: CsrMatrix::from_triplets(nv, ns, t1), n2: CsrMatrix::from_triplets(nv, ns, t2), projected_divergence: pdiv })
}
