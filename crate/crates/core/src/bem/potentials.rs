//! Off-surface evaluation of the Maxwell single- and double-layer potentials.

use std::sync::Arc;

use rayon::prelude::*;

use crate::bem::kernel::HelmholtzKernel;
use crate::c64;
use crate::geometry::Vec3;
use crate::space::{scale, CVec3, Discretization, ElementQuadrature};

/// Points per direction of the element rule used for potential evaluation.
pub const POTENTIAL_ORDER: usize = 8;

/// Field values with a flag for points closer than two mesh widths to Γ.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldValues {
    pub values: Vec<CVec3>,
    pub near_surface: Vec<bool>,
}

impl FieldValues {
    pub fn any_near_surface(&self) -> bool {
        self.near_surface.iter().any(|&b| b)
    }
}

/// Evaluates `Ψ_SL(μ)(x) = ∫ G μ + κ⁻² ∇ₓ ∫ G div_Γ μ` and `Ψ_DL(λ)(x) = ∫ ∇ₓG × λ`.
pub struct PotentialEvaluator {
    pub disc: Arc<Discretization>,
    pub kernel: HelmholtzKernel,
    quad: ElementQuadrature,
    mesh_width: f64,
}

impl std::fmt::Debug for PotentialEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialEvaluator").field("kappa", &self.kernel.kappa).finish()
    }
}

impl PotentialEvaluator {
    pub fn new(disc: Arc<Discretization>, kappa: f64) -> Self {
        let quad = ElementQuadrature::new(&disc.vector, &disc.scalar, POTENTIAL_ORDER);
        let mesh_width = disc.mesh.mesh_width();
        Self { disc, kernel: HelmholtzKernel::new(kappa), quad, mesh_width }
    }

    fn density(&self, coeffs: &[c64]) -> Vec<(CVec3, c64)> {
        self.quad
            .points
            .iter()
            .map(|p| {
                let mut v = CVec3::zeros();
                let mut d = c64::new(0.0, 0.0);
                for b in &p.rt {
                    let c = coeffs[b.dof];
                    v += b.value.map(|x| c * x);
                    d += c * b.divergence;
                }
                (v, d)
            })
            .collect()
    }

    /// `Ψ_SL(sl) + Ψ_DL(dl)` at `points`; densities are vector-space coefficients.
    pub fn evaluate(&self, sl: Option<&[c64]>, dl: Option<&[c64]>, points: &[Vec3]) -> FieldValues {
        let inv_k2 = 1.0 / (self.kernel.kappa * self.kernel.kappa);
        let mu = sl.map(|c| self.density(c));
        let lambda = dl.map(|c| self.density(c));
        let values = points
            .par_iter()
            .map(|x| {
                let mut e = CVec3::zeros();
                for (k, q) in self.quad.points.iter().enumerate() {
                    let d = x - q.x;
                    let (g, f) = self.kernel.value_and_gradient_factor(&d);
                    if let Some(mu) = &mu {
                        let (m, dm) = mu[k];
                        e += m * (g * q.weight) + scale(&d, f * dm * (inv_k2 * q.weight));
                    }
                    if let Some(la) = &lambda {
                        let grad = d.map(|t| c64::new(t * q.weight, 0.0) * f);
                        e += grad.cross(&la[k].0);
                    }
                }
                e
            })
            .collect();
        let near_surface = points
            .iter()
            .map(|x| self.disc.mesh.elements.iter().any(|el| (x - el.center).norm() - el.radius < 2.0 * self.mesh_width))
            .collect();
        FieldValues { values, near_surface }
    }
}
