//! Reference solve, shape-derivative boundary data and the correlation pipeline for the
//! mean second-order correction.

use nalgebra::Matrix3;

use crate::bem::{assemble_coupling, CouplingMatrices, OperatorSet, PotentialEvaluator};
use crate::c64;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::linalg::{pivoted_cholesky, tensor_solve, CorrelationKernel, LowRankFactor};
use crate::space::{cross_real, scale, CVec3, Discretization, TraceField};
use crate::uq::correlation::CorrelationMatrix;
use crate::uq::IncidentWave;

const ZERO: c64 = c64::new(0.0, 0.0);

/// Neumann trace `γ_N E_0` of the total field and the normal component `⟨E_0, n⟩`.
#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    pub wave: IncidentWave,
    /// Tested right-hand side `[⟨-γ_t E^i, ψ_i⟩_×]`.
    pub rhs: Vec<c64>,
    pub neumann: TraceField,
    /// `-κ⁻² Π_h^0 div_Γ γ_N E_0`.
    pub normal: TraceField,
}

/// Solves the electric field integral equation for the perfectly conducting body.
pub fn solve_reference(ops: &OperatorSet, wave: &IncidentWave) -> Result<ReferenceSolution> {
    if (wave.kappa - ops.kappa).abs() > 1e-12 * ops.kappa {
        return Err(Error::Config(format!("incident wavenumber {} does not match operators at {}", wave.kappa, ops.kappa)));
    }
    let disc = &ops.disc;
    let rhs = disc.vector_load(|p| -wave.field(&p.x));
    let j = ops.solve_efie(std::slice::from_ref(&rhs)).remove(0);
    let normal = normal_component(disc, &j, ops.kappa);
    Ok(ReferenceSolution { wave: *wave, rhs, neumann: TraceField::vector(j, "neumann trace", Some(ops.kappa)), normal })
}

/// `⟨E, n⟩ = -κ⁻² Π_h^0 div_Γ γ_N E` for a Maxwell solution with Neumann trace `neumann`.
pub fn normal_component(disc: &Discretization, neumann: &[c64], kappa: f64) -> TraceField {
    let d = disc.project_divergence(neumann);
    TraceField::scalar(d.into_iter().map(|z| z * (-1.0 / (kappa * kappa))).collect(), "normal component")
}

/// A normal perturbation field `r` on Γ.
#[derive(Clone, Copy)]
pub enum Perturbation<'a> {
    /// Coefficients in the continuous scalar space.
    Discrete(&'a [f64]),
    Pointwise(&'a (dyn Fn(&Vec3) -> f64 + Sync)),
}

fn perturbation_values(disc: &Discretization, r: Perturbation<'_>) -> Vec<f64> {
    match r {
        Perturbation::Discrete(c) => disc.quad.points.iter().map(|p| p.nodal.iter().map(|b| c[b.dof] * b.value).sum()).collect(),
        Perturbation::Pointwise(f) => disc.quad.points.iter().map(|p| f(&p.x)).collect(),
    }
}

/// Tested vector `[⟨g_E[r], ψ_i⟩_×]` of `g_E[r] = -r γ_N E × n + bcurl_Γ(r ⟨E, n⟩)`.
pub fn first_order_datum(disc: &Discretization, neumann: &TraceField, normal: &TraceField, r: Perturbation<'_>) -> Vec<c64> {
    let rv = perturbation_values(disc, r);
    let jv = disc.vector_at_points(&neumann.coefficients);
    let ev = disc.scalar_at_points(&normal.coefficients);
    let vec_part: Vec<CVec3> = jv.iter().zip(&rv).map(|((j, _), &r)| j * c64::new(r, 0.0)).collect();
    let div_part: Vec<c64> = ev.iter().zip(&rv).map(|((e, _), &r)| e * r).collect();
    let mut b = disc.vector_load_values(&vec_part);
    for (bi, di) in b.iter_mut().zip(disc.divergence_load_values(&div_part)) {
        *bi += di;
    }
    b
}

/// Traces of a radiating Maxwell solution with prescribed rotated tangential trace.
#[derive(Clone, Debug)]
pub struct ExteriorSolution {
    /// Coefficients of `Π_h^𝟎 γ_t u`.
    pub dirichlet: Vec<c64>,
    /// Coefficients of `γ_N u`.
    pub neumann: Vec<c64>,
}

impl ExteriorSolution {
    /// Evaluates `u = Ψ_DL(γ_t u) + Ψ_SL(γ_N u)`.
    pub fn evaluate(&self, ops: &OperatorSet, points: &[Vec3]) -> Vec<CVec3> {
        PotentialEvaluator::new(ops.disc.clone(), ops.kappa).evaluate(Some(&self.neumann), Some(&self.dirichlet), points).values
    }
}

/// Solves the exterior problems with data `[⟨g, ψ_i⟩_×]` for each column via the
/// Dirichlet-to-Neumann equation.
pub fn solve_exterior(ops: &OperatorSet, tested: &[Vec<c64>]) -> Vec<ExteriorSolution> {
    let neumann = ops.neumann_from_tested(tested);
    tested
        .iter()
        .zip(neumann)
        .map(|(t, n)| ExteriorSolution { dirichlet: ops.disc.coefficients_from_cross_tested(t), neumann: n })
        .collect()
}

/// The discrete correlation pipeline for one reference solution.
#[derive(Debug)]
pub struct CorrelationPipelineState {
    pub reference: ReferenceSolution,
    pub coupling: CouplingMatrices,
    /// Pivoted Cholesky factor `L` of the Galerkin correlation matrix.
    pub cholesky: Option<LowRankFactor<f64>>,
    /// `W = (-N_1 - κ⁻² N_2) M_0⁻¹ L`, so that `B_h = W Lᵀ`.
    pub w: Vec<Vec<c64>>,
    /// `Ã_h = U Vᵀ` with `U = S_κ⁻¹ Y`, `V = M_0⁻¹ L`.
    pub a: Option<LowRankFactor<c64, c64>>,
}

impl CorrelationPipelineState {
    pub fn new(ops: &OperatorSet, reference: ReferenceSolution) -> Result<Self> {
        let coupling = assemble_coupling(&ops.disc, &reference.neumann)?;
        Ok(Self { reference, coupling, cholesky: None, w: Vec::new(), a: None })
    }

    pub fn rank(&self) -> usize {
        self.cholesky.as_ref().map_or(0, |l| l.rank())
    }

    /// `(-N_1 - κ⁻² N_2) x`, the tested first-order datum of the scalar-space field `x`.
    pub fn apply_b(&self, kappa: f64, x: &[c64]) -> Vec<c64> {
        let a = self.coupling.n1.mul_vec(x);
        let b = self.coupling.n2.mul_vec(x);
        let s = 1.0 / (kappa * kappa);
        a.iter().zip(b).map(|(u, v)| -u - v * s).collect()
    }

    /// Pivoted Cholesky of the correlation matrix and the factor `W` of `B_h`.
    pub fn build_b_factor(&mut self, ops: &OperatorSet, kernel: &CorrelationKernel, tolerance: f64) -> Result<()> {
        if !(tolerance >= 0.0) {
            return Err(Error::Config(format!("Cholesky tolerance must be non-negative, got {tolerance}")));
        }
        let disc = &ops.disc;
        let oracle = CorrelationMatrix::new(disc, kernel);
        let l = pivoted_cholesky(oracle.diagonal(), |j| oracle.column(j), tolerance)?;
        self.w = l
            .left
            .iter()
            .map(|col| {
                let v = disc.mass_scalar_factor.solve_real(col);
                let vc: Vec<c64> = v.iter().map(|&x| c64::new(x, 0.0)).collect();
                self.apply_b(ops.kappa, &vc)
            })
            .collect();
        self.cholesky = Some(l);
        self.a = None;
        Ok(())
    }

    /// `U = S_κ⁻¹ (½ - C_κ M_𝟎⁻¹ M_× M_𝟎⁻¹) W` and `V = M_0⁻¹ L`.
    pub fn build_a_factor(&mut self, ops: &OperatorSet) -> Result<()> {
        let l = self.cholesky.as_ref().ok_or_else(|| Error::Config("B factor must be built before A".into()))?;
        let y = ops.d2n_rhs(&self.w);
        self.a = Some(tensor_solve(&ops.efie_lu, &ops.disc.mass_scalar_factor, &y, &l.left)?);
        Ok(())
    }

    /// Tested mean second-order datum `𝔼[g^(δ²)[r, r]]`.
    pub fn mean_second_datum(&self, ops: &OperatorSet) -> Result<CorrectionDatum> {
        let a = self.a.as_ref().ok_or_else(|| Error::Config("A factor must be built before the mean datum".into()))?;
        let v = a.right.as_ref().expect("tensor_solve sets the right factor");
        second_datum(ops, &self.reference, v, &a.left)
    }
}

/// Tested vector of a second-order boundary datum.
#[derive(Clone, Debug)]
pub struct CorrectionDatum {
    pub tested: Vec<c64>,
    pub rank: usize,
}

fn mat_vec(m: &Matrix3<f64>, v: &CVec3) -> CVec3 {
    CVec3::new(
        v[0] * m[(0, 0)] + v[1] * m[(0, 1)] + v[2] * m[(0, 2)],
        v[0] * m[(1, 0)] + v[1] * m[(1, 1)] + v[2] * m[(1, 2)],
        v[0] * m[(2, 0)] + v[1] * m[(2, 1)] + v[2] * m[(2, 2)],
    )
}

/// Second-order datum `Σ_m g^(δ²)[ℓ_m, ℓ_m]` for scalar fields `ℓ_m` (coefficients `v[m]`)
/// whose first derivatives `δE[ℓ_m]` have Neumann traces `u[m]`:
///
/// `2 g_{δE[r]}[r] + 2r²((H - 𝐖) g_{E_0}[1] + n×𝐖∇e + e n×∇H) - 4 H e r ∇r × n`
/// with `e = ⟨E_0, n⟩` and `𝐖` the Weingarten map.
fn second_datum(ops: &OperatorSet, reference: &ReferenceSolution, v: &[Vec<c64>], u: &[Vec<c64>]) -> Result<CorrectionDatum> {
    let disc = &ops.disc;
    let np = disc.quad.points.len();
    let inv_k2 = 1.0 / (ops.kappa * ops.kappa);
    let mut rho2 = vec![0.0; np];
    let mut rho_grad = vec![CVec3::zeros(); np];
    let mut la = vec![CVec3::zeros(); np];
    let mut q = vec![ZERO; np];
    for (vm, um) in v.iter().zip(u) {
        let lv = disc.scalar_at_points(vm);
        let av = disc.vector_at_points(um);
        for k in 0..np {
            let (l, dl) = lv[k];
            let (am, dam) = av[k];
            rho2[k] += l.re * l.re;
            rho_grad[k] += dl * l;
            la[k] += am * l;
            q[k] += l * dam * (-inv_k2);
        }
    }
    if v.is_empty() {
        return Ok(CorrectionDatum { tested: vec![ZERO; disc.vector.dim()], rank: 0 });
    }
    let geo = disc.geometry_at_points()?;
    let jv = disc.vector_at_points(&reference.neumann.coefficients);
    let ev = disc.scalar_at_points(&reference.normal.coefficients);
    let two = c64::new(2.0, 0.0);
    let vals: Vec<CVec3> = (0..np)
        .map(|k| {
            let g = &geo[k];
            let n = &g.normal;
            let (e, de) = ev[k];
            let j = jv[k].0;
            let g0 = cross_real(&(de - j), n);
            let hg = g0 * c64::new(g.mean_curvature, 0.0) - mat_vec(&g.weingarten, &g0);
            let shape = -cross_real(&hg, n) + mat_vec(&g.weingarten, &de) + scale(&g.grad_mean_curvature, e);
            la[k] * two + rho_grad[k] * (e * (4.0 * g.mean_curvature)) + shape * c64::new(2.0 * rho2[k], 0.0)
        })
        .collect();
    let pq = disc.mass_scalar_factor.solve(&disc.scalar_load_values(&q));
    let pq_vals: Vec<c64> = disc.scalar_at_points(&pq).into_iter().map(|(x, _)| x * two).collect();
    let mut tested = disc.vector_load_values(&vals);
    for (t, d) in tested.iter_mut().zip(disc.divergence_load_values(&pq_vals)) {
        *t += d;
    }
    Ok(CorrectionDatum { tested, rank: v.len() })
}

/// `g^(δ²)[r, r]` for a deterministic perturbation `r` in the scalar space, assembled directly
/// from the first derivative `δE[r]` without the correlation machinery.
pub fn deterministic_second_datum(ops: &OperatorSet, reference: &ReferenceSolution, r: &[f64]) -> Result<CorrectionDatum> {
    let rc: Vec<c64> = r.iter().map(|&x| c64::new(x, 0.0)).collect();
    let g1 = first_order_datum(&ops.disc, &reference.neumann, &reference.normal, Perturbation::Discrete(r));
    let u = ops.neumann_from_tested(&[g1]);
    second_datum(ops, reference, &[rc], &u)
}

/// Solves the exterior problem for a correction datum.
pub fn solve_correction(ops: &OperatorSet, datum: &CorrectionDatum) -> ExteriorSolution {
    solve_exterior(ops, std::slice::from_ref(&datum.tested)).remove(0)
}

/// `E_0^s + (ε²/2) w` pointwise.
pub fn corrected_mean_field(reference_field: &[CVec3], correction: &[CVec3], eps: f64) -> Vec<CVec3> {
    let s = c64::new(0.5 * eps * eps, 0.0);
    reference_field.iter().zip(correction).map(|(e, w)| e + w * s).collect()
}
