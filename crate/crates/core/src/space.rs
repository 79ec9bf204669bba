//! Discrete trace spaces: lowest-order Raviart–Thomas currents and continuous bilinear
//! scalar functions on a surface mesh.

use std::sync::Arc;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::c64;
use crate::error::Result;
use crate::geometry::{surface_gradient, PointFrame, SurfaceMesh, SurfacePointData, Vec3};
use crate::linalg::sparse::{CsrMatrix, SpdFactor};
use crate::quadrature::TensorRule;

pub type CVec3 = Vector3<c64>;

/// Value of one vector basis function at a point.
#[derive(Clone, Copy, Debug)]
pub struct VectorBasisValue {
    pub dof: usize,
    pub value: Vec3,
    pub divergence: f64,
}

/// Value of one scalar basis function at a point.
#[derive(Clone, Copy, Debug)]
pub struct ScalarBasisValue {
    pub dof: usize,
    pub value: f64,
    pub gradient: Vec3,
    /// Vector surface curl `∇_Γ φ × n`.
    pub curl: Vec3,
}

/// Reference Raviart–Thomas shape functions with unit outward flux through local edge `k`.
pub fn rt_reference(u: f64, v: f64) -> [[f64; 2]; 4] {
    [[0.0, -(1.0 - v)], [u, 0.0], [0.0, v], [-(1.0 - u), 0.0]]
}

/// Bilinear nodal functions and their reference gradients.
pub fn bilinear_reference(u: f64, v: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    ([(1.0 - u) * (1.0 - v), u * (1.0 - v), u * v, (1.0 - u) * v], [[-(1.0 - v), -(1.0 - u)], [1.0 - v, -u], [v, u], [-v, 1.0 - u]])
}

/// Which discrete space a coefficient vector belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    Vector,
    Scalar,
}

/// Coefficient vector of a discrete field on Γ with its meaning.
#[derive(Clone, Debug)]
pub struct TraceField {
    pub kind: SpaceKind,
    pub coefficients: Vec<c64>,
    pub tag: String,
    pub wavenumber: Option<f64>,
}

impl TraceField {
    pub fn vector(coefficients: Vec<c64>, tag: impl Into<String>, wavenumber: Option<f64>) -> Self {
        Self { kind: SpaceKind::Vector, coefficients, tag: tag.into(), wavenumber }
    }

    pub fn scalar(coefficients: Vec<c64>, tag: impl Into<String>) -> Self {
        Self { kind: SpaceKind::Scalar, coefficients, tag: tag.into(), wavenumber: None }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Lowest-order div-conforming space; one degree of freedom per mesh edge.
#[derive(Clone, Debug)]
pub struct VectorSpace {
    pub mesh: Arc<SurfaceMesh>,
}

impl VectorSpace {
    pub fn new(mesh: Arc<SurfaceMesh>) -> Self {
        Self { mesh }
    }

    pub fn dim(&self) -> usize {
        self.mesh.num_edges()
    }

    /// Basis functions supported on `element` at local point `(u, v)`.
    pub fn eval_basis(&self, element: usize, u: f64, v: f64) -> [VectorBasisValue; 4] {
        let frame = self.mesh.frame(element, u, v);
        self.eval_basis_at(element, &frame, u, v)
    }

    /// As [`Self::eval_basis`] with precomputed geometry.
    pub fn eval_basis_at(&self, element: usize, frame: &PointFrame, u: f64, v: f64) -> [VectorBasisValue; 4] {
        let e = &self.mesh.elements[element];
        let reference = rt_reference(u, v);
        let [a, b] = frame.tangents;
        std::array::from_fn(|k| {
            let s = e.edge_signs[k] / frame.jacobian;
            VectorBasisValue { dof: e.edges[k], value: (a * reference[k][0] + b * reference[k][1]) * s, divergence: s }
        })
    }

    /// Value and surface divergence of the field with coefficients `coeffs`.
    pub fn evaluate(&self, coeffs: &[c64], element: usize, u: f64, v: f64) -> (CVec3, c64) {
        let mut val = CVec3::zeros();
        let mut div = c64::new(0.0, 0.0);
        for b in self.eval_basis(element, u, v) {
            let c = coeffs[b.dof];
            val += b.value.map(|x| c * x);
            div += c * b.divergence;
        }
        (val, div)
    }
}

/// Continuous piecewise bilinear space; one degree of freedom per mesh vertex.
#[derive(Clone, Debug)]
pub struct ScalarSpace {
    pub mesh: Arc<SurfaceMesh>,
}

impl ScalarSpace {
    pub fn new(mesh: Arc<SurfaceMesh>) -> Self {
        Self { mesh }
    }

    pub fn dim(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn eval_basis(&self, element: usize, u: f64, v: f64) -> [ScalarBasisValue; 4] {
        let frame = self.mesh.frame(element, u, v);
        self.eval_basis_at(element, &frame, u, v)
    }

    pub fn eval_basis_at(&self, element: usize, frame: &PointFrame, u: f64, v: f64) -> [ScalarBasisValue; 4] {
        let e = &self.mesh.elements[element];
        let (val, grad) = bilinear_reference(u, v);
        std::array::from_fn(|k| {
            let gradient = surface_gradient(&frame.tangents, grad[k][0], grad[k][1]);
            ScalarBasisValue { dof: e.vertices[k], value: val[k], gradient, curl: gradient.cross(&frame.normal) }
        })
    }

    /// Value and surface gradient of the function with coefficients `coeffs`.
    pub fn evaluate(&self, coeffs: &[c64], element: usize, u: f64, v: f64) -> (c64, CVec3) {
        let mut val = c64::new(0.0, 0.0);
        let mut grad = CVec3::zeros();
        for b in self.eval_basis(element, u, v) {
            let c = coeffs[b.dof];
            val += c * b.value;
            grad += b.gradient.map(|x| c * x);
        }
        (val, grad)
    }
}

/// Geometry and basis values at one element quadrature point.
#[derive(Clone, Debug)]
pub struct QuadPoint {
    pub element: usize,
    pub uv: [f64; 2],
    pub x: Vec3,
    pub normal: Vec3,
    /// Quadrature weight times the local surface measure.
    pub weight: f64,
    pub rt: [VectorBasisValue; 4],
    pub nodal: [ScalarBasisValue; 4],
}

/// Quadrature points of a tensor rule on every element, stored element by element.
#[derive(Clone, Debug)]
pub struct ElementQuadrature {
    pub order: usize,
    pub points_per_element: usize,
    pub points: Vec<QuadPoint>,
}

impl ElementQuadrature {
    pub fn new(vspace: &VectorSpace, sspace: &ScalarSpace, order: usize) -> Self {
        let rule = TensorRule::new(order);
        let mesh = &vspace.mesh;
        let points = (0..mesh.num_elements())
            .into_par_iter()
            .flat_map_iter(|e| {
                rule.nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&[u, v], &w)| {
                        let f = mesh.frame(e, u, v);
                        QuadPoint {
                            element: e,
                            uv: [u, v],
                            x: f.x,
                            normal: f.normal,
                            weight: w * f.jacobian,
                            rt: vspace.eval_basis_at(e, &f, u, v),
                            nodal: sspace.eval_basis_at(e, &f, u, v),
                        }
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        Self { order, points_per_element: rule.weights.len(), points }
    }

    pub fn element_points(&self, element: usize) -> &[QuadPoint] {
        let n = self.points_per_element;
        &self.points[element * n..(element + 1) * n]
    }
}

/// Both discrete spaces on one mesh with their mass matrices and factorizations.
#[derive(Debug)]
pub struct Discretization {
    pub mesh: Arc<SurfaceMesh>,
    pub vector: VectorSpace,
    pub scalar: ScalarSpace,
    /// Quadrature used for mass matrices, projections and pointwise data.
    pub quad: ElementQuadrature,
    /// `M_𝟎[i,j] = ⟨ψ_j, ψ_i⟩_0` (vector space).
    pub mass_vector: CsrMatrix<f64>,
    /// `M_×[k,l] = ⟨ψ_l, ψ_k⟩_×`.
    pub mass_cross: CsrMatrix<f64>,
    /// `M_0[i,j] = ⟨φ_j, φ_i⟩_0` (scalar space).
    pub mass_scalar: CsrMatrix<f64>,
    pub mass_vector_factor: SpdFactor,
    pub mass_scalar_factor: SpdFactor,
}

/// Order of the element rule used for mass matrices and projections.
pub const MASS_ORDER: usize = 6;

impl Discretization {
    pub fn new(mesh: Arc<SurfaceMesh>) -> Result<Self> {
        let vector = VectorSpace::new(mesh.clone());
        let scalar = ScalarSpace::new(mesh.clone());
        let quad = ElementQuadrature::new(&vector, &scalar, MASS_ORDER);
        let (nv, ns) = (vector.dim(), scalar.dim());
        let mut tv = Vec::new();
        let mut tc = Vec::new();
        let mut ts = Vec::new();
        for p in &quad.points {
            for bi in &p.rt {
                for bj in &p.rt {
                    tv.push((bi.dof, bj.dof, p.weight * bi.value.dot(&bj.value)));
                    tc.push((bi.dof, bj.dof, p.weight * bj.value.cross(&p.normal).dot(&bi.value)));
                }
            }
            for bi in &p.nodal {
                for bj in &p.nodal {
                    ts.push((bi.dof, bj.dof, p.weight * bi.value * bj.value));
                }
            }
        }
        let mass_vector = CsrMatrix::from_triplets(nv, nv, tv);
        let mass_cross = CsrMatrix::from_triplets(nv, nv, tc);
        let mass_scalar = CsrMatrix::from_triplets(ns, ns, ts);
        let mass_vector_factor = SpdFactor::new(&mass_vector)?;
        let mass_scalar_factor = SpdFactor::new(&mass_scalar)?;
        Ok(Self { mesh, vector, scalar, quad, mass_vector, mass_cross, mass_scalar, mass_vector_factor, mass_scalar_factor })
    }

    /// Load vector `[∫ f φ_i]` of a pointwise function against the scalar basis.
    pub fn scalar_load(&self, f: impl Fn(&QuadPoint) -> c64 + Sync) -> Vec<c64> {
        let vals: Vec<c64> = self.quad.points.par_iter().map(&f).collect();
        self.scalar_load_values(&vals)
    }

    /// Scalar load vector from values given at the points of `quad`.
    pub fn scalar_load_values(&self, vals: &[c64]) -> Vec<c64> {
        let mut load = vec![c64::new(0.0, 0.0); self.scalar.dim()];
        for (p, v) in self.quad.points.iter().zip(vals) {
            for b in &p.nodal {
                load[b.dof] += v * (p.weight * b.value);
            }
        }
        load
    }

    /// Load vector `[∫ f·ψ_i]` of a pointwise tangential field against the vector basis.
    pub fn vector_load(&self, f: impl Fn(&QuadPoint) -> CVec3 + Sync) -> Vec<c64> {
        let vals: Vec<CVec3> = self.quad.points.par_iter().map(&f).collect();
        self.vector_load_values(&vals)
    }

    /// Vector load vector from values given at the points of `quad`.
    pub fn vector_load_values(&self, vals: &[CVec3]) -> Vec<c64> {
        let mut load = vec![c64::new(0.0, 0.0); self.vector.dim()];
        for (p, v) in self.quad.points.iter().zip(vals) {
            for b in &p.rt {
                load[b.dof] += v.dot(&b.value.map(|x| c64::new(x * p.weight, 0.0)));
            }
        }
        load
    }

    /// Load vector `[∫ f div_Γ ψ_i]`.
    pub fn divergence_load(&self, f: impl Fn(&QuadPoint) -> c64 + Sync) -> Vec<c64> {
        let vals: Vec<c64> = self.quad.points.par_iter().map(&f).collect();
        self.divergence_load_values(&vals)
    }

    /// Divergence load vector from values given at the points of `quad`.
    pub fn divergence_load_values(&self, vals: &[c64]) -> Vec<c64> {
        let mut load = vec![c64::new(0.0, 0.0); self.vector.dim()];
        for (p, v) in self.quad.points.iter().zip(vals) {
            for b in &p.rt {
                load[b.dof] += v * (p.weight * b.divergence);
            }
        }
        load
    }

    /// L² projection of a pointwise function onto the scalar space.
    pub fn l2_project_scalar(&self, f: impl Fn(&QuadPoint) -> c64 + Sync) -> TraceField {
        TraceField::scalar(self.mass_scalar_factor.solve(&self.scalar_load(f)), "l2 projection")
    }

    /// L² projection of a pointwise tangential field onto the vector space.
    pub fn l2_project_vector(&self, f: impl Fn(&QuadPoint) -> CVec3 + Sync) -> TraceField {
        TraceField::vector(self.mass_vector_factor.solve(&self.vector_load(f)), "l2 projection", None)
    }

    /// Coefficients of the scalar projection `Π_h^0 div_Γ μ_h` of a discrete current.
    pub fn project_divergence(&self, current: &[c64]) -> Vec<c64> {
        assert_eq!(current.len(), self.vector.dim(), "current length must match the vector space");
        let load = self.scalar_load(|p| p.rt.iter().map(|b| current[b.dof] * b.divergence).sum());
        self.mass_scalar_factor.solve(&load)
    }

    /// Coefficients of the vector-space projection of the field whose `⟨·,·⟩_×`-tested
    /// vector is `tested`, i.e. of `Π_h^𝟎 g` given `[⟨g, ψ_i⟩_×]`.
    pub fn coefficients_from_cross_tested(&self, tested: &[c64]) -> Vec<c64> {
        let rotated = self.mass_vector_factor.solve(tested);
        let m = self.mass_cross.mul_vec(&rotated);
        self.mass_vector_factor.solve(&m).into_iter().map(|z| -z).collect()
    }

    /// Field values at all quadrature points of a vector-space coefficient vector.
    pub fn vector_at_points(&self, coeffs: &[c64]) -> Vec<(CVec3, c64)> {
        self.quad
            .points
            .par_iter()
            .map(|p| {
                let mut val = CVec3::zeros();
                let mut div = c64::new(0.0, 0.0);
                for b in &p.rt {
                    let c = coeffs[b.dof];
                    val += b.value.map(|x| c * x);
                    div += c * b.divergence;
                }
                (val, div)
            })
            .collect()
    }

    /// Values and surface gradients at all quadrature points of a scalar coefficient vector.
    pub fn scalar_at_points(&self, coeffs: &[c64]) -> Vec<(c64, CVec3)> {
        self.quad
            .points
            .par_iter()
            .map(|p| {
                let mut val = c64::new(0.0, 0.0);
                let mut grad = CVec3::zeros();
                for b in &p.nodal {
                    let c = coeffs[b.dof];
                    val += c * b.value;
                    grad += b.gradient.map(|x| c * x);
                }
                (val, grad)
            })
            .collect()
    }

    /// Pointwise differential geometry at all quadrature points.
    pub fn geometry_at_points(&self) -> Result<Vec<SurfacePointData>> {
        self.quad.points.par_iter().map(|p| self.mesh.geometry_at(p.element, p.uv[0], p.uv[1])).collect()
    }
}

/// Complex helper: real vector times complex scalar.
pub fn scale(v: &Vec3, c: c64) -> CVec3 {
    v.map(|x| c * x)
}

/// Cross product with a real vector on the right.
pub fn cross_real(a: &CVec3, b: &Vec3) -> CVec3 {
    CVec3::new(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])
}

/// Bilinear dot product with a real vector.
pub fn dot_real(a: &CVec3, b: &Vec3) -> c64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
