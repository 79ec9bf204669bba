//! Parametric surfaces, uniform quadrilateral meshes and pointwise differential geometry.

use std::collections::HashMap;
use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Chart value and partial derivatives up to third order at one parameter point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartJet {
    pub x: Vec3,
    /// `[∂s, ∂t]`
    pub d1: [Vec3; 2],
    /// `[∂ss, ∂st, ∂tt]`
    pub d2: [Vec3; 3],
    /// `[∂sss, ∂sst, ∂stt, ∂ttt]`
    pub d3: [Vec3; 4],
}

impl ChartJet {
    /// Jet of the chart composed with the affine map `(u, v) -> (s0 + u h, t0 + v h)`.
    fn rescaled(&self, h: f64) -> ChartJet {
        let h2 = h * h;
        let h3 = h2 * h;
        ChartJet { x: self.x, d1: self.d1.map(|v| v * h), d2: self.d2.map(|v| v * h2), d3: self.d3.map(|v| v * h3) }
    }
}

/// A smooth chart from the reference square `[0,1]²` into ℝ³.
///
/// Patches of one surface must be oriented so that `∂sΦ × ∂tΦ` points into the exterior.
pub trait ParametricPatch: Debug + Send + Sync {
    fn jet(&self, s: f64, t: f64) -> ChartJet;

    /// Whether `jet` fills in third derivatives. When false, the curvature gradient
    /// falls back to central differences.
    fn has_third_derivatives(&self) -> bool {
        true
    }

    fn point(&self, s: f64, t: f64) -> Vec3 {
        self.jet(s, t).x
    }

    /// Point and first partial derivatives.
    fn tangents(&self, s: f64, t: f64) -> (Vec3, [Vec3; 2]) {
        let j = self.jet(s, t);
        (j.x, j.d1)
    }
}

/// Reparameterization of a cube face coordinate `s ∈ [0,1]` to `q ∈ [-1,1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CubeWarp {
    /// `q = 2s - 1`
    #[default]
    Linear,
    /// `q = tan(π/4 (2s - 1))`, which equalizes element angles on the sphere.
    Equiangular,
}

impl CubeWarp {
    /// Returns `q` and its first three derivatives.
    fn eval(self, s: f64) -> [f64; 4] {
        match self {
            CubeWarp::Linear => [2.0 * s - 1.0, 2.0, 0.0, 0.0],
            CubeWarp::Equiangular => {
                let a = std::f64::consts::FRAC_PI_2;
                let q = (a * s - std::f64::consts::FRAC_PI_4).tan();
                let q1 = a * (1.0 + q * q);
                let q2 = 2.0 * a * q * q1;
                let q3 = 2.0 * a * (q1 * q1 + q * q2);
                [q, q1, q2, q3]
            }
        }
    }
}

/// One face of the cube `[-1,1]³` projected radially onto the sphere of radius `radius`.
#[derive(Clone, Debug)]
pub struct SpherePatch {
    center: Vec3,
    e1: Vec3,
    e2: Vec3,
    radius: f64,
    warp: CubeWarp,
}

impl SpherePatch {
    pub fn new(center: Vec3, e1: Vec3, e2: Vec3, radius: f64, warp: CubeWarp) -> Self {
        Self { center, e1, e2, radius, warp }
    }

    fn cube_point(&self, s: f64, t: f64) -> ([f64; 4], [f64; 4], Vec3) {
        let qs = self.warp.eval(s);
        let qt = self.warp.eval(t);
        (qs, qt, self.center + self.e1 * qs[0] + self.e2 * qt[0])
    }
}

// Derivatives of f(p) = p/|p|.
fn df(p: &Vec3, r: f64, v: &Vec3) -> Vec3 {
    (v - p * (p.dot(v) / (r * r))) / r
}

fn d2f(p: &Vec3, r: f64, v: &Vec3, w: &Vec3) -> Vec3 {
    let r3 = r * r * r;
    let r5 = r3 * r * r;
    let pv = p.dot(v);
    let pw = p.dot(w);
    -(v * pw + w * pv + p * v.dot(w)) / r3 + p * (3.0 * pv * pw / r5)
}

fn d3f(p: &Vec3, r: f64, u: &Vec3, v: &Vec3, w: &Vec3) -> Vec3 {
    let r2 = r * r;
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let r7 = r5 * r2;
    let (pu, pv, pw) = (p.dot(u), p.dot(v), p.dot(w));
    let (uv, uw, vw) = (u.dot(v), u.dot(w), v.dot(w));
    -(v * uw + w * uv + u * vw) / r3
        + (v * (pw * pu) + w * (pv * pu) + p * (vw * pu)) * (3.0 / r5)
        + (u * (pv * pw) + p * (uv * pw) + p * (pv * uw)) * (3.0 / r5)
        - p * (15.0 * pv * pw * pu / r7)
}

impl ParametricPatch for SpherePatch {
    fn jet(&self, s: f64, t: f64) -> ChartJet {
        let (qs, qt, p) = self.cube_point(s, t);
        let r = p.norm();
        let big_r = self.radius;
        let ps = self.e1 * qs[1];
        let pss = self.e1 * qs[2];
        let psss = self.e1 * qs[3];
        let pt = self.e2 * qt[1];
        let ptt = self.e2 * qt[2];
        let pttt = self.e2 * qt[3];

        let x = p * (big_r / r);
        let d1 = [df(&p, r, &ps) * big_r, df(&p, r, &pt) * big_r];
        let d2 = [
            (d2f(&p, r, &ps, &ps) + df(&p, r, &pss)) * big_r,
            d2f(&p, r, &ps, &pt) * big_r,
            (d2f(&p, r, &pt, &pt) + df(&p, r, &ptt)) * big_r,
        ];
        let d3 = [
            (d3f(&p, r, &ps, &ps, &ps) + d2f(&p, r, &ps, &pss) * 3.0 + df(&p, r, &psss)) * big_r,
            (d3f(&p, r, &ps, &ps, &pt) + d2f(&p, r, &pss, &pt)) * big_r,
            (d3f(&p, r, &ps, &pt, &pt) + d2f(&p, r, &ps, &ptt)) * big_r,
            (d3f(&p, r, &pt, &pt, &pt) + d2f(&p, r, &pt, &ptt) * 3.0 + df(&p, r, &pttt)) * big_r,
        ];
        ChartJet { x, d1, d2, d3 }
    }

    fn point(&self, s: f64, t: f64) -> Vec3 {
        let (_, _, p) = self.cube_point(s, t);
        p * (self.radius / p.norm())
    }

    fn tangents(&self, s: f64, t: f64) -> (Vec3, [Vec3; 2]) {
        let (qs, qt, p) = self.cube_point(s, t);
        let r = p.norm();
        let x = p * (self.radius / r);
        let d1 = [df(&p, r, &(self.e1 * qs[1])) * self.radius, df(&p, r, &(self.e2 * qt[1])) * self.radius];
        (x, d1)
    }
}

/// Affine patch `origin + s·e1 + t·e2`.
#[derive(Clone, Debug)]
pub struct FlatPatch {
    pub origin: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl ParametricPatch for FlatPatch {
    fn jet(&self, s: f64, t: f64) -> ChartJet {
        let z = Vec3::zeros();
        ChartJet { x: self.origin + self.e1 * s + self.e2 * t, d1: [self.e1, self.e2], d2: [z; 3], d3: [z; 4] }
    }
}

/// A surface given as a list of patches.
#[derive(Debug, Clone)]
pub struct ParametricSurface {
    pub patches: Vec<Arc<dyn ParametricPatch>>,
}

impl ParametricSurface {
    pub fn new(patches: Vec<Arc<dyn ParametricPatch>>) -> Self {
        Self { patches }
    }
}

/// Six-patch sphere of the given radius centered at the origin.
///
/// Patch order is `+x, +y, +z, -x, -y, -z`; consecutive patches 0 and 1 share an edge.
pub fn make_sphere(radius: f64, warp: CubeWarp) -> ParametricSurface {
    let x = Vec3::x();
    let y = Vec3::y();
    let z = Vec3::z();
    let frames = [(x, y, z), (y, z, x), (z, x, y), (-x, z, y), (-y, x, z), (-z, y, x)];
    let patches =
        frames.into_iter().map(|(c, e1, e2)| Arc::new(SpherePatch::new(c, e1, e2, radius, warp)) as Arc<dyn ParametricPatch>).collect();
    ParametricSurface { patches }
}

pub fn make_unit_sphere() -> ParametricSurface {
    make_sphere(1.0, CubeWarp::Linear)
}

/// Quadrilateral cell `(patch, i, j)` of the uniform subdivision.
#[derive(Clone, Debug)]
pub struct Element {
    pub patch: usize,
    pub i: usize,
    pub j: usize,
    /// Global vertex ids at local corners `(0,0), (1,0), (1,1), (0,1)`.
    pub vertices: [usize; 4],
    /// Global edge ids of the local edges bottom, right, top, left.
    pub edges: [usize; 4],
    /// `+1` if the counter-clockwise traversal of the edge runs from the lower to the
    /// higher global vertex id.
    pub edge_signs: [f64; 4],
    pub center: Vec3,
    /// Radius of a ball around `center` containing the element.
    pub radius: f64,
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Global vertex ids, lower first.
    pub vertices: [usize; 2],
    /// Adjacent `(element, local edge)` pairs.
    pub elements: Vec<(usize, usize)>,
}

/// Local corner coordinates in the order used by [`Element::vertices`].
pub const CORNERS: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

/// Position, tangents, normal and surface measure at an element-local point.
#[derive(Clone, Copy, Debug)]
pub struct PointFrame {
    pub x: Vec3,
    /// `[∂uΦ, ∂vΦ]` in element-local coordinates.
    pub tangents: [Vec3; 2],
    pub normal: Vec3,
    /// Local surface measure `|∂uΦ × ∂vΦ|`.
    pub jacobian: f64,
}

/// Full pointwise differential geometry.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePointData {
    pub x: Vec3,
    /// `[∂uΦ, ∂vΦ]` in element-local coordinates.
    pub tangents: [Vec3; 2],
    /// Local surface measure `√g`.
    pub jacobian: f64,
    pub normal: Vec3,
    /// Weingarten map `[∇_Γ n]`.
    pub weingarten: Matrix3<f64>,
    pub mean_curvature: f64,
    pub gauss_curvature: f64,
    /// Surface gradient of the mean curvature.
    pub grad_mean_curvature: Vec3,
}

impl SurfacePointData {
    /// Surface gradient of a function with local partial derivatives `(f_u, f_v)`.
    pub fn surface_gradient(&self, du: f64, dv: f64) -> Vec3 {
        surface_gradient(&self.tangents, du, dv)
    }
}

/// Tangential gradient `DΦ G⁻¹ (f_u, f_v)`.
pub fn surface_gradient(tangents: &[Vec3; 2], du: f64, dv: f64) -> Vec3 {
    let [a, b] = tangents;
    let g11 = a.dot(a);
    let g12 = a.dot(b);
    let g22 = b.dot(b);
    let det = g11 * g22 - g12 * g12;
    let c1 = (g22 * du - g12 * dv) / det;
    let c2 = (g11 * dv - g12 * du) / det;
    a * c1 + b * c2
}

/// Uniform `2^L × 2^L` subdivision of every patch with global vertex and edge numbering.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub surface: Arc<ParametricSurface>,
    pub level: u32,
    pub n: usize,
    pub elements: Vec<Element>,
    pub vertices: Vec<Vec3>,
    pub edges: Vec<Edge>,
}

struct PointIndex {
    cell: f64,
    map: HashMap<[i64; 3], Vec<usize>>,
}

impl PointIndex {
    fn key(&self, x: &Vec3) -> [i64; 3] {
        [(x[0] / self.cell).floor() as i64, (x[1] / self.cell).floor() as i64, (x[2] / self.cell).floor() as i64]
    }

    fn find_or_insert(&mut self, x: Vec3, points: &mut Vec<Vec3>) -> usize {
        let k = self.key(&x);
        let tol = 0.5 * self.cell;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.map.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if let Some(&id) = ids.iter().find(|&&id| (points[id] - x).norm() < tol) {
                            return id;
                        }
                    }
                }
            }
        }
        let id = points.len();
        points.push(x);
        self.map.entry(k).or_default().push(id);
        id
    }
}

impl SurfaceMesh {
    pub fn new(surface: Arc<ParametricSurface>, level: u32) -> Self {
        let n = 1usize << level;
        let h = 1.0 / n as f64;

        let mut extent: f64 = 0.0;
        for patch in &surface.patches {
            for (s, t) in CORNERS {
                extent = extent.max(patch.point(s, t).amax());
            }
        }
        let mut index = PointIndex { cell: 1e-9 * extent.max(1.0), map: HashMap::new() };
        let mut vertices = Vec::new();
        let mut elements = Vec::with_capacity(surface.patches.len() * n * n);
        let mut edges: Vec<Edge> = Vec::new();
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();

        for (pi, patch) in surface.patches.iter().enumerate() {
            let mut grid = vec![0usize; (n + 1) * (n + 1)];
            for b in 0..=n {
                for a in 0..=n {
                    let x = patch.point(a as f64 * h, b as f64 * h);
                    grid[b * (n + 1) + a] = index.find_or_insert(x, &mut vertices);
                }
            }
            for j in 0..n {
                for i in 0..n {
                    let vid = |a: usize, b: usize| grid[b * (n + 1) + a];
                    let verts = [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)];
                    let eid = elements.len();
                    let mut elem_edges = [0usize; 4];
                    let mut signs = [0.0; 4];
                    for k in 0..4 {
                        let (va, vb) = (verts[k], verts[(k + 1) % 4]);
                        let key = (va.min(vb), va.max(vb));
                        let id = *edge_ids.entry(key).or_insert_with(|| {
                            edges.push(Edge { vertices: [key.0, key.1], elements: Vec::new() });
                            edges.len() - 1
                        });
                        edges[id].elements.push((eid, k));
                        elem_edges[k] = id;
                        signs[k] = if va < vb { 1.0 } else { -1.0 };
                    }
                    let s0 = i as f64 * h;
                    let t0 = j as f64 * h;
                    let center = patch.point(s0 + 0.5 * h, t0 + 0.5 * h);
                    let mut radius: f64 = 0.0;
                    for (u, v) in [(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.0, 0.5), (1.0, 1.0), (0.5, 1.0), (0.0, 1.0), (0.0, 0.5)] {
                        radius = radius.max((patch.point(s0 + u * h, t0 + v * h) - center).norm());
                    }
                    elements.push(Element { patch: pi, i, j, vertices: verts, edges: elem_edges, edge_signs: signs, center, radius });
                }
            }
        }

        Self { surface, level, n, elements, vertices, edges }
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Largest element diameter bound.
    pub fn mesh_width(&self) -> f64 {
        self.elements.iter().map(|e| 2.0 * e.radius).fold(0.0, f64::max)
    }

    fn patch_coords(&self, element: usize, u: f64, v: f64) -> (&dyn ParametricPatch, f64, f64, f64) {
        let e = &self.elements[element];
        let h = 1.0 / self.n as f64;
        let patch = self.surface.patches[e.patch].as_ref();
        (patch, (e.i as f64 + u) * h, (e.j as f64 + v) * h, h)
    }

    pub fn point(&self, element: usize, u: f64, v: f64) -> Vec3 {
        let (patch, s, t, _) = self.patch_coords(element, u, v);
        patch.point(s, t)
    }

    /// First-order geometry at element-local coordinates `(u, v)`.
    pub fn frame(&self, element: usize, u: f64, v: f64) -> PointFrame {
        let (patch, s, t, h) = self.patch_coords(element, u, v);
        let (x, d1) = patch.tangents(s, t);
        let tangents = [d1[0] * h, d1[1] * h];
        let cross = tangents[0].cross(&tangents[1]);
        let jacobian = cross.norm();
        PointFrame { x, tangents, normal: cross / jacobian, jacobian }
    }

    /// Chart jet in element-local coordinates.
    pub fn local_jet(&self, element: usize, u: f64, v: f64) -> ChartJet {
        let (patch, s, t, h) = self.patch_coords(element, u, v);
        patch.jet(s, t).rescaled(h)
    }

    /// Exact differential geometry at element-local coordinates `(u, v)`.
    pub fn geometry_at(&self, element: usize, u: f64, v: f64) -> Result<SurfacePointData> {
        let (patch, s, t, h) = self.patch_coords(element, u, v);
        let err = || Error::Geometry { element, s, t };
        let jet = patch.jet(s, t).rescaled(h);
        let mut data = differential_geometry(&jet).ok_or_else(err)?;
        if !patch.has_third_derivatives() {
            // Central differences of H in chart coordinates.
            let step = 1e-5;
            let mean_at = |ss: f64, tt: f64| -> Result<f64> {
                let mut j = patch.jet(ss, tt);
                j.d3 = [Vec3::zeros(); 4];
                Ok(differential_geometry(&j).ok_or_else(err)?.mean_curvature)
            };
            let hs = (mean_at(s + step, t)? - mean_at(s - step, t)?) / (2.0 * step);
            let ht = (mean_at(s, t + step)? - mean_at(s, t - step)?) / (2.0 * step);
            data.grad_mean_curvature = surface_gradient(&data.tangents, hs * h, ht * h);
        }
        Ok(data)
    }
}

/// Differential geometry from a chart jet; `None` if the Jacobian is degenerate.
pub fn differential_geometry(jet: &ChartJet) -> Option<SurfacePointData> {
    let [a, b] = jet.d1;
    let cross = a.cross(&b);
    let jacobian = cross.norm();
    if !(jacobian > 1e-14 * a.norm() * b.norm()) {
        return None;
    }
    let n = cross / jacobian;
    let g = Matrix2::new(a.dot(&a), a.dot(&b), a.dot(&b), b.dot(&b));
    let ginv = g.try_inverse()?;
    let phi2 = |i: usize, j: usize| jet.d2[i + j];
    let phi3 = |i: usize, j: usize, k: usize| jet.d3[i + j + k];
    let tang = [a, b];

    let mut second = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            second[(i, j)] = -n.dot(&phi2(i, j));
        }
    }
    let shape = ginv * second;
    let mean = 0.5 * shape.trace();
    let gauss = second.determinant() / g.determinant();

    let dphi = Matrix3x2::from_columns(&[a, b]);
    let m = ginv * second * ginv;
    let weingarten = dphi * m * dphi.transpose();

    // ∂_k n = Σ_l (G⁻¹ II)_{lk} ∂_l Φ
    let dn = [a * shape[(0, 0)] + b * shape[(1, 0)], a * shape[(0, 1)] + b * shape[(1, 1)]];
    let mut dmean = Vector2::zeros();
    for k in 0..2 {
        let mut dg = Matrix2::zeros();
        let mut dsecond = Matrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                dg[(i, j)] = phi2(i, k).dot(&tang[j]) + tang[i].dot(&phi2(j, k));
                dsecond[(i, j)] = -dn[k].dot(&phi2(i, j)) - n.dot(&phi3(i, j, k));
            }
        }
        let dginv = -ginv * dg * ginv;
        dmean[k] = 0.5 * (dginv * second + ginv * dsecond).trace();
    }
    let grad_mean_curvature = surface_gradient(&tang, dmean[0], dmean[1]);

    Some(SurfacePointData {
        x: jet.x,
        tangents: tang,
        jacobian,
        normal: n,
        weingarten,
        mean_curvature: mean,
        gauss_curvature: gauss,
        grad_mean_curvature,
    })
}

type Matrix3x2 = nalgebra::Matrix3x2<f64>;

/// Deterministic quasi-uniform points on a sphere (Fibonacci lattice).
pub fn evaluation_sphere(count: usize, radius: f64) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / count as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vec3::new(rho * phi.cos(), rho * phi.sin(), z) * radius
        })
        .collect()
}
