//! Gauss rules on the unit square and regularizing rules for element pairs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{SurfaceMesh, CORNERS};

/// Gauss–Legendre nodes and weights on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[-1, 1]`.
    pub fn symmetric(n: usize) -> (Vec<f64>, Vec<f64>) {
        let r = Self::new(n);
        (r.nodes.iter().map(|x| 2.0 * x - 1.0).collect(), r.weights.iter().map(|w| 2.0 * w).collect())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss rule on `[0,1]²`.
#[derive(Clone, Debug)]
pub struct TensorRule {
    pub order: usize,
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TensorRule {
    pub fn new(order: usize) -> Self {
        let g = GaussRule::new(order);
        let mut nodes = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for (&y, &wy) in g.nodes.iter().zip(&g.weights) {
            for (&x, &wx) in g.nodes.iter().zip(&g.weights) {
                nodes.push([x, y]);
                weights.push(wx * wy);
            }
        }
        Self { order, nodes, weights }
    }

    /// Polynomial degree integrated exactly in each variable.
    pub fn exactness(&self) -> usize {
        2 * self.order - 1
    }
}

/// Quadrature orders (points per direction) and the near/far admissibility parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub singular_order: usize,
    pub near_order: usize,
    /// Orders for far pairs, used for distance ratios in `[eta, thresholds[0])`,
    /// `[thresholds[0], thresholds[1])`, ... and beyond the last threshold.
    pub far_orders: [usize; 4],
    pub far_thresholds: [f64; 3],
    pub eta: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { singular_order: 6, near_order: 6, far_orders: [5, 4, 4, 3], far_thresholds: [3.0, 6.0, 12.0], eta: 1.5 }
    }
}

impl QuadratureConfig {
    /// Same rule family with every order increased by `extra`.
    pub fn refined(&self, extra: usize) -> Self {
        let mut c = self.clone();
        c.singular_order += extra;
        c.near_order += extra;
        for o in &mut c.far_orders {
            *o += extra;
        }
        c
    }

    /// All orders multiplied by two.
    pub fn doubled(&self) -> Self {
        let mut c = self.clone();
        c.singular_order *= 2;
        c.near_order *= 2;
        for o in &mut c.far_orders {
            *o *= 2;
        }
        c
    }

    /// Tensor order used for a non-touching pair with the given distance ratio.
    pub fn order_for_ratio(&self, ratio: f64) -> usize {
        if ratio < self.eta {
            return self.near_order;
        }
        let band = self.far_thresholds.iter().filter(|&&t| ratio >= t).count();
        self.far_orders[band]
    }

    /// All tensor orders that may be requested.
    pub fn tensor_orders(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.far_orders.to_vec();
        v.push(self.near_order);
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Adjacency class of an element pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairClass {
    /// No shared vertex; tensor Gauss rule with the given order.
    Regular {
        order: usize,
    },
    Vertex,
    Edge,
    Coincident,
}

/// One quadrature node of a pair rule in element-local coordinates.
#[derive(Clone, Copy, Debug)]
pub struct PairPoint {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct PairRule {
    pub class: PairClass,
    pub points: Vec<PairPoint>,
}

/// Square symmetry `T(s) = c0 + s1 (c1 - c0) + s2 (c2 - c0)`.
#[derive(Clone, Copy, Debug)]
struct SquareMap {
    origin: [f64; 2],
    e1: [f64; 2],
    e2: [f64; 2],
}

impl SquareMap {
    const IDENTITY: SquareMap = SquareMap { origin: [0.0, 0.0], e1: [1.0, 0.0], e2: [0.0, 1.0] };

    /// Map with `T(0,0) = corner a` and `T(0,1) = corner b` (adjacent corners).
    fn from_corners(a: usize, b: usize) -> Self {
        let other = if b == (a + 1) % 4 { (a + 3) % 4 } else { (a + 1) % 4 };
        let c = |k: usize| [CORNERS[k].0, CORNERS[k].1];
        let (ca, cb, co) = (c(a), c(b), c(other));
        SquareMap { origin: ca, e1: [co[0] - ca[0], co[1] - ca[1]], e2: [cb[0] - ca[0], cb[1] - ca[1]] }
    }

    fn apply(&self, s: [f64; 2]) -> [f64; 2] {
        [self.origin[0] + s[0] * self.e1[0] + s[1] * self.e2[0], self.origin[1] + s[0] * self.e1[1] + s[1] * self.e2[1]]
    }
}

/// Coincident-pair transform: sub-domain `k ∈ 0..8`, variables in `[0,1]⁴`.
/// Returns `(x, y, jacobian)`.
pub fn coincident_map(k: usize, v: [f64; 4]) -> ([f64; 2], [f64; 2], f64) {
    let [rho, eta, xi1, xi2] = v;
    let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)][k / 2];
    let (z1, z2) = if k.is_multiple_of(2) { (rho, rho * eta) } else { (rho * eta, rho) };
    let (l1, l2) = (1.0 - z1, 1.0 - z2);
    let (d1, d2) = (signs.0 * z1, signs.1 * z2);
    let x = [(-d1).max(0.0) + l1 * xi1, (-d2).max(0.0) + l2 * xi2];
    let y = [x[0] + d1, x[1] + d2];
    (x, y, rho * l1 * l2)
}

/// Edge-adjacent transform with the shared edge at `x1 = y1 = 0`, parameterized by
/// `x2 = y2`. Sub-domain `k ∈ 0..6`.
pub fn edge_map(k: usize, v: [f64; 4]) -> ([f64; 2], [f64; 2], f64) {
    let [rho, e1, e2, xi] = v;
    let sign = if k / 3 == 0 { 1.0 } else { -1.0 };
    let (a, b, z) = match k % 3 {
        0 => (rho, rho * e1, rho * e2),
        1 => (rho * e1, rho, rho * e2),
        _ => (rho * e1, rho * e2, rho),
    };
    let d = sign * z;
    let len = 1.0 - z;
    let x2 = (-d).max(0.0) + len * xi;
    ([a, x2], [b, x2 + d], rho * rho * len)
}

/// Vertex-adjacent transform with the shared vertex at the origin of both squares.
/// Sub-domain `k ∈ 0..4`.
pub fn vertex_map(k: usize, v: [f64; 4]) -> ([f64; 2], [f64; 2], f64) {
    let [rho, e1, e2, e3] = v;
    let mut w = [rho * e1, rho * e2, rho * e3];
    let mut c = [0.0; 4];
    c[k] = rho;
    let mut it = w.iter_mut();
    for (i, ci) in c.iter_mut().enumerate() {
        if i != k {
            *ci = *it.next().unwrap();
        }
    }
    ([c[0], c[1]], [c[2], c[3]], rho * rho * rho)
}

/// Maps a point of the unit hypercube to the `k`-th subdomain: `(x, y, jacobian)`.
type SubdomainMap = fn(usize, [f64; 4]) -> ([f64; 2], [f64; 2], f64);

fn canonical_rule(order: usize, parts: usize, map: SubdomainMap) -> Vec<PairPoint> {
    let g = GaussRule::new(order);
    let mut pts = Vec::with_capacity(parts * order.pow(4));
    for k in 0..parts {
        for (a, wa) in g.nodes.iter().zip(&g.weights) {
            for (b, wb) in g.nodes.iter().zip(&g.weights) {
                for (c, wc) in g.nodes.iter().zip(&g.weights) {
                    for (d, wd) in g.nodes.iter().zip(&g.weights) {
                        let (x, y, jac) = map(k, [*a, *b, *c, *d]);
                        pts.push(PairPoint { x, y, weight: wa * wb * wc * wd * jac });
                    }
                }
            }
        }
    }
    pts
}

/// Precomputed rules for all pair classes of one configuration.
#[derive(Debug)]
pub struct PairQuadrature {
    pub config: QuadratureConfig,
    coincident: Vec<PairPoint>,
    edge: Vec<PairPoint>,
    vertex: Vec<PairPoint>,
    tensor: Vec<Option<Arc<TensorRule>>>,
}

impl PairQuadrature {
    pub fn new(config: QuadratureConfig) -> Self {
        let q = config.singular_order;
        let max_order = config.tensor_orders().into_iter().max().unwrap_or(1);
        let mut tensor = vec![None; max_order + 1];
        for o in config.tensor_orders() {
            tensor[o] = Some(Arc::new(TensorRule::new(o)));
        }
        Self {
            coincident: canonical_rule(q, 8, coincident_map),
            edge: canonical_rule(q, 6, edge_map),
            vertex: canonical_rule(q, 4, vertex_map),
            tensor,
            config,
        }
    }

    pub fn tensor_rule(&self, order: usize) -> &TensorRule {
        self.tensor[order].as_deref().expect("tensor order not configured")
    }

    /// Adjacency class of elements `a` and `b`.
    pub fn classify(&self, mesh: &SurfaceMesh, a: usize, b: usize) -> PairClass {
        if a == b {
            return PairClass::Coincident;
        }
        let ea = &mesh.elements[a];
        let eb = &mesh.elements[b];
        let shared = ea.vertices.iter().filter(|v| eb.vertices.contains(v)).count();
        match shared {
            0 => PairClass::Regular { order: self.config.order_for_ratio(distance_ratio(mesh, a, b)) },
            1 => PairClass::Vertex,
            _ => PairClass::Edge,
        }
    }

    /// Quadrature nodes in element-local coordinates for the pair `(a, b)`.
    pub fn rule_for_pair(&self, mesh: &SurfaceMesh, a: usize, b: usize) -> PairRule {
        let class = self.classify(mesh, a, b);
        let points = match class {
            PairClass::Regular { order } => {
                let t = self.tensor_rule(order);
                let mut pts = Vec::with_capacity(t.weights.len().pow(2));
                for (x, wx) in t.nodes.iter().zip(&t.weights) {
                    for (y, wy) in t.nodes.iter().zip(&t.weights) {
                        pts.push(PairPoint { x: *x, y: *y, weight: wx * wy });
                    }
                }
                pts
            }
            _ => self.singular_points(mesh, a, b, class),
        };
        PairRule { class, points }
    }

    /// Singular-class nodes mapped from canonical position to the elements' local coordinates.
    pub fn singular_points(&self, mesh: &SurfaceMesh, a: usize, b: usize, class: PairClass) -> Vec<PairPoint> {
        let va = &mesh.elements[a].vertices;
        let vb = &mesh.elements[b].vertices;
        let local = |verts: &[usize; 4], g: usize| verts.iter().position(|&v| v == g).unwrap();
        let (canon, ma, mb) = match class {
            PairClass::Coincident => (&self.coincident, SquareMap::IDENTITY, SquareMap::IDENTITY),
            PairClass::Edge => {
                let shared: Vec<usize> = va.iter().copied().filter(|v| vb.contains(v)).collect();
                let (g0, g1) = (shared[0], shared[1]);
                (&self.edge, SquareMap::from_corners(local(va, g0), local(va, g1)), SquareMap::from_corners(local(vb, g0), local(vb, g1)))
            }
            PairClass::Vertex => {
                let g = *va.iter().find(|v| vb.contains(v)).unwrap();
                let (ia, ib) = (local(va, g), local(vb, g));
                (&self.vertex, SquareMap::from_corners(ia, (ia + 1) % 4), SquareMap::from_corners(ib, (ib + 1) % 4))
            }
            PairClass::Regular { .. } => unreachable!("regular pairs use tensor rules"),
        };
        canon.iter().map(|p| PairPoint { x: ma.apply(p.x), y: mb.apply(p.y), weight: p.weight }).collect()
    }
}

/// Gap between bounding balls of two elements relative to the larger element diameter.
pub fn distance_ratio(mesh: &SurfaceMesh, a: usize, b: usize) -> f64 {
    let ea = &mesh.elements[a];
    let eb = &mesh.elements[b];
    let gap = ((ea.center - eb.center).norm() - ea.radius - eb.radius).max(0.0);
    gap / (2.0 * ea.radius.max(eb.radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_exactness() {
        for n in 1..=20 {
            let g = GaussRule::new(n);
            assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for p in 0..2 * n {
                let q: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn tensor_rule_weights() {
        let t = TensorRule::new(5);
        assert_eq!(t.nodes.len(), 25);
        assert!(t.weights.iter().all(|&w| w > 0.0));
        assert!((t.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(t.exactness(), 9);
    }

    #[test]
    fn singular_rules_integrate_constants() {
        for (parts, map) in [(8, coincident_map as fn(_, _) -> _), (6, edge_map), (4, vertex_map)] {
            let pts = canonical_rule(4, parts, map);
            let total: f64 = pts.iter().map(|p| p.weight).sum();
            assert!((total - 1.0).abs() < 1e-13, "{total}");
        }
    }

    #[test]
    fn edge_map_lands_on_shared_edge_convention() {
        let pts = canonical_rule(4, 6, edge_map);
        let v: f64 = pts.iter().map(|p| p.weight * p.x[0] * p.y[1] * p.y[1]).sum();
        assert!((v - 1.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn order_bands() {
        let c = QuadratureConfig::default();
        assert_eq!(c.order_for_ratio(0.5), 6);
        assert_eq!(c.order_for_ratio(2.0), 5);
        assert_eq!(c.order_for_ratio(4.0), 4);
        assert_eq!(c.order_for_ratio(7.0), 4);
        assert_eq!(c.order_for_ratio(100.0), 3);
        assert_eq!(c.doubled().order_for_ratio(100.0), 6);
    }
}
