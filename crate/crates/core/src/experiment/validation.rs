//! Self-contained validation suite built from independent oracles.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use faer::Mat;
use serde::Serialize;

use crate::bem::{cache, Assembler, PotentialEvaluator};
use crate::c64;
use crate::error::{Error, Result};
use crate::geometry::{evaluation_sphere, make_sphere, SurfaceMesh, Vec3, CORNERS};
use crate::linalg::{kron, pivoted_cholesky, tensor_solve, vec_of, CorrelationKernel, DenseLu, SpdFactor};
use crate::mie::{linf_distance, mie_radius_derivatives, mie_random_radius_mean, MieSolution};
use crate::quadrature::TensorRule;
use crate::space::{cross_real, dot_real, CVec3, Discretization};
use crate::uq::{
    corrected_mean_field, deterministic_second_datum, first_order_datum, solve_correction, solve_exterior, solve_reference,
    CorrelationMatrix, CorrelationPipelineState, Perturbation,
};

use super::{setup, ExperimentConfig};

#[derive(Clone, Debug, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub level: u32,
    pub kappa: f64,
    pub passed: bool,
    pub wall_time_s: f64,
    pub checks: Vec<ValidationCheck>,
}

struct Suite<'a> {
    checks: Vec<ValidationCheck>,
    log: &'a (dyn Fn(&str) + Sync),
}

impl Suite<'_> {
    /// Records `value ≤ tolerance`.
    fn record(&mut self, name: &str, value: f64, tolerance: f64, detail: impl Into<String>) {
        let passed = value <= tolerance;
        let detail = detail.into();
        (self.log)(&format!("{} {name}: {value:.3e} (tolerance {tolerance:.1e}) {detail}", if passed { "PASS" } else { "FAIL" }));
        self.checks.push(ValidationCheck { name: name.into(), passed, value, tolerance, detail });
    }

    fn record_result(&mut self, name: &str, tolerance: f64, f: impl FnOnce() -> Result<(f64, String)>) {
        match f() {
            Ok((v, d)) => self.record(name, v, tolerance, d),
            Err(e) => self.record(name, f64::INFINITY, tolerance, format!("error: {e}")),
        }
    }
}

fn max_abs(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_diff(a: &[c64], b: &[c64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn linf_norm(v: &[CVec3]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Deterministic pseudo-random values in `[-1, 1]`.
fn pseudo_random(n: usize, seed: f64) -> Vec<f64> {
    (0..n).map(|i| ((i as f64 + 1.0) * seed).sin()).collect()
}

fn geometry_suite(s: &mut Suite<'_>, disc: &Discretization) -> Result<()> {
    let rule = TensorRule::new(12);
    let area: f64 = (0..disc.mesh.num_elements())
        .map(|e| rule.nodes.iter().zip(&rule.weights).map(|(uv, w)| w * disc.mesh.frame(e, uv[0], uv[1]).jacobian).sum::<f64>())
        .sum();
    s.record("sphere_area", (area - 4.0 * std::f64::consts::PI).abs(), 1e-10, format!("area {area:.14}"));

    let geo = disc.geometry_at_points()?;
    let mut worst: f64 = 0.0;
    for g in &geo {
        let p = nalgebra::Matrix3::identity() - g.normal * g.normal.transpose();
        worst = worst
            .max((g.mean_curvature - 1.0).abs())
            .max((g.gauss_curvature - 1.0).abs())
            .max((g.weingarten - p).abs().max())
            .max(g.grad_mean_curvature.norm());
    }
    s.record("sphere_curvature", worst, 1e-8, "H = K = 1, Weingarten map = tangential projector, ∇H = 0");

    let mesh = &disc.mesh;
    let mut jump: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for edge in &mesh.edges {
        let [(ea, ka), (eb, kb)] = [edge.elements[0], edge.elements[1]];
        for t in [0.2, 0.5, 0.9] {
            let on_edge = |k: usize, t: f64| {
                let (a, b) = (CORNERS[k], CORNERS[(k + 1) % 4]);
                (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
            };
            let same = mesh.elements[ea].vertices[ka] == mesh.elements[eb].vertices[kb];
            let (ua, va) = on_edge(ka, t);
            let (ub, vb) = on_edge(kb, if same { t } else { 1.0 - t });
            let fa = mesh.frame(ea, ua, va);
            let fb = mesh.frame(eb, ub, vb);
            gap = gap.max((fa.x - fb.x).norm());
            let tangent = match ka {
                0 => fa.tangents[0],
                1 => fa.tangents[1],
                2 => -fa.tangents[0],
                _ => -fa.tangents[1],
            };
            let m = tangent.cross(&fa.normal).normalize();
            let pa = disc.vector.eval_basis_at(ea, &fa, ua, va)[ka].value.dot(&m);
            let pb = disc.vector.eval_basis_at(eb, &fb, ub, vb)[kb].value.dot(&m);
            jump = jump.max((pa - pb).abs());
        }
    }
    s.record("normal_continuity", jump, 1e-12, format!("max point mismatch {gap:.1e}"));

    let q: Vec<c64> = pseudo_random(disc.scalar.dim(), 0.913).into_iter().map(|x| c64::new(x, 0.5 * x)).collect();
    let v: Vec<c64> = pseudo_random(disc.vector.dim(), 1.717).into_iter().map(|x| c64::new(x, -x)).collect();
    let qv = disc.scalar_at_points(&q);
    let vv = disc.vector_at_points(&v);
    let mut lhs = c64::new(0.0, 0.0);
    let mut rhs = c64::new(0.0, 0.0);
    for (p, ((qx, dq), (vx, dv))) in disc.quad.points.iter().zip(qv.iter().zip(&vv)) {
        let bcurl = cross_real(dq, &p.normal);
        lhs += cross_real(&bcurl, &p.normal).dot(vx) * p.weight;
        rhs += qx * dv * p.weight;
    }
    s.record("bcurl_duality", (lhs - rhs).norm() / rhs.norm(), 1e-10, "⟨bcurl q, v⟩_× = ⟨q, div v⟩_0");
    Ok(())
}

fn linalg_checks(s: &mut Suite<'_>, disc: &Discretization) -> Result<()> {
    let n = 8;
    let m = 6;
    let r1 = pseudo_random(n * n, 0.37);
    let smat = Mat::from_fn(n, n, |i, j| {
        c64::new(r1[i * n + j], 0.3 * r1[j * n + i]) + if i == j { c64::new(4.0, 0.0) } else { c64::new(0.0, 0.0) }
    });
    let r2 = pseudo_random(m * m, 0.71);
    let mut trip = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let v = 0.1 * (r2[i * m + j] + r2[j * m + i]) + if i == j { 3.0 } else { 0.0 };
            trip.push((i, j, v));
        }
    }
    let mmat = crate::linalg::CsrMatrix::from_triplets(m, m, trip);
    let y: Vec<Vec<c64>> = (0..2).map(|k| pseudo_random(n, 1.1 + k as f64).into_iter().map(|x| c64::new(x, x * x)).collect()).collect();
    let l: Vec<Vec<f64>> = (0..2).map(|k| pseudo_random(m, 2.3 + k as f64)).collect();
    let slu = DenseLu::factor(smat.clone())?;
    let mf = SpdFactor::new(&mmat)?;
    let a = tensor_solve(&slu, &mf, &y, &l)?.to_dense();
    let rhs = Mat::from_fn(n, m, |i, j| (0..2).map(|k| y[k][i] * l[k][j]).sum::<c64>());
    let md = mmat.to_dense();
    let lhs = vec_of(&(&kron(&md, &smat) * Mat::from_fn(n * m, 1, |i, _| vec_of(&a)[i])));
    let diff = max_diff(&lhs, &vec_of(&rhs)) / max_abs(&vec_of(&rhs));
    s.record("tensor_solve_kronecker", diff, 1e-12, "(M ⊗ S) vec(Ã) = vec(Y Lᵀ)");

    let constant = CorrelationKernel::Constant(1.0 / 3.0);
    let oracle = CorrelationMatrix::new(disc, &constant);
    let f = pivoted_cholesky(oracle.diagonal(), |j| oracle.column(j), 1e-6)?;
    s.record("cholesky_constant_rank", f.rank() as f64, 1.0, format!("rank {}", f.rank()));

    let se = CorrelationKernel::SquaredExponential { variance: 1.0, length: 0.5 };
    let oracle = CorrelationMatrix::new(disc, &se);
    let diag = oracle.diagonal();
    let trace: f64 = diag.iter().sum();
    let f = pivoted_cholesky(diag, |j| oracle.column(j), 1e-6)?;
    s.record("cholesky_trace_residual", f.trace_residual / trace, 1e-6, format!("rank {}", f.rank()));
    Ok(())
}

fn mie_checks(s: &mut Suite<'_>, config: &ExperimentConfig, kappa: f64) -> Result<()> {
    let wave = config.wave.wave(kappa)?;
    let mie = MieSolution::new(1.0, wave)?;
    let mut worst: f64 = 0.0;
    for x in evaluation_sphere(50, 1.0) {
        let total = mie.value(&x)?.field + wave.field(&x);
        worst = worst.max(cross_real(&total, &x).norm());
    }
    s.record("mie_tangential_trace", worst, 1e-10, format!("truncation order {}", mie.order));
    let pts = config.evaluation_points();
    let a = mie_random_radius_mean(0.3, wave, &pts, 16)?;
    let b = mie_random_radius_mean(0.3, wave, &pts, 24)?;
    s.record("mie_mean_quadrature", linf_distance(&a, &b), 1e-10, "16 vs 24 Gauss points at ε = 0.3");
    Ok(())
}

/// Sphere area, curvature, normal continuity and duality checks on `disc`.
pub fn geometry_checks(disc: &Discretization) -> Result<Vec<ValidationCheck>> {
    let mut s = Suite { checks: Vec::new(), log: &|_| {} };
    geometry_suite(&mut s, disc)?;
    Ok(s.checks)
}

/// Runs every check at `level` (at most 3 is intended) and wavenumber `kappa`.
pub fn run_validation(
    config: &ExperimentConfig,
    level: u32,
    kappa: f64,
    cache_dir: Option<&Path>,
    log: &(dyn Fn(&str) + Sync),
) -> Result<ValidationReport> {
    config.validate()?;
    let start = Instant::now();
    let mut s = Suite { checks: Vec::new(), log };
    let scale = 10f64.powi(3 - level.min(3) as i32);

    let mesh = Arc::new(SurfaceMesh::new(Arc::new(make_sphere(1.0, config.warp)), level));
    let disc = Arc::new(Discretization::new(mesh)?);
    geometry_suite(&mut s, &disc)?;
    linalg_checks(&mut s, &disc)?;
    mie_checks(&mut s, config, kappa)?;

    let coarse = Arc::new(Discretization::new(Arc::new(SurfaceMesh::new(Arc::new(make_sphere(1.0, config.warp)), 2)))?);
    s.record_result("quadrature_self_convergence", 1e-8, || {
        let (s0, c0) = Assembler::new(coarse.clone(), kappa, config.quadrature.clone()).assemble_both();
        let (s1, c1) = Assembler::new(coarse.clone(), kappa, config.quadrature.doubled()).assemble_both();
        Ok(((&s1 - &s0).norm_max().max((&c1 - &c0).norm_max()), "level 2, all orders doubled".into()))
    });
    s.record_result("cache_corruption_detected", 0.0, || {
        let dir = std::env::temp_dir().join(format!("maxwell-uq-validate-{}", std::process::id()));
        std::fs::create_dir_all(&dir)?;
        let key = cache::CacheKey::new(kappa, 0, &config.quadrature);
        let path = key.path_in(&dir);
        let m = Mat::from_fn(4, 4, |i, j| c64::new(i as f64, j as f64));
        cache::save(&path, &key, &[&m])?;
        let mut bytes = std::fs::read(&path)?;
        let k = bytes.len() / 2;
        bytes[k] ^= 0x5a;
        std::fs::write(&path, bytes)?;
        let outcome = cache::load(&path, &key);
        let _ = std::fs::remove_dir_all(&dir);
        match outcome {
            Err(Error::Cache(msg)) => Ok((0.0, msg)),
            Err(e) => Ok((1.0, format!("unexpected error: {e}"))),
            Ok(_) => Ok((1.0, "corrupted file was accepted".into())),
        }
    });

    let ops = setup(config, kappa, level, cache_dir)?;
    let wave = config.wave.wave(kappa)?;
    let pts = config.evaluation_points();
    let reference = solve_reference(&ops, &wave)?;
    let pe = PotentialEvaluator::new(disc.clone(), kappa);
    let e0 = pe.evaluate(Some(&reference.neumann.coefficients), None, &pts).values;
    let (exact, d1, d2) = mie_radius_derivatives(1.0, wave, &pts, 1e-4, 1e-3)?;
    s.record(
        "reference_vs_mie",
        linf_distance(&e0, &exact),
        2e-3 * scale,
        format!("{} unknowns, condition ≈ {:.2e}", ops.dim(), ops.cond_estimate()),
    );

    let far_field = |r: f64| {
        let far: Vec<Vec3> = pts.iter().map(|x| x.normalize() * r).collect();
        let e = pe.evaluate(Some(&reference.neumann.coefficients), None, &far).values;
        e.iter().map(|v| v.norm() * r).collect::<Vec<f64>>()
    };
    let (f32, f64_) = (far_field(32.0), far_field(64.0));
    let spread = f32.iter().zip(&f64_).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / f64_.iter().cloned().fold(0.0, f64::max);
    s.record("silver_muller_decay", spread, 0.05, "relative change of r|E(r x̂)| between r = 32 and r = 64");

    let mie = MieSolution::new(1.0, wave)?;
    let projected_neumann = disc.l2_project_vector(|p| -cross_real(&mie.value(&p.x).map(|v| v.curl).unwrap_or_default(), &p.normal));
    let tested_dirichlet = disc.vector_load(|p| {
        let e = mie.value(&p.x).map(|v| v.field).unwrap_or_default();
        e - p.normal.map(|x| c64::new(x, 0.0)) * dot_real(&e, &p.normal)
    });
    let d2n = ops.neumann_from_tested(std::slice::from_ref(&tested_dirichlet)).remove(0);
    let m0 = |v: &[c64]| -> f64 {
        let mv = disc.mass_vector.mul_vec(v);
        v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum::<f64>().sqrt()
    };
    let diff: Vec<c64> = d2n.iter().zip(&projected_neumann.coefficients).map(|(a, b)| a - b).collect();
    s.record(
        "calderon_d2n",
        m0(&diff) / m0(&projected_neumann.coefficients),
        0.05 * scale,
        "relative M_𝟎-norm distance of the discrete D2N map applied to Mie traces",
    );

    let ones = vec![1.0; disc.scalar.dim()];
    let g1 = first_order_datum(&disc, &reference.neumann, &reference.normal, Perturbation::Discrete(&ones));
    let de = solve_exterior(&ops, &[g1]).remove(0).evaluate(&ops, &pts);
    s.record("first_derivative_vs_mie", linf_distance(&de, &d1) / linf_norm(&d1), 0.05 * scale, "relative ℓ∞, r ≡ 1");
    let datum = deterministic_second_datum(&ops, &reference, &ones)?;
    let w = solve_correction(&ops, &datum).evaluate(&ops, &pts);
    s.record("second_derivative_vs_mie", linf_distance(&w, &d2) / linf_norm(&d2), 0.05 * scale, "relative ℓ∞, r ≡ 1");

    let mut state = CorrelationPipelineState::new(&ops, reference.clone())?;
    state.build_b_factor(&ops, &CorrelationKernel::Constant(1.0), config.cholesky_tolerance)?;
    state.build_a_factor(&ops)?;
    let mean_one = state.mean_second_datum(&ops)?;
    s.record(
        "pipeline_rank_one_consistency",
        max_diff(&mean_one.tested, &datum.tested) / max_abs(&datum.tested),
        1e-10,
        format!("rank {}", state.rank()),
    );
    state.build_b_factor(&ops, &CorrelationKernel::Constant(2.0), config.cholesky_tolerance)?;
    state.build_a_factor(&ops)?;
    let mean_two = state.mean_second_datum(&ops)?;
    let doubled: Vec<c64> = mean_one.tested.iter().map(|z| z * 2.0).collect();
    s.record("datum_linearity", max_diff(&mean_two.tested, &doubled) / max_abs(&doubled), 1e-12, "kernel × 2");
    state.build_b_factor(&ops, &CorrelationKernel::Zero, config.cholesky_tolerance)?;
    state.build_a_factor(&ops)?;
    let zero = state.mean_second_datum(&ops)?;
    s.record("zero_kernel_datum", max_abs(&zero.tested), 0.0, "Cor[r] = 0");

    state.build_b_factor(&ops, &config.kernel.kernel(), config.cholesky_tolerance)?;
    state.build_a_factor(&ops)?;
    let wm = solve_correction(&ops, &state.mean_second_datum(&ops)?).evaluate(&ops, &pts);
    let mean = mie_random_radius_mean(0.3, wave, &pts, config.mie_quadrature)?;
    let err2 = linf_distance(&e0, &mean);
    let err4 = linf_distance(&corrected_mean_field(&e0, &wm, 0.3), &mean);
    s.record("order4_improves_order2", err4 * 3.0 / err2, 1.0, format!("ε = 0.3: order 2 {err2:.3e}, order 4 {err4:.3e}"));

    let passed = s.checks.iter().all(|c| c.passed);
    Ok(ValidationReport { level, kappa, passed, wall_time_s: start.elapsed().as_secs_f64(), checks: s.checks })
}
