//! Acceptance criteria, one test per criterion, each printing a single PASS/FAIL line.
//!
//! Criteria 2 and 3 run at level 4 by default. Set `MAXWELL_UQ_LEVEL5=1` to run them on
//! the level-5 mesh as well (about 12k unknowns, several hours on one core). Operator
//! matrices are cached in `MAXWELL_UQ_CACHE` when it is set.

use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use faer::Mat;
use nalgebra::DMatrix;
use rand::{rngs::StdRng, Rng, SeedableRng};

use maxwell_uq::bem::{OperatorSet, PotentialEvaluator};
use maxwell_uq::c64;
use maxwell_uq::experiment::{geometry_checks, log_slope, setup, ExperimentConfig};
use maxwell_uq::geometry::{make_unit_sphere, SurfaceMesh, Vec3};
use maxwell_uq::linalg::{dense_solve, kron, pivoted_cholesky, tensor_solve, vec_of, CorrelationKernel, CsrMatrix, DenseLu, SpdFactor};
use maxwell_uq::mie::{linf_distance, mie_radius_derivatives, mie_random_radius_mean, mie_scattered_field};
use maxwell_uq::space::{CVec3, Discretization};
use maxwell_uq::uq::{
    corrected_mean_field, deterministic_second_datum, first_order_datum, solve_correction, solve_exterior, solve_reference,
    CorrelationMatrix, CorrelationPipelineState, Perturbation, ReferenceSolution,
};

const KAPPA: f64 = 2.0;
const AMPLITUDES: [f64; 3] = [0.075, 0.15, 0.3];
/// [PAPER] uncorrected mean-field errors at level 5, κ = 2.
const PUBLISHED_ORDER2: [f64; 3] = [6.04e-3, 2.33e-2, 8.45e-2];
/// [PAPER] corrected mean-field errors at level 5, κ = 2.
const PUBLISHED_ORDER4: [f64; 3] = [1.0e-4, 1.35e-3, 1.76e-2];

fn line(id: u32, title: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[acceptance] criterion {id} {status}: {title}: {detail}");
}

fn skip(id: u32, title: &str, detail: &str) {
    let _ = writeln!(std::io::stderr(), "[acceptance] criterion {id} SKIP: {title}: {detail}");
}

fn cache_dir() -> Option<PathBuf> {
    maxwell_uq::experiment::cache_dir_from_env()
}

struct Cell {
    ops: OperatorSet,
    reference: ReferenceSolution,
    points: Vec<Vec3>,
    e0: Vec<CVec3>,
    correction: Vec<CVec3>,
    reference_seconds: f64,
    total_seconds: f64,
}

fn build_cell(level: u32) -> Cell {
    let config = ExperimentConfig::default();
    let start = Instant::now();
    let ops = setup(&config, KAPPA, level, cache_dir().as_deref()).unwrap();
    let wave = config.wave.wave(KAPPA).unwrap();
    let points = config.evaluation_points();
    let reference = solve_reference(&ops, &wave).unwrap();
    let e0 = PotentialEvaluator::new(ops.disc.clone(), KAPPA).evaluate(Some(&reference.neumann.coefficients), None, &points).values;
    let reference_seconds = start.elapsed().as_secs_f64();
    let mut state = CorrelationPipelineState::new(&ops, reference.clone()).unwrap();
    state.build_b_factor(&ops, &config.kernel.kernel(), config.cholesky_tolerance).unwrap();
    state.build_a_factor(&ops).unwrap();
    let correction = solve_correction(&ops, &state.mean_second_datum(&ops).unwrap()).evaluate(&ops, &points);
    Cell { ops, reference, points, e0, correction, reference_seconds, total_seconds: start.elapsed().as_secs_f64() }
}

fn level4() -> &'static Cell {
    static CELL: OnceLock<Cell> = OnceLock::new();
    CELL.get_or_init(|| build_cell(4))
}

fn level5() -> &'static Cell {
    static CELL: OnceLock<Cell> = OnceLock::new();
    CELL.get_or_init(|| build_cell(5))
}

fn level5_enabled() -> bool {
    std::env::var("MAXWELL_UQ_LEVEL5").is_ok_and(|v| v == "1")
}

/// Order-2 and order-4 errors against the Mie mean at the three amplitudes and the slopes
/// over the default ε grid restricted to `[0.075, 0.3]`.
fn asymptotics(cell: &Cell) -> ([f64; 3], [f64; 3], f64, f64) {
    let config = ExperimentConfig::default();
    let wave = config.wave.wave(KAPPA).unwrap();
    let grid: Vec<f64> = config.epsilons.iter().copied().filter(|e| *e >= 0.075 * (1.0 - 1e-9)).collect();
    let mut e2 = Vec::new();
    let mut e4 = Vec::new();
    for &eps in &grid {
        let mean = mie_random_radius_mean(eps, wave, &cell.points, config.mie_quadrature).unwrap();
        e2.push(linf_distance(&cell.e0, &mean));
        e4.push(linf_distance(&corrected_mean_field(&cell.e0, &cell.correction, eps), &mean));
    }
    let at = |errs: &[f64]| AMPLITUDES.map(|a| errs[grid.iter().position(|e| (e - a).abs() < 1e-9).unwrap()]);
    let slope = |errs: &[f64]| log_slope(&grid.iter().zip(errs).map(|(e, v)| (e.ln(), v.ln())).collect::<Vec<_>>()).unwrap();
    (at(&e2), at(&e4), slope(&e2), slope(&e4))
}

fn within_factor(values: &[f64; 3], target: &[f64; 3], factor: f64) -> bool {
    values.iter().zip(target).all(|(v, p)| *v <= factor * p && *v >= p / factor)
}

fn fmt3(v: &[f64; 3]) -> String {
    format!("[{:.3e}, {:.3e}, {:.3e}]", v[0], v[1], v[2])
}

fn order2_check(level: u32, cell: &Cell) -> bool {
    let (e2, _, s2, _) = asymptotics(cell);
    let pass = within_factor(&e2, &PUBLISHED_ORDER2, 3.0) && (s2 - 2.0).abs() <= 0.3;
    line(
        2,
        &format!("order-2 asymptotics, level {level}"),
        pass,
        &format!("errors {} vs published {} (factor 3), slope {s2:.3} (2 ± 0.3)", fmt3(&e2), fmt3(&PUBLISHED_ORDER2)),
    );
    pass
}

fn order4_check(level: u32, cell: &Cell) -> bool {
    let (e2, e4, _, s4) = asymptotics(cell);
    let ratio = e2[2] / e4[2];
    let slope_ok = (s4 - 4.0).abs() <= 0.5;
    let pass = within_factor(&e4, &PUBLISHED_ORDER4, 3.0) && ratio >= 3.0 && (slope_ok || level < 5);
    line(
        3,
        &format!("order-4 asymptotics, level {level}"),
        pass,
        &format!(
            "errors {} vs published {} (factor 3), slope {s4:.3} (4 ± 0.5{}), improvement at ε = 0.3 {ratio:.2} (≥ 3), pipeline {:.0} s",
            fmt3(&e4),
            fmt3(&PUBLISHED_ORDER4),
            if level < 5 { ", asserted on the level-5 mesh" } else { "" },
            cell.total_seconds
        ),
    );
    pass
}

#[test]
fn criterion_1_reference_accuracy() {
    let cell = level4();
    let exact = mie_scattered_field(1.0, ExperimentConfig::default().wave.wave(KAPPA).unwrap(), &cell.points).unwrap();
    let err = linf_distance(&cell.e0, &exact);
    let pass = err <= 2e-4 && cell.reference_seconds <= 900.0;
    line(
        1,
        "reference solver accuracy, level 4",
        pass,
        &format!(
            "ℓ∞ error {err:.3e} (≤ 2e-4), {} unknowns, {:.0} s{}",
            cell.ops.dim(),
            cell.reference_seconds,
            if cell.ops.from_cache { " (operators from cache)" } else { "" }
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_order2_asymptotics() {
    let mut pass = order2_check(4, level4());
    if level5_enabled() {
        pass &= order2_check(5, level5());
    } else {
        skip(2, "order-2 asymptotics, level 5", "set MAXWELL_UQ_LEVEL5=1");
    }
    assert!(pass);
}

#[test]
fn criterion_3_order4_asymptotics() {
    let cell = level4();
    let mut pass = order4_check(4, cell);
    pass &= cell.total_seconds <= 1200.0;
    if level5_enabled() {
        pass &= order4_check(5, level5());
    } else {
        skip(3, "order-4 asymptotics, level 5", "set MAXWELL_UQ_LEVEL5=1");
    }
    assert!(pass);
}

#[test]
fn criterion_4_shape_derivatives() {
    let cell = level4();
    let ops = &cell.ops;
    let wave = ExperimentConfig::default().wave.wave(KAPPA).unwrap();
    // [DERIVED] central differences of the Mie field in the sphere radius
    let (_, d1, d2) = mie_radius_derivatives(1.0, wave, &cell.points, 1e-4, 1e-3).unwrap();
    let ones = vec![1.0; ops.disc.scalar.dim()];
    let g1 = first_order_datum(&ops.disc, &cell.reference.neumann, &cell.reference.normal, Perturbation::Discrete(&ones));
    let de = solve_exterior(ops, &[g1]).remove(0).evaluate(ops, &cell.points);
    let datum = deterministic_second_datum(ops, &cell.reference, &ones).unwrap();
    let dde = solve_correction(ops, &datum).evaluate(ops, &cell.points);
    let (err1, err2) = (linf_distance(&de, &d1), linf_distance(&dde, &d2));
    let pass = err1 <= 1e-3 && err2 <= 5e-3;
    line(
        4,
        "shape derivatives vs Mie radius differences, level 4",
        pass,
        &format!("first {err1:.3e} (≤ 1e-3), second {err2:.3e} (≤ 5e-3)"),
    );
    assert!(pass);
}

fn random_cmat(rng: &mut StdRng, r: usize, c: usize) -> Mat<c64> {
    Mat::from_fn(r, c, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn max_abs(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn criterion_5_low_rank_machinery() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut kron_err: f64 = 0.0;
    let mut solve_err: f64 = 0.0;
    for _ in 0..20 {
        let (m, n, p, q) = (rng.gen_range(1..6), rng.gen_range(1..6), rng.gen_range(1..6), rng.gen_range(1..6));
        let a = random_cmat(&mut rng, m, n);
        let b = random_cmat(&mut rng, p, q);
        let x = random_cmat(&mut rng, q, n);
        let xv = vec_of(&x);
        let lhs = &kron(&a, &b) * Mat::from_fn(n * q, 1, |i, _| xv[i]);
        let rhs = vec_of(&(&b * &x * a.transpose()));
        let diff = (0..m * p).map(|i| (lhs[(i, 0)] - rhs[i]).norm()).fold(0.0, f64::max);
        kron_err = kron_err.max(diff / max_abs(&rhs).max(1.0));

        let (ns, nm, k) = (rng.gen_range(2..8), rng.gen_range(2..7), rng.gen_range(1..4));
        let s = Mat::from_fn(ns, ns, |i, j| {
            c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) + if i == j { c64::new(4.0, 0.0) } else { c64::new(0.0, 0.0) }
        });
        let g = DMatrix::from_fn(nm, nm, |_, _| rng.gen_range(-1.0..1.0));
        let spd = &g * g.transpose() + DMatrix::identity(nm, nm);
        let mm = CsrMatrix::from_triplets(
            nm,
            nm,
            (0..nm).flat_map(|i| (0..nm).map(move |j| (i, j))).map(|(i, j)| (i, j, spd[(i, j)])).collect(),
        );
        let y: Vec<Vec<c64>> =
            (0..k).map(|_| (0..ns).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()).collect();
        let l: Vec<Vec<f64>> = (0..k).map(|_| (0..nm).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let a = tensor_solve(&DenseLu::factor(s.clone()).unwrap(), &SpdFactor::new(&mm).unwrap(), &y, &l).unwrap().to_dense();
        let rv = vec_of(&Mat::from_fn(ns, nm, |i, j| (0..k).map(|c| y[c][i] * l[c][j]).sum::<c64>()));
        let (x, _) = dense_solve(kron(&mm.to_dense(), &s), Mat::from_fn(ns * nm, 1, |i, _| rv[i]).as_ref()).unwrap();
        let xv: Vec<c64> = (0..ns * nm).map(|i| x[(i, 0)]).collect();
        let diff = vec_of(&a).iter().zip(&xv).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        solve_err = solve_err.max(diff / max_abs(&xv).max(1.0));
    }

    let mesh = Arc::new(SurfaceMesh::new(Arc::new(make_unit_sphere()), 3));
    let disc = Discretization::new(mesh).unwrap();
    let tol = 1e-6;
    let constant = CorrelationKernel::Constant(1.0 / 3.0);
    let oracle = CorrelationMatrix::new(&disc, &constant);
    let rank_const = pivoted_cholesky(oracle.diagonal(), |j| oracle.column(j), tol).unwrap().rank();

    let se = CorrelationKernel::SquaredExponential { variance: 1.0, length: 0.5 };
    let oracle = CorrelationMatrix::new(&disc, &se);
    let n = oracle.dim();
    let columns: Vec<Vec<f64>> = (0..n).map(|j| oracle.column(j)).collect();
    let dense = DMatrix::from_fn(n, n, |i, j| columns[j][i]);
    let trace = dense.trace();
    let f = pivoted_cholesky(oracle.diagonal(), |j| columns[j].clone(), tol).unwrap();
    let mut eig: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let optimal: f64 = eig[f.rank()..].iter().map(|v| v.max(0.0)).sum();
    let tail = |k: usize| eig[k..].iter().map(|v| v.max(0.0)).sum::<f64>();
    let eigen_rank = (0..=n).find(|&k| tail(k) <= tol * trace).unwrap();
    let se_ok = f.trace_residual <= tol * trace && f.trace_residual >= optimal - 1e-12 * trace;

    let pass = kron_err <= 1e-13 && solve_err <= 1e-12 && rank_const == 1 && se_ok;
    line(
        5,
        "tensor and low-rank machinery",
        pass,
        &format!(
            "Kronecker identity {kron_err:.1e} (≤ 1e-13), tensor solve {solve_err:.1e} (≤ 1e-12), constant-kernel rank {rank_const}, \
             SE rank {} (eigendecomposition needs {eigen_rank}) with trace residual {:.2e} (≤ {:.2e}, optimal {optimal:.2e})",
            f.rank(),
            f.trace_residual,
            tol * trace
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_geometry_and_space() {
    let mut pass = true;
    let mut parts = Vec::new();
    for level in [2, 3] {
        let mesh = Arc::new(SurfaceMesh::new(Arc::new(make_unit_sphere()), level));
        let disc = Discretization::new(mesh).unwrap();
        for c in geometry_checks(&disc).unwrap() {
            pass &= c.passed;
            parts.push(format!("L{level} {} {:.1e}/{:.0e}", c.name, c.value, c.tolerance));
        }
    }
    line(6, "geometry and space invariants", pass, &parts.join(", "));
    assert!(pass);
}

#[test]
fn criterion_7_validation_suite() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let start = Instant::now();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_maxwell-uq"))
        .args(["validate", "--levels", "3", "--out", report.to_str().unwrap()])
        .env("MAXWELL_UQ_CACHE", dir.path())
        .output()
        .unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap_or_default()).unwrap_or_default();
    let checks = json["checks"].as_array().cloned().unwrap_or_default();
    let failed: Vec<String> = checks.iter().filter(|c| c["passed"] != true).map(|c| c["name"].to_string()).collect();
    let pass = out.status.code() == Some(0) && !checks.is_empty() && failed.is_empty() && seconds <= 600.0;
    line(
        7,
        "validation suite at level 3",
        pass,
        &format!("{} checks, failed {failed:?}, exit {:?}, {seconds:.0} s (≤ 600 s)", checks.len(), out.status.code()),
    );
    assert!(pass);
}
