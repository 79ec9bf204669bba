//! Experiment driver: configuration, convergence tables and the validation suite.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bem::{AssemblyOptions, OperatorSet, PotentialEvaluator};
use crate::error::{Error, Result};
use crate::geometry::{evaluation_sphere, make_sphere, CubeWarp, SurfaceMesh, Vec3};
use crate::linalg::CorrelationKernel;
use crate::mie::{linf_distance, mie_random_radius_mean};
use crate::quadrature::QuadratureConfig;
use crate::space::{CVec3, Discretization};
use crate::uq::{corrected_mean_field, solve_correction, solve_reference, CorrelationPipelineState, IncidentWave};

/// Environment variable naming the operator cache directory.
pub const CACHE_ENV: &str = "MAXWELL_UQ_CACHE";

/// The ε grid `0.3 · 2^{-k/2}`, `k = 0..20`, in increasing order.
pub fn default_epsilons() -> Vec<f64> {
    (0..20).rev().map(|k| 0.3 * 2f64.powf(-(k as f64) / 2.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    Zero,
    Constant { value: f64 },
    SquaredExponential { variance: f64, length: f64 },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Constant { value: 1.0 / 3.0 }
    }
}

impl KernelSpec {
    pub fn kernel(&self) -> CorrelationKernel {
        match *self {
            KernelSpec::Zero => CorrelationKernel::Zero,
            KernelSpec::Constant { value } => CorrelationKernel::Constant(value),
            KernelSpec::SquaredExponential { variance, length } => CorrelationKernel::SquaredExponential { variance, length },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveSpec {
    pub direction: [f64; 3],
    pub polarization: [f64; 3],
}

impl Default for WaveSpec {
    fn default() -> Self {
        Self { direction: [0.0, 0.0, 1.0], polarization: [1.0, 0.0, 0.0] }
    }
}

impl WaveSpec {
    pub fn wave(&self, kappa: f64) -> Result<IncidentWave> {
        IncidentWave::new(Vec3::from(self.direction), Vec3::from(self.polarization), kappa)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PointsSpec {
    pub count: usize,
    pub radius: f64,
}

impl Default for PointsSpec {
    fn default() -> Self {
        Self { count: 100, radius: 2.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Order2,
    Order4,
    #[default]
    Both,
}

/// A complete experiment description; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub kappas: Vec<f64>,
    pub levels: Vec<u32>,
    pub epsilons: Vec<f64>,
    pub kernel: KernelSpec,
    pub wave: WaveSpec,
    pub points: PointsSpec,
    pub cholesky_tolerance: f64,
    pub quadrature: QuadratureConfig,
    pub mie_quadrature: usize,
    pub mode: Mode,
    pub warp: CubeWarp,
    pub output: Option<PathBuf>,
    /// Run independent (κ, level) cells concurrently.
    pub parallel_cells: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kappas: vec![2.0],
            levels: vec![2, 3, 4, 5],
            epsilons: default_epsilons(),
            kernel: KernelSpec::default(),
            wave: WaveSpec::default(),
            points: PointsSpec::default(),
            cholesky_tolerance: 1e-6,
            quadrature: QuadratureConfig::default(),
            mie_quadrature: 16,
            mode: Mode::Both,
            warp: CubeWarp::Linear,
            output: None,
            parallel_cells: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::Config(format!("ε values must lie in (0, 1), got {e}")));
        }
        if !(self.cholesky_tolerance > 0.0) {
            return Err(Error::Config(format!("Cholesky tolerance must be positive, got {}", self.cholesky_tolerance)));
        }
        if let Some(k) = self.kappas.iter().find(|k| !(**k > 0.0)) {
            return Err(Error::Config(format!("wavenumbers must be positive, got {k}")));
        }
        if self.points.count == 0 || !(self.points.radius > 1.0) {
            return Err(Error::Config("evaluation points need count > 0 and radius > 1".into()));
        }
        if self.mie_quadrature == 0 {
            return Err(Error::Config("Mie quadrature needs at least one point".into()));
        }
        for &k in &self.kappas {
            self.wave.wave(k)?;
        }
        Ok(())
    }

    pub fn evaluation_points(&self) -> Vec<Vec3> {
        evaluation_sphere(self.points.count, self.points.radius)
    }

    fn assembly_options(&self, cache_dir: Option<&Path>) -> AssemblyOptions {
        AssemblyOptions { quadrature: self.quadrature.clone(), store_dlp: None, cache_dir: cache_dir.map(Path::to_path_buf) }
    }
}

/// Cache directory from [`CACHE_ENV`], if set and non-empty.
pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Sphere mesh, spaces and factored operators for one (κ, level) cell.
pub fn setup(config: &ExperimentConfig, kappa: f64, level: u32, cache_dir: Option<&Path>) -> Result<OperatorSet> {
    let mesh = Arc::new(SurfaceMesh::new(Arc::new(make_sphere(1.0, config.warp)), level));
    let disc = Arc::new(Discretization::new(mesh)?);
    OperatorSet::assemble(disc, kappa, &config.assembly_options(cache_dir))
}

/// Reference field and, for the fourth-order mode, the correction at the evaluation points.
#[derive(Clone, Debug)]
pub struct CellFields {
    pub dofs: usize,
    pub reference: Vec<CVec3>,
    /// `𝔼[δ²E^s[r, r]]`.
    pub correction: Option<Vec<CVec3>>,
    pub rank: Option<usize>,
    pub cond_estimate: f64,
    pub wall_time_s: f64,
}

/// Runs the full pipeline for one cell.
pub fn run_cell(config: &ExperimentConfig, kappa: f64, level: u32, cache_dir: Option<&Path>) -> Result<CellFields> {
    let start = Instant::now();
    let ops = setup(config, kappa, level, cache_dir)?;
    let wave = config.wave.wave(kappa)?;
    let points = config.evaluation_points();
    let reference = solve_reference(&ops, &wave)?;
    let e0 = PotentialEvaluator::new(ops.disc.clone(), kappa).evaluate(Some(&reference.neumann.coefficients), None, &points).values;
    let (correction, rank) = if config.mode == Mode::Order2 {
        (None, None)
    } else {
        let mut state = CorrelationPipelineState::new(&ops, reference)?;
        state.build_b_factor(&ops, &config.kernel.kernel(), config.cholesky_tolerance)?;
        state.build_a_factor(&ops)?;
        let datum = state.mean_second_datum(&ops)?;
        let w = solve_correction(&ops, &datum).evaluate(&ops, &points);
        (Some(w), Some(state.rank()))
    };
    Ok(CellFields {
        dofs: ops.dim(),
        reference: e0,
        correction,
        rank,
        cond_estimate: ops.cond_estimate(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub kappa: f64,
    pub level: u32,
    pub epsilon: f64,
    pub err_order2: Option<f64>,
    pub err_order4: Option<f64>,
    pub rank_k: Option<usize>,
    pub cond_estimate: Option<f64>,
    pub wall_time_s: f64,
    pub status: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

pub const CSV_HEADER: &str = "kappa,level,epsilon,err_order2,err_order4,rank_k,cond_estimate,wall_time_s,status";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{:.3},{}",
                r.kappa,
                r.level,
                r.epsilon,
                opt(r.err_order2.map(|e| format!("{e:.6e}"))),
                opt(r.err_order4.map(|e| format!("{e:.6e}"))),
                opt(r.rank_k),
                opt(r.cond_estimate.map(|e| format!("{e:.4e}"))),
                r.wall_time_s,
                csv_field(&r.status)
            );
        }
        out
    }

    /// Least-squares slope of `log err` against `log ε` over rows with `lo ≤ ε ≤ hi`.
    pub fn slope(&self, kappa: f64, level: u32, lo: f64, hi: f64, order4: bool) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.kappa == kappa && r.level == level && r.epsilon >= lo * (1.0 - 1e-9) && r.epsilon <= hi * (1.0 + 1e-9))
            .filter_map(|r| if order4 { r.err_order4 } else { r.err_order2 }.map(|e| (r.epsilon.ln(), e.ln())))
            .collect();
        log_slope(&pts)
    }
}

/// Least-squares slope through `(x, y)` pairs.
pub fn log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Mie means for every ε, computed once per wavenumber.
fn mie_means(config: &ExperimentConfig, kappa: f64, points: &[Vec3]) -> Result<Vec<Vec<CVec3>>> {
    let wave = config.wave.wave(kappa)?;
    config.epsilons.iter().map(|&eps| mie_random_radius_mean(eps, wave, points, config.mie_quadrature)).collect()
}

/// Errors of the second- and fourth-order approximations against the Mie mean for each ε.
pub fn cell_rows(config: &ExperimentConfig, kappa: f64, level: u32, cell: &CellFields, means: &[Vec<CVec3>]) -> Vec<ResultRow> {
    config
        .epsilons
        .iter()
        .zip(means)
        .map(|(&eps, mean)| {
            let err2 = (config.mode != Mode::Order4).then(|| linf_distance(&cell.reference, mean));
            let err4 = cell.correction.as_ref().map(|w| {
                let corrected = corrected_mean_field(&cell.reference, w, eps);
                linf_distance(&corrected, mean)
            });
            ResultRow {
                kappa,
                level,
                epsilon: eps,
                err_order2: err2,
                err_order4: err4,
                rank_k: cell.rank,
                cond_estimate: Some(cell.cond_estimate),
                wall_time_s: cell.wall_time_s,
                status: "ok".into(),
            }
        })
        .collect()
}

fn error_rows(config: &ExperimentConfig, kappa: f64, level: u32, err: &Error, wall: f64) -> Vec<ResultRow> {
    config
        .epsilons
        .iter()
        .map(|&eps| ResultRow {
            kappa,
            level,
            epsilon: eps,
            err_order2: None,
            err_order4: None,
            rank_k: None,
            cond_estimate: None,
            wall_time_s: wall,
            status: format!("error: {err}"),
        })
        .collect()
}

/// Convergence in ε for every (κ, level) cell; a failing cell yields error rows only.
pub fn run_convergence(config: &ExperimentConfig, cache_dir: Option<&Path>, log: &(dyn Fn(&str) + Sync)) -> Result<ResultTable> {
    config.validate()?;
    if config.epsilons.is_empty() {
        return Ok(ResultTable::default());
    }
    let points = config.evaluation_points();
    let mut means = HashMap::new();
    for &k in &config.kappas {
        means.insert(k.to_bits(), mie_means(config, k, &points)?);
    }
    let cells: Vec<(f64, u32)> = config.kappas.iter().flat_map(|&k| config.levels.iter().map(move |&l| (k, l))).collect();
    let run = |&(kappa, level): &(f64, u32)| {
        log(&format!("κ={kappa} level={level}: running"));
        let start = Instant::now();
        match run_cell(config, kappa, level, cache_dir) {
            Ok(cell) => {
                log(&format!("κ={kappa} level={level}: done in {:.1}s ({} dofs)", cell.wall_time_s, cell.dofs));
                cell_rows(config, kappa, level, &cell, &means[&kappa.to_bits()])
            }
            Err(e) => {
                log(&format!("κ={kappa} level={level}: failed: {e}"));
                error_rows(config, kappa, level, &e, start.elapsed().as_secs_f64())
            }
        }
    };
    let rows: Vec<Vec<ResultRow>> =
        if config.parallel_cells { cells.par_iter().map(run).collect() } else { cells.iter().map(run).collect() };
    Ok(ResultTable { rows: rows.into_iter().flatten().collect() })
}

/// Reference-solution accuracy against the Mie series for one cell.
#[derive(Clone, Debug, Serialize)]
pub struct ReferenceRow {
    pub kappa: f64,
    pub level: u32,
    pub dofs: usize,
    pub err_linf: Option<f64>,
    pub cond_estimate: Option<f64>,
    pub wall_time_s: f64,
    pub status: String,
}

pub const REFERENCE_CSV_HEADER: &str = "kappa,level,dofs,err_linf,cond_estimate,wall_time_s,status";

pub fn reference_csv(rows: &[ReferenceRow]) -> String {
    let mut out = String::from(REFERENCE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.3},{}",
            r.kappa,
            r.level,
            r.dofs,
            opt(r.err_linf.map(|e| format!("{e:.6e}"))),
            opt(r.cond_estimate.map(|e| format!("{e:.4e}"))),
            r.wall_time_s,
            csv_field(&r.status)
        );
    }
    out
}

/// Scattered-field error of the reference solver for every (κ, level).
pub fn run_reference(config: &ExperimentConfig, cache_dir: Option<&Path>, log: &(dyn Fn(&str) + Sync)) -> Result<Vec<ReferenceRow>> {
    config.validate()?;
    let points = config.evaluation_points();
    let cfg = ExperimentConfig { mode: Mode::Order2, ..config.clone() };
    let mut rows = Vec::new();
    for &kappa in &config.kappas {
        let exact = crate::mie::mie_scattered_field(1.0, config.wave.wave(kappa)?, &points)?;
        for &level in &config.levels {
            let start = Instant::now();
            log(&format!("κ={kappa} level={level}: reference solve"));
            rows.push(match run_cell(&cfg, kappa, level, cache_dir) {
                Ok(cell) => ReferenceRow {
                    kappa,
                    level,
                    dofs: cell.dofs,
                    err_linf: Some(linf_distance(&cell.reference, &exact)),
                    cond_estimate: Some(cell.cond_estimate),
                    wall_time_s: cell.wall_time_s,
                    status: "ok".into(),
                },
                Err(e) => ReferenceRow {
                    kappa,
                    level,
                    dofs: 0,
                    err_linf: None,
                    cond_estimate: None,
                    wall_time_s: start.elapsed().as_secs_f64(),
                    status: format!("error: {e}"),
                },
            });
        }
    }
    Ok(rows)
}

/// Mean-field values at the evaluation points for one cell and one ε.
#[derive(Clone, Debug, Serialize)]
pub struct MeanFieldPoint {
    pub x: [f64; 3],
    pub reference: [[f64; 2]; 3],
    pub corrected: [[f64; 2]; 3],
}

fn pairs(v: &CVec3) -> [[f64; 2]; 3] {
    [[v[0].re, v[0].im], [v[1].re, v[1].im], [v[2].re, v[2].im]]
}

/// `E_0^s` and the corrected mean at the evaluation points.
pub fn run_mean(config: &ExperimentConfig, kappa: f64, level: u32, eps: f64, cache_dir: Option<&Path>) -> Result<Vec<MeanFieldPoint>> {
    config.validate()?;
    let cfg = ExperimentConfig { mode: Mode::Both, ..config.clone() };
    let cell = run_cell(&cfg, kappa, level, cache_dir)?;
    let w = cell.correction.as_ref().expect("mode Both builds the correction");
    let corrected = corrected_mean_field(&cell.reference, w, eps);
    Ok(config
        .evaluation_points()
        .iter()
        .zip(cell.reference.iter().zip(&corrected))
        .map(|(x, (r, c))| MeanFieldPoint { x: [x.x, x.y, x.z], reference: pairs(r), corrected: pairs(c) })
        .collect())
}

pub fn mean_csv(points: &[MeanFieldPoint]) -> String {
    let mut out = String::from("x,y,z");
    for p in ["ref", "mean"] {
        for c in ["x", "y", "z"] {
            let _ = write!(out, ",{p}_{c}_re,{p}_{c}_im");
        }
    }
    out.push('\n');
    for p in points {
        let _ = write!(out, "{},{},{}", p.x[0], p.x[1], p.x[2]);
        for v in [&p.reference, &p.corrected] {
            for c in v {
                let _ = write!(out, ",{:.12e},{:.12e}", c[0], c[1]);
            }
        }
        out.push('\n');
    }
    out
}

pub mod validation;
pub use validation::{geometry_checks, run_validation, ValidationCheck, ValidationReport};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_contains_the_figure_amplitudes() {
        let eps = default_epsilons();
        assert_eq!(eps.len(), 20);
        assert!(eps.windows(2).all(|w| w[0] < w[1]));
        for target in [0.3, 0.15, 0.075, 0.000414] {
            assert!(eps.iter().any(|e| (e - target).abs() < 1e-3 * target), "{target}");
        }
    }

    #[test]
    fn partial_json_takes_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"levels": [3], "kernel": {"type": "squared_exponential", "variance": 0.5, "length": 0.2}}"#).unwrap();
        assert_eq!(cfg.levels, vec![3]);
        assert_eq!(cfg.kappas, vec![2.0]);
        assert_eq!(cfg.kernel, KernelSpec::SquaredExponential { variance: 0.5, length: 0.2 });
        assert_eq!(cfg.mie_quadrature, 16);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let ok = ExperimentConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            ExperimentConfig { epsilons: vec![0.1, 1.0], ..ok.clone() },
            ExperimentConfig { epsilons: vec![0.0], ..ok.clone() },
            ExperimentConfig { cholesky_tolerance: 0.0, ..ok.clone() },
            ExperimentConfig { kappas: vec![-1.0], ..ok.clone() },
            ExperimentConfig { points: PointsSpec { count: 10, radius: 0.5 }, ..ok.clone() },
            ExperimentConfig { wave: WaveSpec { direction: [0.0, 0.0, 1.0], polarization: [0.0, 1.0, 1.0] }, ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn slopes_and_csv() {
        let row = |eps: f64, e2: f64, e4: Option<f64>| ResultRow {
            kappa: 2.0,
            level: 1,
            epsilon: eps,
            err_order2: Some(e2),
            err_order4: e4,
            rank_k: Some(1),
            cond_estimate: Some(12.5),
            wall_time_s: 0.5,
            status: "ok".into(),
        };
        let table = ResultTable { rows: [0.05, 0.1, 0.2, 0.4].iter().map(|&e| row(e, 3.0 * e * e, Some(e.powi(4)))).collect() };
        assert!((table.slope(2.0, 1, 0.0, 1.0, false).unwrap() - 2.0).abs() < 1e-12);
        assert!((table.slope(2.0, 1, 0.1, 0.4, true).unwrap() - 4.0).abs() < 1e-12);
        assert!(table.slope(2.0, 1, 0.3, 0.35, true).is_none());
        assert!(table.slope(4.0, 1, 0.0, 1.0, true).is_none());

        let mut t = ResultTable { rows: vec![row(0.1, 0.02, None)] };
        t.rows[0].status = "error: a, \"b\"".into();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("2,1,0.1,2.000000e-2,,1,1.2500e1,0.500,\"error: a, \"\"b\"\"\""));
    }
}
