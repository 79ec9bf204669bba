use maxwell_uq::experiment::{run_validation, ExperimentConfig};
use maxwell_uq::mie::MieSolution;
use maxwell_uq::uq::IncidentWave;

fn quiet(_: &str) {}

#[test]
fn validation_suite_passes_at_level_two() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_validation(&ExperimentConfig::default(), 2, 2.0, Some(dir.path()), &quiet).unwrap();
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
    assert!(failed.is_empty(), "{failed:#?}");
    assert_eq!(report.checks.len(), 20);

    // [DERIVED] ℓ∞ distance to the Mie series on 100 points of radius 2, level 2
    let reference = report.checks.iter().find(|c| c.name == "reference_vs_mie").unwrap();
    assert!((reference.value - 9.314e-3).abs() < 1e-5, "{}", reference.value);
}

#[test]
fn validation_is_deterministic() {
    let config = ExperimentConfig::default();
    let a = run_validation(&config, 1, 2.0, None, &quiet).unwrap();
    let b = run_validation(&config, 1, 2.0, None, &quiet).unwrap();
    let values = |r: &maxwell_uq::experiment::ValidationReport| {
        r.checks.iter().map(|c| (c.name.clone(), c.value.to_bits(), c.passed)).collect::<Vec<_>>()
    };
    assert_eq!(values(&a), values(&b));
    let json = serde_json::to_value(&a).unwrap();
    assert_eq!(json["checks"].as_array().unwrap().len(), a.checks.len());
}

/// Extinction equals scattering for a lossless sphere (optical theorem).
#[test]
fn mie_coefficients_satisfy_the_optical_theorem() {
    for x in [0.3, 1.0, 2.0, 5.0, 12.0] {
        let mie = MieSolution::new(1.0, IncidentWave::along_z(x)).unwrap();
        let (mut ext, mut sca) = (0.0, 0.0);
        for n in 1..=mie.order {
            let w = (2 * n + 1) as f64;
            ext += w * (mie.a[n] + mie.b[n]).re;
            sca += w * (mie.a[n].norm_sqr() + mie.b[n].norm_sqr());
        }
        assert!((ext - sca).abs() < 1e-12 * sca, "x = {x}: {ext} vs {sca}");
    }
}

/// Rayleigh limit of a perfectly conducting sphere: `Q_sca → (10/3) x⁴`.
#[test]
fn mie_small_sphere_limit() {
    let x: f64 = 1e-2;
    let mie = MieSolution::new(1.0, IncidentWave::along_z(x)).unwrap();
    let sca: f64 = (1..=mie.order).map(|n| (2 * n + 1) as f64 * (mie.a[n].norm_sqr() + mie.b[n].norm_sqr())).sum();
    let q = 2.0 / (x * x) * sca;
    assert!((q / (10.0 / 3.0 * x.powi(4)) - 1.0).abs() < 1e-3, "{q}");
}
