use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxwell-uq")).args(args).env("MAXWELL_UQ_CACHE", cache).output().unwrap()
}

#[test]
fn empty_epsilon_list_gives_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"epsilons": [], "levels": [1]}"#).unwrap();
    let out = run(&["convergence", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().collect::<Vec<_>>(), ["kappa,level,epsilon,err_order2,err_order4,rank_k,cond_estimate,wall_time_s,status"]);
}

#[test]
fn convergence_writes_one_row_per_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("out/conv.csv");
    let out = run(&["convergence", "--levels", "1", "--eps", "0.3,0.15", "--out", csv_path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r.len(), 9);
        assert_eq!(r[1], "1");
        assert_eq!(r[5], "1");
        assert_eq!(r[8], "ok");
        assert!(r[3].parse::<f64>().unwrap() > 0.0);
        assert!(r[4].parse::<f64>().unwrap() > 0.0);
    }
    assert!(std::fs::read_dir(dir.path()).unwrap().any(|e| e.unwrap().file_name().to_string_lossy().starts_with("ops-")));
}

#[test]
fn reference_and_mean_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reference", "--levels", "1", "--jobs", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("kappa,level,dofs,err_linf,cond_estimate,wall_time_s,status\n"));
    assert!(csv.lines().nth(1).unwrap().starts_with("2,1,48,"));

    let out = run(&["mean", "--levels", "1", "--eps", "0.2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 101);
}

#[test]
fn invalid_input_exits_with_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["convergence", "--eps", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
    let out = run(&["reference", "--config", "/nonexistent/cfg.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupted_cache_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["reference", "--levels", "1"], dir.path()).status.code(), Some(0));
    let file =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).find(|p| p.extension().is_some_and(|e| e == "bin")).unwrap();
    let mut bytes = std::fs::read(&file).unwrap();
    let k = bytes.len() / 3;
    bytes[k] ^= 1;
    std::fs::write(&file, bytes).unwrap();
    let out = run(&["reference", "--levels", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("checksum mismatch"));
}
