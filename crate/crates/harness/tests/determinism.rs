use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

const KINETIC_1D: &str = r#"
mode = "kinetic-1d"
snapshot_cadence = 3
[grid]
nodes_per_axis = 8
v_max = 5.0
[species]
masses = [1.0, 2.0]
[kernel]
family = "hard-sphere"
[kinetic]
eps = 0.05
t_final = 0.05
n_cells = 8
[initial]
layout = "segregated"
density = [1.0, 0.6]
velocity = [0.2, -0.2]
temperature = [1.0, 1.8]
background = 0.05
"#;

const LIMIT: &str = r#"
mode = "limit-study"
eps_list = [0.1, 0.01]
[grid]
nodes_per_axis = 8
v_max = 5.0
[species]
masses = [1.0, 2.0]
[kernel]
[kinetic]
t_final = 0.03
n_cells = 8
[initial]
layout = "segregated"
density = [1.0, 0.55]
velocity = [0.2, -0.2]
temperature = [1.0, 2.2]
background = 0.05
[limit]
n_volumes = 4
"#;

const EXCHANGE: &str = "mode = \"validate-exchange\"\n";

/// Every file under the single run directory, keyed by name.
fn run(config: &str, mode: &str, workers: usize, tmp: &Path) -> BTreeMap<String, Vec<u8>> {
    let cfg = tmp.join(format!("{mode}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = tmp.join(format!("{mode}-w{workers}"));
    let status = Command::new(env!("CARGO_BIN_EXE_mixkin"))
        .args([mode, "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap(), "--deterministic"])
        .args(["--workers", &workers.to_string()])
        .env("RUST_LOG", "warn")
        .status()
        .unwrap();
    assert!(status.success());
    let dir = fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

fn assert_worker_independent(config: &str, mode: &str) {
    let tmp = tempfile::tempdir().unwrap();
    let base = run(config, mode, 1, tmp.path());
    assert!(base.len() >= 2, "{:?}", base.keys());
    for workers in [2, 8] {
        let other = run(config, mode, workers, tmp.path());
        assert_eq!(base.keys().collect::<Vec<_>>(), other.keys().collect::<Vec<_>>());
        for (name, bytes) in &base {
            assert!(bytes == &other[name], "{mode}: {name} differs between 1 and {workers} workers");
        }
    }
}

#[test]
fn kinetic_1d_is_worker_independent() {
    assert_worker_independent(KINETIC_1D, "kinetic-1d");
}

#[test]
fn limit_study_is_worker_independent() {
    assert_worker_independent(LIMIT, "limit-study");
}

#[test]
fn exchange_validation_is_worker_independent() {
    assert_worker_independent(EXCHANGE, "validate-exchange");
}
