// Copyright 2026 The ragetn Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License.You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

use std::fs;
use std::process::Command;

use ragetn::hamiltonians::ising_2d;
use ragetn::oracle::exact_ground_state;
use ragetn_cli::config::{ExperimentConfig, ExperimentKind};
use ragetn_cli::experiments::{meta_path, run, validate_csv};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ragetn"))
}

fn scratch_dir(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("ragetn-cli-{name}-{}", std::process::id()));
    fs::create_dir_all(&d).unwrap();
    d
}

fn ising_config(out: &std::path::Path, bond_dim: usize) -> String {
    format!(
        "kind = \"ground_state\"\nseed = 1\noutput = \"{}\"\n[model]\nbuilder = \"ising_2d\"\nlx = 2\nly = 2\nb = 1.0\n[ansatz]\nbackbone = \"mps\"\nbond_dim = {bond_dim}\n",
        out.display()
    )
}

/// The 2×2 ground state has Schmidt rank 4 across the middle cut, so D = 2 stays above it.
#[test]
fn ground_state_bond_two_is_variational() {
    let dir = scratch_dir("gs2");
    let cfg = ExperimentConfig::parse(&ising_config(&dir.join("d2.csv"), 2)).unwrap();
    let r = run(&cfg).unwrap();
    let energy: f64 = r.table.rows.last().unwrap()[1].parse().unwrap();
    let exact = exact_ground_state(&ising_2d(2, 2, 1.0, 1.0, false)).unwrap().energy;
    assert!(energy > exact + 1e-3 && energy < exact + 0.1, "{energy} vs {exact}");
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn ground_state_run_matches_oracle() {
    let dir = scratch_dir("gs");
    let out = dir.join("ising.csv");
    let text = ising_config(&out, 4);
    let cfg_path = dir.join("run.toml");
    fs::write(&cfg_path, &text).unwrap();
    let status = bin().arg("run").arg(&cfg_path).status().unwrap();
    assert!(status.success());

    let csv = fs::read_to_string(&out).unwrap();
    validate_csv(&csv, ExperimentKind::GroundState, false).unwrap();
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    let energy: f64 = last[1].parse().unwrap();
    let exact = exact_ground_state(&ising_2d(2, 2, 1.0, 1.0, false)).unwrap().energy;
    assert!((energy - exact).abs() < 1e-6, "{energy} vs {exact}");
    assert_eq!(last[2], "80");

    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(meta_path(&out)).unwrap()).unwrap();
    assert_eq!(meta["config"]["kind"], "ground_state");
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn circuit_fidelity_schema_and_repeatability() {
    let dir = scratch_dir("circ");
    let text = format!(
        "kind = \"circuit_fidelity\"\nseed = 3\noutput = \"{}\"\n[circuit]\nn_sites = 5\nblocks = 3\nseeds = 2\nbond_dim = 2\n",
        dir.join("c.csv").display()
    );
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let a = run(&cfg).unwrap();
    let first = fs::read_to_string(&a.csv_path).unwrap();
    run(&cfg).unwrap();
    assert_eq!(first, fs::read_to_string(&a.csv_path).unwrap());
    assert!(first.starts_with("block,mean_fidelity_mps,mean_fidelity_rage\n"));
    assert_eq!(first.lines().count(), 4);
    for line in first.lines().skip(1) {
        for f in line.split(',').skip(1) {
            let v: f64 = f.parse().unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn config_errors_report_lines() {
    let dir = scratch_dir("bad");
    let cfg_path = dir.join("bad.toml");
    fs::write(&cfg_path, "kind = \"ground_state\"\nseed = 1\noutput = \"x.csv\"\nbogus = 3\n").unwrap();
    let out = bin().arg("run").arg(&cfg_path).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn param_count_subcommand() {
    let count = |args: &[&str]| {
        let out = bin().arg("param-count").args(args).output().unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap().trim().to_string()
    };
    assert_eq!(count(&["mps-closed:n=16,d=4"]), "512");
    assert_eq!(count(&["rage-mps-open:n=12,d=1"]), "138");
    assert_eq!(count(&["tts-flat:n=16,d=4", "--mode", "complex", "--discount"]), "384");
    assert_eq!(count(&["rage-tts-flat:n=16,d=4", "--mode", "complex", "--discount"]), "476");
    assert!(!bin().args(["param-count", "mps:n=4"]).status().unwrap().success());
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("pass ")));
}

#[test]
fn thread_variable_is_validated() {
    let out = bin().env("RAGETN_THREADS", "many").args(["param-count", "mps:n=4,d=2"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin().env("RAGETN_THREADS", "2").args(["param-count", "mps:n=4,d=2"]).output().unwrap();
    assert!(out.status.success());
}
