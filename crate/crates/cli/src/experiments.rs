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

//! Experiment drivers and CSV emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use ragetn::circuits::random_circuit_run;
use ragetn::hamiltonians::HamiltonianSum;
use ragetn::mps::{mps_sweep_minimize, Boundary, MpsState};
use ragetn::oracle::exact_ground_state;
use ragetn::rage::{rage_alternating_minimize, AlternatingOptions, Backbone, RageState, Schedule};
use ragetn::rng::{seeded, Rng};
use ragetn::tts::{chain_tree, flat_tree, greedy_site_order, subcubic_tree_with_order, tts_sweep_minimize, TreeTopology, TtsState};
use ragetn::wgs::{graph_state_phases, AdjacencyPhases, LocalRotations};
use ragetn::{Error, Result};
use serde_json::json;

use crate::config::{
    AnsatzSpec, BackboneKind, BoundaryKind, ExperimentConfig, ExperimentKind, ModelSpec, OptimizerSettings, PhaseSource,
    ScheduleKind, SiteOrder, TreeKind,
};
use crate::params::{param_count, BackboneShape, CountMode, ParamSpec};
use crate::selftest;

pub fn fmt_energy(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn fmt_fidelity(x: f64) -> String {
    format!("{x:.9e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Column names of each experiment kind.
pub fn schema(kind: ExperimentKind, exact: bool) -> Vec<&'static str> {
    match kind {
        ExperimentKind::GroundState => vec!["sweep", "energy", "param_count"],
        ExperimentKind::CircuitFidelity => vec!["block", "mean_fidelity_mps", "mean_fidelity_rage"],
        ExperimentKind::OracleCheck => vec!["check", "max_error", "tolerance", "pass"],
        ExperimentKind::ModelScan if exact => vec!["b", "energy", "param_count", "exact_energy", "first_excited"],
        ExperimentKind::ModelScan => vec!["b", "energy", "param_count"],
    }
}

/// Checks that `csv` starts with the header of `kind` and every row has its width.
pub fn validate_csv(csv: &str, kind: ExperimentKind, exact: bool) -> Result<()> {
    let cols = schema(kind, exact);
    let mut lines = csv.lines();
    let header = lines.next().unwrap_or("");
    if header != cols.join(",") {
        return Err(Error::Parse { line: 1, msg: format!("header `{header}` does not match `{}`", cols.join(",")) });
    }
    for (i, l) in lines.enumerate() {
        if l.split(',').count() != cols.len() {
            return Err(Error::Parse { line: i + 2, msg: format!("expected {} fields", cols.len()) });
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct GroundStateRun {
    /// Energy before optimization, then after each sweep or round.
    pub sweep_energies: Vec<f64>,
    pub param_count: usize,
}

fn topology(h: &HamiltonianSum, a: &AnsatzSpec) -> Result<TreeTopology> {
    let n = h.n_sites();
    match a.tree {
        TreeKind::Subcubic => {
            let order = match a.site_order {
                SiteOrder::Greedy => greedy_site_order(h),
                SiteOrder::Natural => (0..n).collect(),
            };
            subcubic_tree_with_order(&order, a.bond_dim, 2)
        }
        TreeKind::Chain => chain_tree(n, a.bond_dim),
        TreeKind::Flat => flat_tree(n, a.bond_dim),
    }
}

fn shape_of(a: &AnsatzSpec) -> BackboneShape {
    match (a.backbone, a.boundary, a.tree) {
        (BackboneKind::Mps, BoundaryKind::Open, _) => BackboneShape::MpsOpen,
        (BackboneKind::Mps, BoundaryKind::Closed, _) => BackboneShape::MpsClosed,
        (BackboneKind::Tts, _, TreeKind::Subcubic) => BackboneShape::SubcubicTree,
        (BackboneKind::Tts, _, TreeKind::Chain) => BackboneShape::ChainTree,
        (BackboneKind::Tts, _, TreeKind::Flat) => BackboneShape::FlatTree,
    }
}

fn backbone(h: &HamiltonianSum, a: &AnsatzSpec, rng: &mut Rng) -> Result<Backbone> {
    let n = h.n_sites();
    Ok(match a.backbone {
        BackboneKind::Mps => {
            let b = match a.boundary {
                BoundaryKind::Open => Boundary::Open,
                BoundaryKind::Closed => Boundary::Closed,
            };
            Backbone::Mps(MpsState::random(b, n, 2, a.bond_dim, rng))
        }
        BackboneKind::Tts => Backbone::Tts(TtsState::random(topology(h, a)?, 2, rng)),
    })
}

fn single_run(h: &HamiltonianSum, model: &ModelSpec, a: &AnsatzSpec, opt: &OptimizerSettings, seed: u64) -> Result<Vec<f64>> {
    let mut rng = seeded(seed);
    let b = backbone(h, a, &mut rng)?;
    let n = h.n_sites();
    if !a.rage {
        let trace = |e: &[f64], s: &[f64]| std::iter::once(e[0]).chain(s.iter().copied()).collect::<Vec<_>>();
        return match b {
            Backbone::Mps(m) => {
                let r = mps_sweep_minimize(&m, h, opt.max_sweeps, opt.rel_tol)?;
                Ok(trace(&r.energy_trace, &r.sweep_energies))
            }
            Backbone::Tts(t) => {
                let r = tts_sweep_minimize(&t, h, opt.max_sweeps, opt.rel_tol)?;
                Ok(trace(&r.energy_trace, &r.sweep_energies))
            }
        };
    }
    let phases = match a.initial_phases {
        PhaseSource::Zero => AdjacencyPhases::qubit_zeros(n),
        PhaseSource::Random => AdjacencyPhases::random_qubit(n, &mut rng),
        PhaseSource::Graph => graph_state_phases(n, &model.graph_edges()?.expect("validated graph model"))?,
    };
    let state = RageState::new(b, phases, LocalRotations::identity(n))?;
    let schedule = match a.schedule {
        ScheduleKind::All => Schedule::ALL,
        ScheduleKind::FixedPhases => Schedule::FIXED_PHASES,
        ScheduleKind::TensorsOnly => Schedule::TENSORS_ONLY,
    };
    let opts = AlternatingOptions { schedule, rel_tol: opt.rel_tol, max_rounds: opt.max_rounds, ..Default::default() };
    let r = rage_alternating_minimize(&state, h, &opts)?;
    Ok(std::iter::once(r.energy_trace[0]).chain(r.round_energies.iter().copied()).collect())
}

/// Best of `opt.restarts` seeded runs, by final energy.
pub fn ground_state_run(model: &ModelSpec, a: &AnsatzSpec, opt: &OptimizerSettings, seed: u64) -> Result<GroundStateRun> {
    let h = model.build()?;
    let spec = ParamSpec { backbone: shape_of(a), n_sites: h.n_sites(), bond_dim: a.bond_dim, local_dim: 2, rage: a.rage };
    let param_count = param_count(&spec, CountMode::Mixed, false)?;
    let mut best: Option<Vec<f64>> = None;
    for k in 0..opt.restarts.max(1) as u64 {
        let t = single_run(&h, model, a, opt, seed.wrapping_add(k))?;
        if best.as_ref().map_or(true, |b| t.last() < b.last()) {
            best = Some(t);
        }
    }
    Ok(GroundStateRun { sweep_energies: best.expect("one restart"), param_count })
}

/// Runs one configured experiment and returns its table.
pub fn execute(cfg: &ExperimentConfig) -> Result<Table> {
    let seed = cfg.seed.unwrap_or(0);
    let exact = cfg.scan.as_ref().is_some_and(|s| s.exact);
    let header = schema(cfg.kind, exact);
    let missing = |s: &str| Error::InvalidArgument(format!("missing [{s}] section"));
    let rows = match cfg.kind {
        ExperimentKind::GroundState => {
            let model = cfg.model.as_ref().ok_or_else(|| missing("model"))?;
            let a = cfg.ansatz.as_ref().ok_or_else(|| missing("ansatz"))?;
            let r = ground_state_run(model, a, &cfg.optimizer, seed)?;
            r.sweep_energies.iter().enumerate().map(|(i, e)| vec![i.to_string(), fmt_energy(*e), r.param_count.to_string()]).collect()
        }
        ExperimentKind::ModelScan => {
            let model = cfg.model.as_ref().ok_or_else(|| missing("model"))?;
            let a = cfg.ansatz.as_ref().ok_or_else(|| missing("ansatz"))?;
            let scan = cfg.scan.as_ref().ok_or_else(|| missing("scan"))?;
            scan.values
                .par_iter()
                .map(|&b| {
                    let m = model.with_field(b)?;
                    let r = ground_state_run(&m, a, &cfg.optimizer, seed)?;
                    let mut row = vec![fmt_energy(b), fmt_energy(*r.sweep_energies.last().unwrap()), r.param_count.to_string()];
                    if exact {
                        let g = exact_ground_state(&m.build()?)?;
                        row.push(fmt_energy(g.energy));
                        row.push(fmt_energy(g.first_excited));
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()?
        }
        ExperimentKind::CircuitFidelity => {
            let c = cfg.circuit.as_ref().ok_or_else(|| missing("circuit"))?;
            let runs = (0..c.seeds as u64)
                .into_par_iter()
                .map(|k| random_circuit_run(c.n_sites, c.bond_dim, c.blocks, seed.wrapping_add(k), c.row_updates).map(|r| r.0))
                .collect::<Result<Vec<_>>>()?;
            (0..c.blocks)
                .map(|b| {
                    let mean = |m: usize| runs.iter().map(|t| t[m].fidelities[2 * b + 1]).sum::<f64>() / runs.len() as f64;
                    vec![(b + 1).to_string(), fmt_fidelity(mean(0)), fmt_fidelity(mean(1))]
                })
                .collect()
        }
        ExperimentKind::OracleCheck => selftest::run_checks(seed)
            .into_iter()
            .map(|c| vec![c.name.to_string(), format!("{:.3e}", c.max_error), format!("{:.1e}", c.tolerance), c.passed().to_string()])
            .collect(),
    };
    Ok(Table { header, rows })
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
    pub table: Table,
    pub wall_time: f64,
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let mut p = csv.as_os_str().to_owned();
    p.push(".meta.json");
    PathBuf::from(p)
}

/// Executes `cfg`, then writes the CSV and its metadata sidecar.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let table = execute(cfg)?;
    let wall_time = start.elapsed().as_secs_f64();
    let csv = table.to_csv();
    validate_csv(&csv, cfg.kind, cfg.scan.as_ref().is_some_and(|s| s.exact))?;
    write_atomic(&cfg.output, &csv)?;
    let meta = json!({
        "library": "ragetn",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "columns": table.header,
        "rows": table.rows.len(),
        "threads": rayon::current_num_threads(),
        "wall_time_seconds": wall_time,
    });
    let meta_path = meta_path(&cfg.output);
    write_atomic(&meta_path, &serde_json::to_string_pretty(&meta).expect("serializable metadata"))?;
    Ok(RunReport { csv_path: cfg.output.clone(), meta_path, table, wall_time })
}
