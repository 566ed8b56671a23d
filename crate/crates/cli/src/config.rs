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

//! TOML experiment configuration.
//!
//! ```toml
//! kind = "ground_state"
//! seed = 7
//! output = "out/ising.csv"
//!
//! [model]
//! builder = "ising_2d"
//! lx = 2
//! ly = 2
//! b = 1.0
//!
//! [ansatz]
//! backbone = "mps"
//! bond_dim = 2
//! ```

use std::path::PathBuf;

use ragetn::hamiltonians::{
    graph_hamiltonian, heisenberg_2d, ising_2d, kitaev_perturbed_axis, long_range_ising, spin_glass_2d, toric_graph_form,
    FieldAxis, HamiltonianSum,
};
use ragetn::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GroundState,
    CircuitFidelity,
    OracleCheck,
    ModelScan,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    #[default]
    Z,
}

impl From<Axis> for FieldAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::X => FieldAxis::X,
            Axis::Y => FieldAxis::Y,
            Axis::Z => FieldAxis::Z,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    #[serde(rename = "ising_2d")]
    Ising2d {
        lx: usize,
        ly: usize,
        #[serde(default = "one")]
        j: f64,
        b: f64,
        #[serde(default)]
        periodic: bool,
    },
    #[serde(rename = "heisenberg_2d")]
    Heisenberg2d {
        lx: usize,
        ly: usize,
        #[serde(default)]
        periodic: bool,
    },
    #[serde(rename = "spin_glass_2d")]
    SpinGlass2d {
        lx: usize,
        ly: usize,
        seed: u64,
    },
    LongRangeIsing {
        n: usize,
        #[serde(default = "one")]
        b: f64,
    },
    /// Toric code in graph form with a uniform field.
    KitaevPerturbed {
        lx: usize,
        ly: usize,
        #[serde(default = "one")]
        j: f64,
        b: f64,
        #[serde(default)]
        axis: Axis,
    },
    Graph {
        n: usize,
        edges: Vec<(usize, usize)>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<HamiltonianSum> {
        match *self {
            ModelSpec::Ising2d { lx, ly, j, b, periodic } => Ok(ising_2d(lx, ly, j, b, periodic)),
            ModelSpec::Heisenberg2d { lx, ly, periodic } => Ok(heisenberg_2d(lx, ly, periodic)),
            ModelSpec::SpinGlass2d { lx, ly, seed } => Ok(spin_glass_2d(lx, ly, seed)),
            ModelSpec::LongRangeIsing { n, b } => Ok(long_range_ising(n, b)),
            ModelSpec::KitaevPerturbed { lx, ly, j, b, axis } => kitaev_perturbed_axis(lx, ly, j, b, axis.into()),
            ModelSpec::Graph { n, ref edges } => graph_hamiltonian(n, edges),
        }
    }

    /// Graph whose phases define the `graph` initial-phase source.
    pub fn graph_edges(&self) -> Result<Option<Vec<(usize, usize)>>> {
        match self {
            ModelSpec::KitaevPerturbed { lx, ly, .. } => Ok(Some(toric_graph_form(*lx, *ly)?.edges)),
            ModelSpec::Graph { edges, .. } => Ok(Some(edges.clone())),
            _ => Ok(None),
        }
    }

    /// Copy with the field strength replaced.
    pub fn with_field(&self, value: f64) -> Result<Self> {
        let mut m = self.clone();
        match &mut m {
            ModelSpec::Ising2d { b, .. } | ModelSpec::LongRangeIsing { b, .. } | ModelSpec::KitaevPerturbed { b, .. } => *b = value,
            _ => return Err(Error::InvalidArgument("model has no field parameter `b`".into())),
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackboneKind {
    Mps,
    Tts,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    #[default]
    Open,
    Closed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    #[default]
    Subcubic,
    Chain,
    Flat,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteOrder {
    Natural,
    #[default]
    Greedy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    All,
    FixedPhases,
    TensorsOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSource {
    #[default]
    Zero,
    Random,
    Graph,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    pub backbone: BackboneKind,
    pub bond_dim: usize,
    #[serde(default)]
    pub boundary: BoundaryKind,
    #[serde(default)]
    pub tree: TreeKind,
    #[serde(default)]
    pub site_order: SiteOrder,
    /// Adds the weighted-graph layer.
    #[serde(default)]
    pub rage: bool,
    #[serde(default)]
    pub schedule: ScheduleKind,
    #[serde(default)]
    pub initial_phases: PhaseSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub max_sweeps: usize,
    pub rel_tol: f64,
    pub restarts: usize,
    pub max_rounds: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { max_sweeps: 20, rel_tol: 1e-10, restarts: 1, max_rounds: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub n_sites: usize,
    pub blocks: usize,
    /// Number of seeds, counted up from the run seed.
    pub seeds: usize,
    pub bond_dim: usize,
    #[serde(default = "yes")]
    pub row_updates: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    /// Field values substituted for `b`.
    pub values: Vec<f64>,
    /// Adds exact ground and first-excited energies.
    #[serde(default)]
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: Option<u64>,
    pub output: PathBuf,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub ansatz: Option<AnsatzSpec>,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub circuit: Option<CircuitSpec>,
    #[serde(default)]
    pub scan: Option<ScanSpec>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the 1-based line of the offending entry,
    /// or of the `[model]` header for errors inside that section.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
            msg: e.message().to_string(),
        })?;
        let line_for = |key: &str| {
            text.lines().position(|l| l.trim_start().starts_with(key)).map(|i| i + 1).unwrap_or(1)
        };
        let fail = |key: &str, msg: &str| Err(Error::Parse { line: line_for(key), msg: msg.to_string() });
        match cfg.kind {
            ExperimentKind::GroundState | ExperimentKind::ModelScan => {
                if cfg.model.is_none() {
                    return fail("kind", "this experiment needs a [model] section");
                }
                let Some(a) = &cfg.ansatz else {
                    return fail("kind", "this experiment needs an [ansatz] section");
                };
                if a.bond_dim == 0 {
                    return fail("bond_dim", "bond_dim must be positive");
                }
                if cfg.seed.is_none() {
                    return fail("kind", "stochastic runs need a seed");
                }
                if a.initial_phases == PhaseSource::Graph && cfg.model.as_ref().unwrap().graph_edges()?.is_none() {
                    return fail("initial_phases", "graph phases need a graph or kitaev_perturbed model");
                }
                if !a.rage && a.initial_phases != PhaseSource::Zero {
                    return fail("initial_phases", "initial phases need rage = true");
                }
                if cfg.kind == ExperimentKind::ModelScan {
                    let Some(s) = &cfg.scan else {
                        return fail("kind", "model_scan needs a [scan] section");
                    };
                    if s.values.is_empty() {
                        return fail("values", "scan values must not be empty");
                    }
                    cfg.model.as_ref().unwrap().with_field(0.0).map_err(|e| Error::Parse { line: line_for("builder"), msg: e.to_string() })?;
                }
            }
            ExperimentKind::CircuitFidelity => {
                let Some(c) = &cfg.circuit else {
                    return fail("kind", "circuit_fidelity needs a [circuit] section");
                };
                if c.seeds == 0 || c.blocks == 0 || c.bond_dim == 0 {
                    return fail("[circuit]", "seeds, blocks and bond_dim must be positive");
                }
                if cfg.seed.is_none() {
                    return fail("kind", "stochastic runs need a seed");
                }
            }
            ExperimentKind::OracleCheck => {}
        }
        Ok(cfg)
    }
}
