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

//! Parameter counts of ansatz families.

use std::fmt;
use std::str::FromStr;

use ragetn::tts::{chain_tree, flat_tree, subcubic_tree_with_order, TreeTopology};
use ragetn::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMode {
    /// Tensor entries plus real WGS parameters.
    Mixed,
    /// Tensor entries plus half the real WGS parameters, rounded up.
    Complex,
    /// Two reals per tensor entry plus real WGS parameters.
    Real,
}

impl FromStr for CountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(CountMode::Mixed),
            "complex" => Ok(CountMode::Complex),
            "real" => Ok(CountMode::Real),
            other => Err(Error::InvalidArgument(format!("unknown count mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackboneShape {
    MpsOpen,
    MpsClosed,
    SubcubicTree,
    ChainTree,
    FlatTree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub backbone: BackboneShape,
    pub n_sites: usize,
    pub bond_dim: usize,
    pub local_dim: usize,
    pub rage: bool,
}

impl fmt::Display for ParamSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.backbone {
            BackboneShape::MpsOpen => "mps-open",
            BackboneShape::MpsClosed => "mps-closed",
            BackboneShape::SubcubicTree => "tts-subcubic",
            BackboneShape::ChainTree => "tts-chain",
            BackboneShape::FlatTree => "tts-flat",
        };
        let prefix = if self.rage { "rage-" } else { "" };
        write!(f, "{prefix}{kind}:n={},d={},q={}", self.n_sites, self.bond_dim, self.local_dim)
    }
}

/// Parses `[rage-]<kind>:n=<N>,d=<D>[,q=<q>]`, e.g. `rage-tts-flat:n=16,d=4`.
impl FromStr for ParamSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("parameter spec `{s}`: {m}"));
        let (kind, args) = s.split_once(':').ok_or_else(|| bad("expected `<kind>:n=..,d=..`"))?;
        let (rage, kind) = match kind.strip_prefix("rage-") {
            Some(k) => (true, k),
            None => (false, kind),
        };
        let backbone = match kind {
            "mps-open" | "mps" => BackboneShape::MpsOpen,
            "mps-closed" => BackboneShape::MpsClosed,
            "tts-subcubic" | "tts" => BackboneShape::SubcubicTree,
            "tts-chain" => BackboneShape::ChainTree,
            "tts-flat" => BackboneShape::FlatTree,
            other => return Err(bad(&format!("unknown backbone `{other}`"))),
        };
        let (mut n, mut d, mut q) = (None, None, 2);
        for kv in args.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let v: usize = v.trim().parse().map_err(|_| bad(&format!("`{v}` is not an integer")))?;
            match k.trim() {
                "n" => n = Some(v),
                "d" => d = Some(v),
                "q" => q = v,
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        Ok(ParamSpec {
            backbone,
            n_sites: n.ok_or_else(|| bad("missing n"))?,
            bond_dim: d.ok_or_else(|| bad("missing d"))?,
            local_dim: q,
            rage,
        })
    }
}

fn tree(spec: &ParamSpec) -> Result<TreeTopology> {
    let (n, d, q) = (spec.n_sites, spec.bond_dim, spec.local_dim);
    match spec.backbone {
        BackboneShape::SubcubicTree => subcubic_tree_with_order(&(0..n).collect::<Vec<_>>(), d, q),
        BackboneShape::ChainTree | BackboneShape::FlatTree if q != 2 => {
            Err(Error::InvalidArgument("chain and flat trees are built for qubits".into()))
        }
        BackboneShape::ChainTree => chain_tree(n, d),
        BackboneShape::FlatTree => flat_tree(n, d),
        _ => unreachable!(),
    }
}

/// Number of backbone tensor entries.
///
/// With `discount`, flat-tree end tensors whose bond is full rank are dropped,
/// since they only rotate the local basis of their neighbour.
pub fn backbone_entries(spec: &ParamSpec, discount: bool) -> Result<usize> {
    let (n, d, q) = (spec.n_sites, spec.bond_dim, spec.local_dim);
    if n < 2 || d == 0 || q < 2 {
        return Err(Error::InvalidArgument("need n ≥ 2, d ≥ 1, q ≥ 2".into()));
    }
    match spec.backbone {
        BackboneShape::MpsClosed => Ok(q * n * d * d),
        BackboneShape::MpsOpen => Ok(q * (2 * d + (n - 2) * d * d)),
        _ => {
            let t = tree(spec)?;
            let mut total = 0;
            for u in 0..t.n_nodes() {
                let size: usize = t.shape(u, q).iter().product();
                let node = t.node(u);
                let redundant = discount
                    && spec.backbone == BackboneShape::FlatTree
                    && t.n_nodes() > 2
                    && node.bonds.len() == 1
                    && node.bonds[0].1 == q.pow(node.sites.len() as u32);
                if !redundant {
                    total += size;
                }
            }
            Ok(total)
        }
    }
}

/// Real parameters of the weighted-graph layer: phases plus four reals per qubit rotation.
pub fn wgs_reals(n_sites: usize, local_dim: usize) -> usize {
    let phases = n_sites * (n_sites - 1) / 2 * (local_dim - 1) * (local_dim - 1);
    let rotations = if local_dim == 2 { 4 * n_sites } else { 0 };
    phases + rotations
}

pub fn param_count(spec: &ParamSpec, mode: CountMode, discount: bool) -> Result<usize> {
    let entries = backbone_entries(spec, discount)?;
    let layer = if spec.rage { wgs_reals(spec.n_sites, spec.local_dim) } else { 0 };
    Ok(match mode {
        CountMode::Mixed => entries + layer,
        CountMode::Complex => entries + layer.div_ceil(2),
        CountMode::Real => 2 * entries + layer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(s: &str, mode: CountMode, discount: bool) -> usize {
        param_count(&s.parse().unwrap(), mode, discount).unwrap()
    }

    #[test]
    fn documented_values() {
        assert_eq!(count("mps-closed:n=16,d=4", CountMode::Mixed, false), 512);
        assert_eq!(count("rage-mps-open:n=12,d=1", CountMode::Mixed, false), 138);
        assert_eq!(count("tts-flat:n=16,d=4", CountMode::Complex, true), 384);
        assert_eq!(count("rage-tts-flat:n=16,d=4", CountMode::Complex, true), 476);
        assert_eq!(count("tts-flat:n=16,d=4", CountMode::Complex, false), 416);
        assert_eq!(count("mps-open:n=9,d=2", CountMode::Real, false), 128);
    }

    #[test]
    fn spec_round_trip_and_errors() {
        let s: ParamSpec = "rage-tts-subcubic:n=9,d=3,q=3".parse().unwrap();
        assert_eq!(s.to_string().parse::<ParamSpec>().unwrap(), s);
        assert!("mps:n=4".parse::<ParamSpec>().is_err());
        assert!("peps:n=4,d=2".parse::<ParamSpec>().is_err());
        assert!("tts-flat:n=8,d=2,q=3".parse::<ParamSpec>().is_ok_and(|s| param_count(&s, CountMode::Mixed, false).is_err()));
    }
}
