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

//! Quick oracle checks behind `ragetn selftest` and the `oracle_check` experiment.

use ragetn::hamiltonians::{ising_2d, HamiltonianSum};
use ragetn::mps::{isometry_deviation, mps_canonicalize_open, mps_expectation, mps_reduced_density, Boundary, MpsState};
use ragetn::oracle::{exact_expectation, fidelity, partial_trace, product_expectation, Expand};
use ragetn::peps::{peps_boundary_contract, peps_exact_contract, PepsState};
use ragetn::rage::{rage_expectation, rage_reduced_density, Backbone, RageState};
use ragetn::rng::seeded;
use ragetn::tts::{subcubic_tree, tts_expectation, TtsState};
use ragetn::wgs::{graph_state_phases, stabilizer_operators, AdjacencyPhases, LocalRotations};
use ragetn::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_error.is_finite() && self.max_error <= self.tolerance
    }
}

const INSTANCES: u64 = 5;

fn check(name: &'static str, tolerance: f64, f: impl Fn(u64) -> Result<f64>) -> Check {
    let mut max_error = 0.0f64;
    for k in 0..INSTANCES {
        match f(k) {
            Ok(e) => max_error = max_error.max(e),
            Err(_) => max_error = f64::INFINITY,
        }
    }
    Check { name, max_error, tolerance }
}

fn dist(a: &ragetn::linalg::CMatrix, b: &ragetn::linalg::CMatrix) -> f64 {
    ragetn::linalg::distance(a, b)
}

/// Every check runs [`INSTANCES`] seeded instances derived from `seed`.
pub fn run_checks(seed: u64) -> Vec<Check> {
    let h: HamiltonianSum = ising_2d(3, 2, 1.0, 0.8, false);
    let n = h.n_sites();
    vec![
        check("mps_expectation", 1e-9, |k| {
            let mut rng = seeded(seed.wrapping_add(k));
            let m = MpsState::random(Boundary::Open, n, 2, 3, &mut rng);
            let v = m.expand()?;
            Ok((mps_expectation(&m, &h)? - exact_expectation(&v, &h)?).abs())
        }),
        check("mps_reduced_density", 1e-9, |k| {
            let mut rng = seeded(seed.wrapping_add(k));
            let m = MpsState::random(Boundary::Closed, n, 2, 2, &mut rng);
            Ok(dist(&mps_reduced_density(&m, &[4, 1])?, &partial_trace(&m.expand()?, &[4, 1])?))
        }),
        check("tts_expectation", 1e-9, |k| {
            let mut rng = seeded(seed.wrapping_add(k));
            let t = TtsState::random(subcubic_tree(n, 3)?, 2, &mut rng);
            Ok((tts_expectation(&t, &h)? - exact_expectation(&t.expand()?, &h)?).abs())
        }),
        check("rage_expectation", 1e-9, |k| {
            let mut rng = seeded(seed.wrapping_add(k));
            let m = MpsState::random(Boundary::Open, n, 2, 2, &mut rng);
            let r = RageState::new(Backbone::Mps(m), AdjacencyPhases::random_qubit(n, &mut rng), LocalRotations::random(n, &mut rng))?;
            Ok((rage_expectation(&r, &h)? - exact_expectation(&r.expand()?, &h)?).abs())
        }),
        check("rage_reduced_density", 1e-9, |k| {
            let mut rng = seeded(seed.wrapping_add(k));
            let t = TtsState::random(subcubic_tree(n, 2)?, 2, &mut rng);
            let r = RageState::new(Backbone::Tts(t), AdjacencyPhases::random_qubit(n, &mut rng), LocalRotations::random(n, &mut rng))?;
            Ok(dist(&rage_reduced_density(&r, &[0, 5])?, &partial_trace(&r.expand()?, &[0, 5])?))
        }),
        check("graph_stabilizers", 1e-10, |k| {
            let edges: Vec<(usize, usize)> = (0..n).map(|a| (a, (a + 1 + k as usize % 3) % n)).filter(|(a, b)| a < b).collect();
            let r = RageState::new(
                Backbone::Mps(plus_state(n)),
                graph_state_phases(n, &edges)?,
                LocalRotations::identity(n),
            )?;
            let v = r.expand()?;
            let mut err = 0.0f64;
            for s in stabilizer_operators(n, &edges)? {
                err = err.max((product_expectation(&v, &s.product_operator())? - 1.0).norm());
            }
            Ok(err)
        }),
        check("canonical_form", 1e-10, |k| {
            let mut rng = seeded(seed.wrapping_add(k));
            let m = MpsState::random(Boundary::Open, n, 2, 3, &mut rng);
            let c = mps_canonicalize_open(&m, 2)?;
            Ok((fidelity(&m.expand()?, &c.expand()?)? - 1.0).abs().max(isometry_deviation(&c, 2)))
        }),
        check("peps_boundary", 1e-10, |k| {
            let mut rng = seeded(seed.wrapping_add(k));
            let p = PepsState::random(3, 3, 2, 2, &mut rng);
            let exact = peps_exact_contract(&p, None)?;
            Ok((peps_boundary_contract(&p, 16, None)?.0 - exact).norm() / exact.norm())
        }),
    ]
}

fn plus_state(n: usize) -> MpsState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    MpsState::product(&vec![vec![ragetn::linalg::C64::new(h, 0.0); 2]; n]).expect("valid product state")
}
