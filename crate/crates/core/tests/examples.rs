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

use ragetn::circuits::{apply_single_qubit_incremental, apply_single_qubit_variational, hadamard, Gate, SingleQubitOptions};
use ragetn::hamiltonians::{HamiltonianSum, Pauli, PauliString};
use ragetn::linalg::{self, C64};
use ragetn::mps::{Boundary, MpsState};
use ragetn::oracle::{fidelity, partial_trace, Expand};
use ragetn::rage::{rage_phase_coefficients, rage_reduced_density, Backbone, RageState};
use ragetn::rng::seeded;
use ragetn::wgs::{AdjacencyPhases, LocalRotations};

fn plus(n: usize) -> MpsState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    MpsState::product(&vec![vec![C64::new(h, 0.0); 2]; n]).unwrap()
}

#[test]
fn split_hadamard_beats_single_shot() {
    let opts = SingleQubitOptions { bond_dim: 2, sweeps: 2, row_updates: true };
    let gate = Gate::single(3, hadamard()).unwrap();
    let mut wins = 0;
    for seed in 0..50u64 {
        let mut rng = seeded(seed);
        let m = MpsState::random(Boundary::Open, 8, 2, 2, &mut rng);
        let r = RageState::new(Backbone::Mps(m), AdjacencyPhases::random_qubit(8, &mut rng), LocalRotations::identity(8)).unwrap();
        let target = gate.apply_dense(&r.expand().unwrap()).unwrap();
        let (one, _) = apply_single_qubit_variational(&r, &gate, &opts).unwrap();
        let (inc, _) = apply_single_qubit_incremental(&r, &gate, 8, &opts).unwrap();
        let f1 = fidelity(&target, &one.expand().unwrap()).unwrap();
        let f8 = fidelity(&target, &inc.expand().unwrap()).unwrap();
        if f8 >= f1 - 1e-12 {
            wins += 1;
        }
    }
    println!("incremental at least as good in {wins}/50 seeds");
    assert!(wins >= 30);
}

#[test]
fn two_site_graph_marginal() {
    let mut phases = AdjacencyPhases::qubit_zeros(2);
    phases.set(0, 1, std::f64::consts::PI);
    let r = RageState::new(Backbone::Mps(plus(2)), phases, LocalRotations::identity(2)).unwrap();
    let rho = rage_reduced_density(&r, &[0]).unwrap();
    let want = linalg::scale(&linalg::identity(2), C64::new(0.5, 0.0));
    assert!(linalg::distance(&rho, &want) < 1e-12);
}

#[test]
fn phase_coefficients_of_plus_pair() {
    let r = RageState::bare(Backbone::Mps(plus(2)));
    let h = HamiltonianSum::new(2, vec![PauliString::new(2, &[(0, Pauli::X)], 1.0)]).unwrap();
    let c = rage_phase_coefficients(&r, (0, 1), &h).unwrap();
    assert!((c.a - 0.5).abs() < 1e-12);
    assert!((c.b - 0.5).abs() < 1e-12);
    assert!(c.gamma.abs() < 1e-12);
}

#[test]
fn random_rage_density_pair() {
    let mut rng = seeded(11);
    let m = MpsState::random(Boundary::Open, 8, 2, 2, &mut rng);
    let r = RageState::new(Backbone::Mps(m), AdjacencyPhases::random_qubit(8, &mut rng), LocalRotations::random(8, &mut rng)).unwrap();
    let rho = rage_reduced_density(&r, &[3, 6]).unwrap();
    let want = partial_trace(&r.expand().unwrap(), &[3, 6]).unwrap();
    assert!(linalg::distance(&rho, &want) < 1e-9);
}
