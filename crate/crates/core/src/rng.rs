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

//! The library-wide seeded generator.
//!
//! Every stochastic routine takes an explicit `u64` seed and builds a
//! [`Rng`] from it, so any run can be replayed bit for bit.

use num_complex::Complex64;
use rand::{Rng as _, SeedableRng};

/// ChaCha with 8 rounds, seeded from a single `u64`.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// `A + iB` with `A`, `B` independent and uniform on `[-1, 1]`.
pub fn uniform_complex(rng: &mut Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
}

pub fn uniform_angle(rng: &mut Rng) -> f64 {
    rng.gen_range(0.0..std::f64::consts::TAU)
}
