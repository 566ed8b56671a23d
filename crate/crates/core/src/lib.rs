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

//! Graph-enhanced tensor-network states.

pub mod circuits;
pub mod error;
pub mod hamiltonians;
pub mod io;
pub mod linalg;
pub mod mps;
pub mod operators;
pub mod oracle;
pub mod peps;
pub mod rage;
pub mod rng;
pub mod tensor;
pub mod tts;
pub mod wgs;

pub use error::{Error, Result};
