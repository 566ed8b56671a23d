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

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index {index} paired twice in contraction")]
    DuplicateIndex { index: usize },
    #[error("metric is numerically zero")]
    DegenerateMetric,
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("system too large: {0}")]
    TooLarge(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-Hermitian operator: imaginary part {0:e}")]
    NonHermitian(f64),
    #[error("zero-norm state")]
    ZeroNorm,
    #[error("support too large: {0}")]
    UnsupportedSupport(String),
    #[error("stabilizer group is rank deficient (rank {rank} of {n})")]
    RankDeficient { rank: usize, n: usize },
    #[error("phase model validation failed: residual {0:e}")]
    PhaseModel(f64),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
