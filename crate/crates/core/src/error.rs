// Copyright 2026 The spintomo Developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use thiserror::Error;

/// Errors produced by the reconstruction library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(
        "dimension mismatch: expected {expected}x{expected} matrix for twice_s, got {rows}x{cols}"
    )]
    DimensionMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("direction with theta = pi has no stereographic coordinate")]
    SouthPole,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("incomplete data: {0}")]
    IncompleteData(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("state is not physical: minimum eigenvalue {min_eigenvalue:e} below -{tol:e}")]
    Unphysical { min_eigenvalue: f64, tol: f64 },

    #[error(
        "singular block m = {m} (delta = {delta}, r = {r}, condition estimate {condition:e}); \
         half-integer spins need a nonzero delta, otherwise try an r further from 1 or a smaller r"
    )]
    SingularBlock {
        m: usize,
        delta: f64,
        r: f64,
        condition: f64,
    },

    #[error("rank-deficient design: rank {rank} < {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
