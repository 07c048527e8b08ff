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

//! Tolerances and thresholds shared by the whole pipeline.

use serde::{Deserialize, Serialize};

/// Numeric policy record: the tolerances a caller may want to tune.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericPolicy {
    /// Structural identities (commutators, unitarity, Hermiticity of inputs).
    pub structural_tol: f64,
    /// Eigen-residuals and eigenvalue-based physicality checks.
    pub eigen_tol: f64,
    /// Blocks with a 2-norm condition estimate above this are refused.
    pub condition_threshold: f64,
    /// Relative singular-value cutoff used for numerical rank.
    pub rank_tol: f64,
}

impl NumericPolicy {
    pub const DEFAULT: NumericPolicy = NumericPolicy {
        structural_tol: 1e-12,
        eigen_tol: 1e-10,
        condition_threshold: 1e12,
        rank_tol: 1e-10,
    };
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}
