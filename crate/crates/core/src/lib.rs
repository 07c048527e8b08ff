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

//! Reconstruction of mixed spin-`s` states from Stern-Gerlach measurements.
//!
//! The probability `p_s(n)` of finding the maximal projection `s` along a direction `n` is the
//! expectation of the density matrix in the spin-coherent state `|s, n>`. Measuring it along
//! `(2s+1)^2` directions arranged on `2s+1` circles about the z axis determines the state: a
//! Fourier transform over each circle splits the linear problem into `2s+1` Vandermonde-type
//! systems of size `2s+1` ([`recon`]).
//!
//! [`multipole`] holds the alternative multipole-expansion inversion on cone designs, including
//! the rank analysis that shows why `2s+1` azimuths per cone are not enough.
//!
//! ```
//! use spintomo::{grid::GridSpec, measurement, recon::ReconstructOptions, spin::{random_density, TwiceSpin}};
//! use spintomo::NumericPolicy;
//!
//! let s = TwiceSpin(3);
//! let rho = random_density(s, 7, None).unwrap();
//! let spec = GridSpec::with_defaults(s);
//! let data = measurement::simulate_coherent(&rho, &spec, 0, 0, &NumericPolicy::DEFAULT).unwrap();
//! let out = measurement::reconstruct_measurements(&data, &ReconstructOptions::default()).unwrap();
//! assert!(out.rho.max_abs_diff(&rho) < 1e-10);
//! ```

pub mod coherent;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod measurement;
pub mod multipole;
pub mod policy;
pub mod recon;
pub mod spin;
pub mod vandermonde;

pub use error::{Error, Result};
pub use policy::NumericPolicy;
