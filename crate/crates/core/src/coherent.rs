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

//! Spin-coherent states and the Born-rule probabilities measured by a Stern-Gerlach apparatus.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::spin::{self, DensityMatrix, Direction, TwiceSpin};

/// Tolerance on the Hermiticity of a state handed to the probability kernels.
const HERMITIAN_TOL: f64 = 1e-9;

/// The standard coherent state `|s, n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentState {
    pub twice_s: TwiceSpin,
    pub direction: Direction,
    /// Amplitudes on `|mu, n_z>`, index `k = s - mu`.
    pub amplitudes: CVector,
}

/// `|s, n> = (1+|z|^2)^{-s} sum_k C(2s,k)^{1/2} z^k |s-k, n_z>` with `z = tan(theta/2) e^{i phi}`.
///
/// Evaluated as `C(2s,k)^{1/2} sin^k(theta/2) cos^{2s-k}(theta/2) e^{i k phi}`, which is the
/// same expression without forming `1 + |z|^2`.
pub fn coherent_state(twice_s: TwiceSpin, d: Direction) -> Result<CoherentState> {
    d.stereographic()?;
    let ts = twice_s.twice();
    let (sh, ch) = (d.theta / 2.0).sin_cos();
    let amplitudes = CVector::from_fn(twice_s.dim(), |k, _| {
        let k32 = k as u32;
        let modulus =
            linalg::binomial(ts, k32).sqrt() * sh.powi(k as i32) * ch.powi((ts - k32) as i32);
        Complex64::from_polar(modulus, k as f64 * d.phi)
    });
    Ok(CoherentState {
        twice_s,
        direction: d,
        amplitudes,
    })
}

fn check_hermitian(rho: &DensityMatrix) -> Result<()> {
    let m = rho.entries();
    let defect = linalg::max_abs(&(m - m.adjoint())) / 2.0;
    if defect > HERMITIAN_TOL {
        return Err(Error::InvalidArgument(format!(
            "density matrix is not Hermitian (defect {defect:e})"
        )));
    }
    Ok(())
}

fn expectation(rho: &DensityMatrix, v: &CVector) -> f64 {
    (v.adjoint() * rho.entries() * v)[(0, 0)].re
}

/// `p_s(n) = <s, n| rho |s, n>`.
pub fn coherent_probability(rho: &DensityMatrix, d: Direction) -> Result<f64> {
    check_hermitian(rho)?;
    let cs = coherent_state(rho.twice_s(), d)?;
    Ok(expectation(rho, &cs.amplitudes))
}

/// `p_s` for a batch of directions, in input order.
pub fn coherent_probabilities(rho: &DensityMatrix, dirs: &[Direction]) -> Result<Vec<f64>> {
    check_hermitian(rho)?;
    dirs.iter()
        .map(|&d| {
            Ok(expectation(
                rho,
                &coherent_state(rho.twice_s(), d)?.amplitudes,
            ))
        })
        .collect()
}

/// Probabilities of every Stern-Gerlach outcome along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub direction: Direction,
    /// `p_mu(n)` indexed by `k = s - mu`; `probs[0]` is the coherent-state probability.
    pub probs: Vec<f64>,
}

/// `p_mu(n) = <mu, n| rho |mu, n>` for all `mu`.
pub fn outcome_distribution(rho: &DensityMatrix, d: Direction) -> Result<OutcomeDistribution> {
    check_hermitian(rho)?;
    let u = spin::rotation_operator(rho.twice_s(), d);
    let probs = (0..rho.dim())
        .map(|k| expectation(rho, &u.column(k).into_owned()))
        .collect();
    Ok(OutcomeDistribution {
        direction: d,
        probs,
    })
}

/// Multinomial shot counts for one setting. Empty counts mean exact mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub shots: u64,
    pub counts: Vec<u64>,
}

impl ShotCounts {
    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }

    /// Relative frequencies; `None` in exact mode.
    pub fn frequencies(&self) -> Option<Vec<f64>> {
        (!self.is_exact()).then(|| {
            self.counts
                .iter()
                .map(|&c| c as f64 / self.shots as f64)
                .collect()
        })
    }
}

/// Multinomial draw of `shots` outcomes, deterministic per seed.
pub fn sample_counts(dist: &OutcomeDistribution, shots: u64, seed: u64) -> Result<ShotCounts> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_counts_with(dist, shots, &mut rng)
}

/// Multinomial draw as a chain of conditional binomials.
pub fn sample_counts_with<R: rand::Rng + ?Sized>(
    dist: &OutcomeDistribution,
    shots: u64,
    rng: &mut R,
) -> Result<ShotCounts> {
    if shots == 0 {
        return Ok(ShotCounts {
            shots: 0,
            counts: Vec::new(),
        });
    }
    if dist.probs.iter().any(|p| !p.is_finite() || *p < -1e-9) {
        return Err(Error::InvalidArgument(
            "outcome probabilities must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = dist.probs.iter().map(|p| p.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument(
            "outcome probabilities sum to zero".into(),
        ));
    }
    let mut counts = Vec::with_capacity(dist.probs.len());
    let mut remaining = shots;
    let mut mass_left = total;
    for (i, p) in dist.probs.iter().enumerate() {
        let p = p.max(0.0);
        let c = if i + 1 == dist.probs.len() {
            remaining
        } else if remaining == 0 || mass_left <= 0.0 {
            0
        } else {
            let cond = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, cond)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .sample(rng)
        };
        counts.push(c);
        remaining -= c;
        mass_left -= p;
    }
    Ok(ShotCounts { shots, counts })
}
