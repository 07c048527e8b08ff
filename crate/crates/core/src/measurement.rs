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

//! Measurement records and the JSON file that carries them.
//!
//! Coherent mode stores one `p_s` per grid point. Multipole mode stores full outcome
//! distributions on a cone design.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coherent::{self, outcome_distribution, sample_counts_with, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::grid::{build_grid, GridSpec, MeasurementGrid};
use crate::multipole::{self, ConeDesign};
use crate::policy::NumericPolicy;
use crate::recon::{self, ReconstructOptions, Reconstruction};
use crate::spin::{DensityMatrix, Direction, TwiceSpin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Coherent,
    Multipole,
}

/// One coherent-mode grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentRecord {
    pub q: usize,
    pub r_index: usize,
    pub theta: f64,
    pub phi: f64,
    /// Exact probability, or `count_s / shots` when sampled.
    pub p_s: f64,
    /// 0 means exact.
    pub shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count_s: Option<u64>,
}

/// One multipole-mode direction with all `2s+1` outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub cone: usize,
    pub azimuth: usize,
    pub theta: f64,
    pub phi: f64,
    /// Indexed by `k = s - mu`.
    pub probs: Vec<f64>,
    pub shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub twice_s: TwiceSpin,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cones: Option<ConeDesign>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<CoherentRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<OutcomeRecord>,
}

impl MeasurementSet {
    pub fn from_json(text: &str) -> Result<Self> {
        let set: MeasurementSet = serde_json::from_str(text)?;
        set.check_header()?;
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measurement sets serialize")
    }

    fn check_header(&self) -> Result<()> {
        match self.mode {
            Mode::Coherent => {
                let grid = self
                    .grid
                    .as_ref()
                    .ok_or_else(|| Error::Parse("coherent measurement set without grid".into()))?;
                if grid.twice_s() != self.twice_s {
                    return Err(Error::Parse(format!(
                        "grid twice_s {} differs from measurement twice_s {}",
                        grid.twice_s().twice(),
                        self.twice_s.twice()
                    )));
                }
            }
            Mode::Multipole => {
                if self.cones.is_none() {
                    return Err(Error::Parse(
                        "multipole measurement set without cones".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Exact `p_s` on every grid point, circle-major.
pub fn exact_records(rho: &DensityMatrix, grid: &MeasurementGrid) -> Result<Vec<CoherentRecord>> {
    let probs = coherent::coherent_probabilities(rho, &grid.directions())?;
    Ok(grid
        .points
        .iter()
        .zip(probs)
        .map(|(pt, p_s)| CoherentRecord {
            q: pt.q,
            r_index: pt.r_index,
            theta: pt.direction.theta,
            phi: pt.direction.phi,
            p_s,
            shots: 0,
            count_s: None,
        })
        .collect())
}

/// Hermiticity and trace are held to `structural_tol`, the spectrum to `eigen_tol`.
fn require_physical(rho: &DensityMatrix, policy: &NumericPolicy) -> Result<()> {
    let rep = rho.validate(policy.structural_tol);
    if !(rep.hermitian && rep.normalized && rep.min_eigenvalue >= -policy.eigen_tol) {
        return Err(Error::Unphysical {
            min_eigenvalue: rep
                .min_eigenvalue
                .min(-rep.trace_defect)
                .min(-rep.hermiticity_defect),
            tol: policy.eigen_tol,
        });
    }
    Ok(())
}

/// Simulates the coherent-mode experiment. `shots = 0` gives exact probabilities; otherwise each
/// direction gets a full `(2s+1)`-outcome multinomial draw of which only the `mu = s` count is kept.
pub fn simulate_coherent(
    rho: &DensityMatrix,
    spec: &GridSpec,
    shots: u64,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<MeasurementSet> {
    if spec.twice_s() != rho.twice_s() {
        return Err(Error::InvalidArgument(
            "grid and state have different spin".into(),
        ));
    }
    let grid = build_grid(spec);
    let mut records = exact_records(rho, &grid)?;
    if shots > 0 {
        require_physical(rho, policy)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for rec in &mut records {
            let d = Direction {
                theta: rec.theta,
                phi: rec.phi,
            };
            let counts = sample_counts_with(&outcome_distribution(rho, d)?, shots, &mut rng)?;
            rec.count_s = Some(counts.counts[0]);
            rec.p_s = counts.counts[0] as f64 / shots as f64;
            rec.shots = shots;
        }
    }
    Ok(MeasurementSet {
        twice_s: rho.twice_s(),
        mode: Mode::Coherent,
        grid: Some(*spec),
        cones: None,
        records,
        outcomes: Vec::new(),
    })
}

/// Simulates full outcome distributions on a cone design.
pub fn simulate_multipole(
    rho: &DensityMatrix,
    design: &ConeDesign,
    shots: u64,
    seed: u64,
    policy: &NumericPolicy,
) -> Result<MeasurementSet> {
    if shots > 0 {
        require_physical(rho, policy)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes = Vec::new();
    for (cone, &theta) in design.thetas.iter().enumerate() {
        for azimuth in 0..design.azimuths {
            let d = Direction {
                theta,
                phi: design.azimuth(azimuth),
            };
            let dist = outcome_distribution(rho, d)?;
            let (probs, counts) = if shots > 0 {
                let c = sample_counts_with(&dist, shots, &mut rng)?;
                (c.frequencies().expect("sampled"), Some(c.counts))
            } else {
                (dist.probs, None)
            };
            outcomes.push(OutcomeRecord {
                cone,
                azimuth,
                theta,
                phi: d.phi,
                probs,
                shots,
                counts,
            });
        }
    }
    Ok(MeasurementSet {
        twice_s: rho.twice_s(),
        mode: Mode::Multipole,
        grid: None,
        cones: Some(design.clone()),
        records: Vec::new(),
        outcomes,
    })
}

/// Runs the inversion that matches the measurement mode.
pub fn reconstruct_measurements(
    set: &MeasurementSet,
    options: &ReconstructOptions,
) -> Result<Reconstruction> {
    set.check_header()?;
    match set.mode {
        Mode::Coherent => {
            let spec = set.grid.as_ref().expect("checked header");
            recon::reconstruct(&set.records, spec, options)
        }
        Mode::Multipole => {
            let design = set.cones.as_ref().expect("checked header");
            let a = design.azimuths;
            let expected = design.thetas.len() * a;
            if set.outcomes.len() != expected {
                return Err(Error::IncompleteData(format!(
                    "expected {expected} outcome records, got {}",
                    set.outcomes.len()
                )));
            }
            let mut slots: Vec<Option<OutcomeDistribution>> = vec![None; expected];
            for rec in &set.outcomes {
                if rec.cone >= design.thetas.len() || rec.azimuth >= a {
                    return Err(Error::IncompleteData(format!(
                        "outcome label (cone = {}, azimuth = {}) out of range",
                        rec.cone, rec.azimuth
                    )));
                }
                let dist = OutcomeDistribution {
                    direction: Direction {
                        theta: rec.theta,
                        phi: rec.phi,
                    },
                    probs: rec.probs.clone(),
                };
                if slots[rec.cone * a + rec.azimuth].replace(dist).is_some() {
                    return Err(Error::IncompleteData(format!(
                        "duplicate outcome record (cone = {}, azimuth = {})",
                        rec.cone, rec.azimuth
                    )));
                }
            }
            let data: Vec<OutcomeDistribution> = slots
                .into_iter()
                .map(|s| s.expect("all slots filled"))
                .collect();
            multipole::reconstruct_multipole(set.twice_s, design, &data, options)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::random_density;

    #[test]
    fn exact_isotropic_spin_half() {
        let ts = TwiceSpin(1);
        let set = simulate_coherent(
            &DensityMatrix::maximally_mixed(ts),
            &GridSpec::with_defaults(ts),
            0,
            1,
            &NumericPolicy::DEFAULT,
        )
        .unwrap();
        assert_eq!(set.records.len(), 4);
        assert!(set
            .records
            .iter()
            .all(|r| (r.p_s - 0.5).abs() < 1e-15 && r.shots == 0 && r.count_s.is_none()));
    }

    #[test]
    fn spin_one_labels() {
        let ts = TwiceSpin(2);
        let set = simulate_coherent(
            &DensityMatrix::maximally_mixed(ts),
            &GridSpec::with_defaults(ts),
            0,
            1,
            &NumericPolicy::DEFAULT,
        )
        .unwrap();
        assert_eq!(set.records.len(), 9);
        assert!(set.records.iter().all(|r| r.q <= 2 && r.r_index <= 2));
    }

    #[test]
    fn sampling_is_deterministic() {
        let ts = TwiceSpin(3);
        let rho = random_density(ts, 5, None).unwrap();
        let spec = GridSpec::with_defaults(ts);
        let a = simulate_coherent(&rho, &spec, 1000, 9, &NumericPolicy::DEFAULT)
            .unwrap()
            .to_json();
        let b = simulate_coherent(&rho, &spec, 1000, 9, &NumericPolicy::DEFAULT)
            .unwrap()
            .to_json();
        assert_eq!(a, b);
        let c = simulate_coherent(&rho, &spec, 1000, 10, &NumericPolicy::DEFAULT)
            .unwrap()
            .to_json();
        assert_ne!(a, c);
    }

    #[test]
    fn unphysical_state_refused_for_sampling() {
        let ts = TwiceSpin(1);
        let bad = DensityMatrix::new(
            ts,
            crate::linalg::CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                num_complex::Complex64::new(1.2, 0.0),
                num_complex::Complex64::new(-0.2, 0.0),
            ])),
        )
        .unwrap();
        let spec = GridSpec::with_defaults(ts);
        assert!(matches!(
            simulate_coherent(&bad, &spec, 10, 1, &NumericPolicy::DEFAULT),
            Err(Error::Unphysical { .. })
        ));
        assert!(simulate_coherent(&bad, &spec, 0, 1, &NumericPolicy::DEFAULT).is_ok());
    }

    #[test]
    fn json_is_stable() {
        let ts = TwiceSpin(2);
        let rho = random_density(ts, 1, None).unwrap();
        for set in [
            simulate_coherent(
                &rho,
                &GridSpec::with_defaults(ts),
                100,
                3,
                &NumericPolicy::DEFAULT,
            )
            .unwrap(),
            simulate_multipole(
                &rho,
                &ConeDesign::corrected(ts),
                0,
                3,
                &NumericPolicy::DEFAULT,
            )
            .unwrap(),
        ] {
            let text = set.to_json();
            let back = MeasurementSet::from_json(&text).unwrap();
            assert_eq!(back, set);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn header_validation() {
        let text = r#"{"twice_s":1,"mode":"coherent","records":[]}"#;
        assert!(MeasurementSet::from_json(text).is_err());
        let text = r#"{"twice_s":1,"mode":"coherent","grid":{"twice_s":1,"r":1.0,"delta":0.5}}"#;
        assert!(MeasurementSet::from_json(text).is_err());
    }

    #[test]
    fn both_modes_reconstruct() {
        let ts = TwiceSpin(3);
        let rho = random_density(ts, 21, None).unwrap();
        let opts = ReconstructOptions::default();
        let coherent = simulate_coherent(
            &rho,
            &GridSpec::with_defaults(ts),
            0,
            0,
            &NumericPolicy::DEFAULT,
        )
        .unwrap();
        let multi = simulate_multipole(
            &rho,
            &ConeDesign::corrected(ts),
            0,
            0,
            &NumericPolicy::DEFAULT,
        )
        .unwrap();
        let a = reconstruct_measurements(&coherent, &opts).unwrap();
        let b = reconstruct_measurements(&multi, &opts).unwrap();
        assert!(a.rho.max_abs_diff(&rho) < 1e-10);
        assert!(b.rho.max_abs_diff(&rho) < 1e-10);
    }
}
