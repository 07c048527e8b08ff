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

//! The `(2s+1)^2` measurement directions: `2s+1` circles of constant latitude with radii
//! `R_q = r^{s-q}` in the stereographic plane, each carrying `2s+1` equispaced azimuths
//! `phi_qr = 2 pi (r + q delta) / (2s+1)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{Direction, TwiceSpin};

/// Slack when comparing `delta` against `1/(2s+1)`.
const DELTA_SLACK: f64 = 1e-15;

/// Radial ratio `r` and azimuthal shift `delta` for a spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecJson", into = "GridSpecJson")]
pub struct GridSpec {
    twice_s: TwiceSpin,
    r: f64,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
struct GridSpecJson {
    twice_s: u32,
    r: f64,
    delta: f64,
}

impl TryFrom<GridSpecJson> for GridSpec {
    type Error = Error;

    fn try_from(j: GridSpecJson) -> Result<Self> {
        GridSpec::new(TwiceSpin(j.twice_s), j.r, j.delta)
    }
}

impl From<GridSpec> for GridSpecJson {
    fn from(g: GridSpec) -> Self {
        GridSpecJson {
            twice_s: g.twice_s.0,
            r: g.r,
            delta: g.delta,
        }
    }
}

impl GridSpec {
    pub fn new(twice_s: TwiceSpin, r: f64, delta: f64) -> Result<Self> {
        if !r.is_finite() || !delta.is_finite() {
            return Err(Error::NonFinite(format!("grid r = {r}, delta = {delta}")));
        }
        if r <= 0.0 {
            return Err(Error::InvalidGrid(format!("r = {r} must be positive")));
        }
        if r == 1.0 {
            return Err(Error::InvalidGrid(
                "r = 1 gives duplicate circle radii".into(),
            ));
        }
        let max_delta = 1.0 / twice_s.dim() as f64;
        if delta < 0.0 || delta > max_delta + DELTA_SLACK {
            return Err(Error::InvalidGrid(format!(
                "delta = {delta} outside [0, {max_delta}]"
            )));
        }
        Ok(GridSpec { twice_s, r, delta })
    }

    /// Default `r` and `delta` for the spin.
    pub fn with_defaults(twice_s: TwiceSpin) -> Self {
        GridSpec::new(twice_s, default_r(twice_s), default_delta(twice_s))
            .expect("defaults are valid")
    }

    pub fn twice_s(&self) -> TwiceSpin {
        self.twice_s
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Stereographic radius of circle `q`, `R_q = r^{s-q}`.
    pub fn radius(&self, q: usize) -> f64 {
        self.r.powf(self.twice_s.spin() - q as f64)
    }

    /// `R_q^e`, evaluated as a single power of `r`.
    pub(crate) fn radius_pow(&self, q: usize, e: i64) -> f64 {
        self.r.powf((self.twice_s.spin() - q as f64) * e as f64)
    }

    /// `phi_qr = 2 pi (r_index + q delta) / (2s+1)`.
    pub fn azimuth(&self, q: usize, r_index: usize) -> f64 {
        2.0 * PI * (r_index as f64 + q as f64 * self.delta) / self.twice_s.dim() as f64
    }

    pub fn point_count(&self) -> usize {
        self.twice_s.dim() * self.twice_s.dim()
    }
}

/// `0` for integer spin, `1/(2s+1)` for half-integer spin.
pub fn default_delta(twice_s: TwiceSpin) -> f64 {
    if twice_s.is_fermionic() {
        1.0 / twice_s.dim() as f64
    } else {
        0.0
    }
}

/// Outermost circle radius `R_0` of the default grid.
pub const DEFAULT_OUTER_RADIUS: f64 = 4.5;

/// `r = 4.5^{1/max(1, s)}`, so every `R_q` lies within `[1/4.5, 4.5]`.
///
/// A scan of the block condition numbers puts the optimum near `R_0 = 4.5` for every
/// spin up to 8; much smaller radii cluster the circles and the inversion loses
/// several digits per unit of spin.
pub fn default_r(twice_s: TwiceSpin) -> f64 {
    DEFAULT_OUTER_RADIUS.powf(1.0 / twice_s.spin().max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub q: usize,
    pub r_index: usize,
    pub direction: Direction,
    pub z: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGrid {
    pub spec: GridSpec,
    /// Circle-major order: index `q * (2s+1) + r_index`.
    pub points: Vec<GridPoint>,
}

impl MeasurementGrid {
    pub fn index(&self, q: usize, r_index: usize) -> usize {
        q * self.spec.twice_s.dim() + r_index
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.points.iter().map(|p| p.direction).collect()
    }
}

pub fn build_grid(spec: &GridSpec) -> MeasurementGrid {
    let n = spec.twice_s.dim();
    let mut points = Vec::with_capacity(n * n);
    for q in 0..n {
        let radius = spec.radius(q);
        let theta = 2.0 * radius.atan();
        for r_index in 0..n {
            let phi = spec.azimuth(q, r_index);
            points.push(GridPoint {
                q,
                r_index,
                direction: Direction { theta, phi },
                z: Complex64::from_polar(radius, phi),
            });
        }
    }
    MeasurementGrid {
        spec: *spec,
        points,
    }
}

/// Largest deviation of `(1/(2s+1)) sum_r exp[i (m + k - k') phi_qr]` from
/// `delta_{k', k+m} + exp(i 2 pi q delta) delta_{k', k+m-(2s+1)}` over all `q, m, k, k'`.
pub fn grid_orthogonality_check(spec: &GridSpec) -> f64 {
    let n = spec.twice_s.dim();
    let mut worst = 0.0f64;
    for q in 0..n {
        let wrap_phase = Complex64::from_polar(1.0, 2.0 * PI * q as f64 * spec.delta);
        for m in 0..n {
            for k in 0..n {
                for kp in 0..n {
                    let j = (m + k) as f64 - kp as f64;
                    let sum: Complex64 = (0..n)
                        .map(|r| Complex64::from_polar(1.0, j * spec.azimuth(q, r)))
                        .sum::<Complex64>()
                        / n as f64;
                    let mut expect = Complex64::new(0.0, 0.0);
                    if kp == k + m {
                        expect += 1.0;
                    }
                    if kp + n == k + m {
                        expect += wrap_phase;
                    }
                    worst = worst.max((sum - expect).norm());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        let s = TwiceSpin(2);
        assert!(matches!(
            GridSpec::new(s, 1.0, 0.0),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            GridSpec::new(s, -2.0, 0.0),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            GridSpec::new(s, 0.0, 0.0),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            GridSpec::new(s, 2.0, 0.5),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            GridSpec::new(s, 2.0, -0.1),
            Err(Error::InvalidGrid(_))
        ));
        assert!(GridSpec::new(s, 2.0, 1.0 / 3.0).is_ok());
    }

    #[test]
    fn spin_one_circles() {
        let spec = GridSpec::new(TwiceSpin(2), 2.0, 0.0).unwrap();
        let grid = build_grid(&spec);
        assert_eq!(grid.points.len(), 9);
        let thetas: Vec<f64> = (0..3)
            .map(|q| grid.points[grid.index(q, 0)].direction.theta)
            .collect();
        let want = [2.0 * 2f64.atan(), PI / 2.0, 2.0 * 0.5f64.atan()];
        for (t, w) in thetas.iter().zip(want) {
            assert!((t - w).abs() < 1e-15);
        }
        assert!((thetas[0] - 2.214).abs() < 1e-3 && (thetas[2] - 0.927).abs() < 1e-3);
        for q in 0..3 {
            assert!((spec.radius(q) - [2.0, 1.0, 0.5][q]).abs() < 1e-15);
        }
    }

    #[test]
    fn spin_half_planes_are_orthogonal() {
        let spec = GridSpec::new(TwiceSpin(1), 2.0, 0.5).unwrap();
        let grid = build_grid(&spec);
        let phis: Vec<f64> = grid.points.iter().map(|p| p.direction.phi).collect();
        assert!((phis[0] - 0.0).abs() < 1e-15 && (phis[1] - PI).abs() < 1e-15);
        assert!((phis[2] - PI / 2.0).abs() < 1e-15 && (phis[3] - 3.0 * PI / 2.0).abs() < 1e-15);
        // q = 0 circle spans the xz plane, q = 1 the yz plane.
        let normal = |a: [f64; 3], b: [f64; 3]| {
            [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ]
        };
        let u: Vec<[f64; 3]> = grid
            .points
            .iter()
            .map(|p| p.direction.unit_vector())
            .collect();
        let n0 = normal(u[0], u[1]);
        let n1 = normal(u[2], u[3]);
        let dot: f64 = n0.iter().zip(&n1).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn zero_shift_aligns_azimuths() {
        let spec = GridSpec::new(TwiceSpin(4), 1.3, 0.0).unwrap();
        let grid = build_grid(&spec);
        for q in 1..5 {
            for r in 0..5 {
                assert_eq!(
                    grid.points[grid.index(q, r)].direction.phi,
                    grid.points[grid.index(0, r)].direction.phi
                );
            }
        }
    }

    #[test]
    fn default_shift() {
        assert_eq!(default_delta(TwiceSpin(2)), 0.0);
        assert_eq!(default_delta(TwiceSpin(1)), 0.5);
        assert_eq!(default_delta(TwiceSpin(3)), 0.25);
    }

    #[test]
    fn default_radii_band() {
        for ts in 1..=40 {
            let spec = GridSpec::with_defaults(TwiceSpin(ts));
            for q in 0..=ts as usize {
                let r = spec.radius(q);
                let band = 1.0 / DEFAULT_OUTER_RADIUS - 1e-12..=DEFAULT_OUTER_RADIUS + 1e-12;
                assert!(band.contains(&r));
            }
        }
    }

    #[test]
    fn stereographic_consistency() {
        let spec = GridSpec::new(TwiceSpin(5), 1.2, 1.0 / 6.0).unwrap();
        for p in build_grid(&spec).points {
            assert!((p.direction.stereographic().unwrap() - p.z).norm() < 1e-12);
            assert!(p.direction.theta < PI);
        }
    }

    #[test]
    fn orthogonality_relation() {
        let spec = GridSpec::new(TwiceSpin(2), 2.0, 0.0).unwrap();
        assert!(grid_orthogonality_check(&spec) < 1e-13);
        // A frequency offset of 2s+1 aliases onto zero; an offset of 4 does not.
        let n = 3.0;
        let root_sum = |offset: f64| {
            (0..3)
                .map(|r| Complex64::from_polar(1.0, offset * 2.0 * PI * r as f64 / n))
                .sum::<Complex64>()
                / n
        };
        assert!((root_sum(3.0) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(root_sum(4.0).norm() < 1e-14);
        for ts in 0..=10u32 {
            for delta_frac in [0.0, 0.37, 1.0] {
                let delta = delta_frac / (ts + 1) as f64;
                let spec = GridSpec::new(TwiceSpin(ts), 1.7, delta).unwrap();
                assert!(grid_orthogonality_check(&spec) < 1e-12, "twice_s {ts}");
            }
        }
    }
}
