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

//! Multipole description of a spin state and the cone-based inversion built on it.
//!
//! The state is expanded as `rho = 1/(2s+1) sum_{lm} rho*_{lm} K_{lm}` with
//! `<s mu'| K_{lm} |s mu> = sqrt(2l+1) (s mu, l m | s mu')`. The combinations `Pi_l` of
//! Stern-Gerlach outcome probabilities along a direction equal
//! `sqrt(4 pi/(2l+1)) sum_m Y_{lm} rho*_{lm}`.
//!
//! Sampling one cone at `2s+1` azimuths aliases the Fourier modes `m` and `m +- (2s+1)`,
//! so that design cannot be inverted; `4s+1` azimuths per cone removes the aliasing.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coherent::OutcomeDistribution;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::recon::{self, ReconstructOptions, Reconstruction};
use crate::spin::{DensityMatrix, Direction, TwiceSpin};

/// Largest `2s` accepted by the multipole machinery.
pub const MAX_TWICE_S: u32 = 40;

const LOG_FACTORIAL_LEN: usize = 512;

fn log_factorial(n: i32) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LOG_FACTORIAL_LEN);
        let mut acc = 0.0f64;
        t.push(0.0);
        for i in 1..LOG_FACTORIAL_LEN {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    });
    table[n as usize]
}

/// Clebsch-Gordan coefficient `(j1 m1, j2 m2 | J M)` in the Condon-Shortley convention.
///
/// All arguments are twice the physical value. Couplings violating a selection rule give 0.
pub fn clebsch_gordan(tj1: i32, tm1: i32, tj2: i32, tm2: i32, tj: i32, tm: i32) -> f64 {
    if tj1 < 0 || tj2 < 0 || tj < 0 {
        return 0.0;
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm.abs() > tj || tm1 + tm2 != tm {
        return 0.0;
    }
    if (tj1 - tm1) % 2 != 0 || (tj2 - tm2) % 2 != 0 || (tj - tm) % 2 != 0 {
        return 0.0;
    }
    if tj < (tj1 - tj2).abs() || tj > tj1 + tj2 || (tj1 + tj2 + tj) % 2 != 0 {
        return 0.0;
    }
    let h = |x: i32| x / 2;
    let a = h(tj1 + tj2 - tj);
    let b = h(tj1 - tm1);
    let c = h(tj2 + tm2);
    let d = h(tj - tj2 + tm1);
    let e = h(tj - tj1 - tm2);

    let log_pre = 0.5
        * ((f64::from(tj) + 1.0).ln()
            + log_factorial(h(tj + tj1 - tj2))
            + log_factorial(h(tj - tj1 + tj2))
            + log_factorial(a)
            - log_factorial(h(tj1 + tj2 + tj) + 1)
            + log_factorial(h(tj + tm))
            + log_factorial(h(tj - tm))
            + log_factorial(b)
            + log_factorial(h(tj1 + tm1))
            + log_factorial(h(tj2 - tm2))
            + log_factorial(c));

    let k_min = 0.max(-d).max(-e);
    let k_max = a.min(b).min(c);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let log_den = log_factorial(k)
            + log_factorial(a - k)
            + log_factorial(b - k)
            + log_factorial(c - k)
            + log_factorial(d + k)
            + log_factorial(e + k);
        let term = (log_pre - log_den).exp();
        sum += if k % 2 == 0 { term } else { -term };
    }
    sum
}

/// Orthonormalized associated Legendre function including the Condon-Shortley phase, so that
/// `Y_{lm}(theta, phi) = legendre(l, m, theta) e^{i m phi}` for `m >= 0`.
fn legendre(l: u32, m: u32, theta: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    let (st, ct) = theta.sin_cos();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for i in 1..=m {
        let i = f64::from(i);
        pmm *= -((2.0 * i + 1.0) / (2.0 * i)).sqrt() * st;
    }
    if l == m {
        return pmm;
    }
    let mf = f64::from(m);
    let mut prev = pmm;
    let mut cur = ct * (2.0 * mf + 3.0).sqrt() * pmm;
    for ll in (m + 2)..=l {
        let lf = f64::from(ll);
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let next = a * (ct * cur - b * prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// Spherical harmonic `Y_{lm}` with the Condon-Shortley phase.
pub fn spherical_harmonic(l: u32, m: i32, theta: f64, phi: f64) -> Complex64 {
    let am = m.unsigned_abs();
    if am > l {
        return Complex64::new(0.0, 0.0);
    }
    let p = legendre(l, am, theta);
    let sign = if m < 0 && am % 2 == 1 { -1.0 } else { 1.0 };
    Complex64::from_polar(sign * p, f64::from(m) * phi)
}

fn check_spin(twice_s: TwiceSpin) -> Result<()> {
    if twice_s.twice() > MAX_TWICE_S {
        return Err(Error::InvalidArgument(format!(
            "twice_s = {} exceeds the multipole limit {MAX_TWICE_S}",
            twice_s.twice()
        )));
    }
    Ok(())
}

fn multipole_index(l: u32, m: i32) -> usize {
    (l * l) as usize + (l as i32 + m) as usize
}

/// Multipole operator `K_{lm}`, entries `(k', k) = sqrt(2l+1) (s mu, l m | s mu')`.
pub fn multipole_operator(twice_s: TwiceSpin, l: u32, m: i32) -> Result<CMatrix> {
    check_spin(twice_s)?;
    if l > twice_s.twice() || m.unsigned_abs() > l {
        return Err(Error::InvalidArgument(format!(
            "multipole (l = {l}, m = {m}) out of range for twice_s = {}",
            twice_s.twice()
        )));
    }
    let ts = twice_s.twice() as i32;
    let n = twice_s.dim();
    let norm = f64::from(2 * l + 1).sqrt();
    Ok(CMatrix::from_fn(n, n, |kp, k| {
        let tmu_p = twice_s.twice_mu(kp) as i32;
        let tmu = twice_s.twice_mu(k) as i32;
        let cg = clebsch_gordan(ts, tmu, 2 * l as i32, 2 * m, ts, tmu_p);
        Complex64::new(norm * cg, 0.0)
    }))
}

fn multipole_basis(twice_s: TwiceSpin) -> Result<Vec<CMatrix>> {
    let lmax = twice_s.twice();
    let mut out = Vec::with_capacity(twice_s.dim() * twice_s.dim());
    for l in 0..=lmax {
        for m in -(l as i32)..=(l as i32) {
            out.push(multipole_operator(twice_s, l, m)?);
        }
    }
    Ok(out)
}

/// Coefficients `rho*_{lm}` for `0 <= l <= 2s`, `-l <= m <= l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MultipoleJson", into = "MultipoleJson")]
pub struct MultipoleCoefficients {
    twice_s: TwiceSpin,
    coeffs: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct MultipoleEntry {
    l: u32,
    m: i32,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct MultipoleJson {
    twice_s: u32,
    coeffs: Vec<MultipoleEntry>,
}

impl TryFrom<MultipoleJson> for MultipoleCoefficients {
    type Error = Error;

    fn try_from(j: MultipoleJson) -> Result<Self> {
        let ts = TwiceSpin(j.twice_s);
        let len = ts.dim() * ts.dim();
        let mut slots: Vec<Option<Complex64>> = vec![None; len];
        for e in &j.coeffs {
            if e.l > j.twice_s || e.m.unsigned_abs() > e.l {
                return Err(Error::Parse(format!(
                    "multipole (l = {}, m = {}) out of range",
                    e.l, e.m
                )));
            }
            if slots[multipole_index(e.l, e.m)]
                .replace(Complex64::new(e.re, e.im))
                .is_some()
            {
                return Err(Error::Parse(format!(
                    "duplicate multipole (l = {}, m = {})",
                    e.l, e.m
                )));
            }
        }
        let coeffs = slots
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Parse("missing multipole coefficients".into()))?;
        Ok(MultipoleCoefficients {
            twice_s: ts,
            coeffs,
        })
    }
}

impl From<MultipoleCoefficients> for MultipoleJson {
    fn from(mc: MultipoleCoefficients) -> Self {
        let coeffs = mc
            .iter()
            .map(|(l, m, z)| MultipoleEntry {
                l,
                m,
                re: z.re,
                im: z.im,
            })
            .collect();
        MultipoleJson {
            twice_s: mc.twice_s.0,
            coeffs,
        }
    }
}

impl MultipoleCoefficients {
    pub fn twice_s(&self) -> TwiceSpin {
        self.twice_s
    }

    pub fn get(&self, l: u32, m: i32) -> Complex64 {
        self.coeffs[multipole_index(l, m)]
    }

    /// `(l, m, rho*_{lm})` in order of increasing `l`, then `m`.
    pub fn iter(&self) -> impl Iterator<Item = (u32, i32, Complex64)> + '_ {
        (0..=self.twice_s.twice())
            .flat_map(move |l| (-(l as i32)..=l as i32).map(move |m| (l, m, self.get(l, m))))
    }
}

/// `rho*_{lm} = Tr[rho K_{lm}^dagger]`.
pub fn rho_to_multipoles(rho: &DensityMatrix) -> Result<MultipoleCoefficients> {
    let basis = multipole_basis(rho.twice_s())?;
    let e = rho.entries();
    let coeffs = basis
        .iter()
        .map(|k| e.iter().zip(k.iter()).map(|(a, b)| a * b.conj()).sum())
        .collect();
    Ok(MultipoleCoefficients {
        twice_s: rho.twice_s(),
        coeffs,
    })
}

/// `rho = 1/(2s+1) sum_{lm} rho*_{lm} K_{lm}`. Physicality is not checked.
pub fn multipoles_to_rho(mc: &MultipoleCoefficients) -> Result<DensityMatrix> {
    let basis = multipole_basis(mc.twice_s)?;
    let n = mc.twice_s.dim();
    let mut rho = CMatrix::zeros(n, n);
    for (k, c) in basis.iter().zip(&mc.coeffs) {
        rho += k * *c;
    }
    DensityMatrix::new(mc.twice_s, rho.unscale(n as f64))
}

/// `Pi_l = sqrt(2s+1) sum_mu (-1)^{s-mu} (s mu, s -mu | l 0) p_mu` from a full outcome
/// distribution.
pub fn pi_l_from_probabilities(twice_s: TwiceSpin, probs: &[f64], l: u32) -> Result<f64> {
    check_spin(twice_s)?;
    if probs.len() != twice_s.dim() {
        return Err(Error::DimensionMismatch {
            expected: twice_s.dim(),
            rows: probs.len(),
            cols: 1,
        });
    }
    if l > twice_s.twice() {
        return Err(Error::InvalidArgument(format!("l = {l} exceeds 2s")));
    }
    let ts = twice_s.twice() as i32;
    let sum: f64 = probs
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let tmu = twice_s.twice_mu(k) as i32;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * clebsch_gordan(ts, tmu, ts, -tmu, 2 * l as i32, 0) * p
        })
        .sum();
    Ok((twice_s.dim() as f64).sqrt() * sum)
}

/// `Pi_l(theta, phi) = sqrt(4 pi/(2l+1)) sum_m Y_{lm}(theta, phi) rho*_{lm}`.
pub fn pi_l_from_multipoles(mc: &MultipoleCoefficients, l: u32, d: Direction) -> Complex64 {
    let norm = (4.0 * PI / f64::from(2 * l + 1)).sqrt();
    (-(l as i32)..=l as i32)
        .map(|m| spherical_harmonic(l, m, d.theta, d.phi) * mc.get(l, m))
        .sum::<Complex64>()
        * norm
}

/// Check of the azimuthal orthogonality sums on one cone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AliasingReport {
    pub twice_s: TwiceSpin,
    /// Max deviation of the `(2s+1)`-point sum from
    /// `delta_{mm'} + delta_{m,m'+(2s+1)} + delta_{m,m'-(2s+1)}`.
    pub short_defect: f64,
    /// Max deviation of the `(4s+1)`-point sum from `delta_{mm'}`.
    pub long_defect: f64,
    /// Pairs `(m, m')`, `m != m'`, that the `(2s+1)`-point sum cannot tell apart.
    pub alias_pairs: Vec<(i32, i32)>,
}

fn azimuth_average(points: usize, diff: i32) -> Complex64 {
    (0..points)
        .map(|k| Complex64::from_polar(1.0, f64::from(diff) * 2.0 * PI * k as f64 / points as f64))
        .sum::<Complex64>()
        / points as f64
}

/// Verifies both orthogonality relations for all `m, m'` in `[-2s, 2s]`.
pub fn aliasing_defect(twice_s: TwiceSpin) -> AliasingReport {
    let ts = twice_s.twice() as i32;
    let short = ts + 1;
    let long = 2 * ts + 1;
    let mut short_defect = 0.0f64;
    let mut long_defect = 0.0f64;
    let mut alias_pairs = Vec::new();
    for m in -ts..=ts {
        for mp in -ts..=ts {
            let kd = |c: bool| if c { 1.0 } else { 0.0 };
            let expect = kd(m == mp) + kd(m == mp + short) + kd(m == mp - short);
            let got = azimuth_average(short as usize, m - mp);
            short_defect = short_defect.max((got - Complex64::new(expect, 0.0)).norm());
            if m != mp && expect != 0.0 {
                alias_pairs.push((m, mp));
            }
            let got = azimuth_average(long as usize, m - mp);
            long_defect = long_defect.max((got - Complex64::new(kd(m == mp), 0.0)).norm());
        }
    }
    AliasingReport {
        twice_s,
        short_defect,
        long_defect,
        alias_pairs,
    }
}

/// Directions on cones about the z axis: colatitudes `thetas`, each with `azimuths`
/// equispaced angles `phi_k = 2 pi k / azimuths`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeDesign {
    pub thetas: Vec<f64>,
    pub azimuths: usize,
}

impl ConeDesign {
    pub fn new(thetas: Vec<f64>, azimuths: usize) -> Result<Self> {
        if azimuths == 0 || thetas.is_empty() {
            return Err(Error::InvalidArgument(
                "cone design needs cones and azimuths".into(),
            ));
        }
        for (i, t) in thetas.iter().enumerate() {
            if !(t.is_finite() && *t > 0.0 && *t < PI) {
                return Err(Error::InvalidArgument(format!(
                    "cone colatitude {t} outside (0, pi)"
                )));
            }
            if thetas[..i].contains(t) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate cone colatitude {t}"
                )));
            }
        }
        Ok(ConeDesign { thetas, azimuths })
    }

    /// One cone with `2s+1` azimuths.
    pub fn single_cone(twice_s: TwiceSpin, theta: f64) -> Result<Self> {
        ConeDesign::new(vec![theta], twice_s.dim())
    }

    /// `2s+1` cones at `theta_j = pi (j+1)/(2s+2)`, each with `4s+1` azimuths.
    pub fn corrected(twice_s: TwiceSpin) -> Self {
        let n = twice_s.dim();
        let thetas = (0..n)
            .map(|j| PI * (j + 1) as f64 / (n + 1) as f64)
            .collect();
        ConeDesign {
            thetas,
            azimuths: 2 * twice_s.twice() as usize + 1,
        }
    }

    pub fn azimuth(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.azimuths as f64
    }

    /// Cone-major list of directions.
    pub fn directions(&self) -> Vec<Direction> {
        self.thetas
            .iter()
            .flat_map(|&theta| {
                (0..self.azimuths).map(move |k| Direction {
                    theta,
                    phi: 2.0 * PI * k as f64 / self.azimuths as f64,
                })
            })
            .collect()
    }
}

/// Linear map from `rho*_{lm}` to the `Pi_l` values of a cone design.
#[derive(Debug, Clone)]
pub struct DesignReport {
    /// Rows ordered `(l, cone, azimuth)`; columns `(l, m)`.
    pub matrix: CMatrix,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// `(2s+1)^2`.
    pub required: usize,
}

impl DesignReport {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.required
    }
}

pub fn cone_design_matrix(
    twice_s: TwiceSpin,
    design: &ConeDesign,
    rank_tol: f64,
) -> Result<DesignReport> {
    check_spin(twice_s)?;
    let lmax = twice_s.twice();
    let required = twice_s.dim() * twice_s.dim();
    let dirs = design.directions();
    let rows = (lmax as usize + 1) * dirs.len();
    let mut matrix = CMatrix::zeros(rows, required);
    let mut row = 0;
    for l in 0..=lmax {
        let norm = (4.0 * PI / f64::from(2 * l + 1)).sqrt();
        for d in &dirs {
            for m in -(l as i32)..=l as i32 {
                matrix[(row, multipole_index(l, m))] =
                    spherical_harmonic(l, m, d.theta, d.phi) * norm;
            }
            row += 1;
        }
    }
    let singular_values = linalg::singular_values(&matrix);
    let rank = linalg::numerical_rank(&singular_values, rank_tol);
    Ok(DesignReport {
        matrix,
        singular_values,
        rank,
        required,
    })
}

/// Inverts full outcome distributions measured on a cone design (cone-major order, see
/// [`ConeDesign::directions`]).
///
/// For each cone and `l`, the azimuthal Fourier transform of `Pi_l` isolates
/// `sqrt(4 pi/(2l+1)) P_l^m(theta_j) rho*_{lm}`; each `rho*_{lm}` is then the least-squares fit
/// over cones.
pub fn reconstruct_multipole(
    twice_s: TwiceSpin,
    design: &ConeDesign,
    data: &[OutcomeDistribution],
    options: &ReconstructOptions,
) -> Result<Reconstruction> {
    check_spin(twice_s)?;
    let dirs = design.directions();
    if data.len() != dirs.len() {
        return Err(Error::IncompleteData(format!(
            "expected {} outcome distributions, got {}",
            dirs.len(),
            data.len()
        )));
    }
    for (dist, d) in data.iter().zip(&dirs) {
        if dist.probs.len() != twice_s.dim() {
            return Err(Error::IncompleteData(format!(
                "distribution has {} outcomes, expected {}",
                dist.probs.len(),
                twice_s.dim()
            )));
        }
        if dist.probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("outcome probability".into()));
        }
        if (dist.direction.theta - d.theta).abs() > 1e-9
            || (dist.direction.phi - d.phi).abs() > 1e-9
        {
            return Err(Error::IncompleteData(format!(
                "distribution direction ({}, {}) does not match design ({}, {})",
                dist.direction.theta, dist.direction.phi, d.theta, d.phi
            )));
        }
    }
    let report = cone_design_matrix(twice_s, design, options.policy.rank_tol)?;
    if !report.is_full_rank() {
        return Err(Error::RankDeficient {
            rank: report.rank,
            required: report.required,
        });
    }
    let lmax = twice_s.twice();
    if design.azimuths < 2 * lmax as usize + 1 {
        return Err(Error::InvalidArgument(format!(
            "{} azimuths per cone alias Fourier modes; need at least {}",
            design.azimuths,
            2 * lmax + 1
        )));
    }

    let a = design.azimuths;
    let n = twice_s.dim();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n * n];
    for l in 0..=lmax {
        let norm = (4.0 * PI / f64::from(2 * l + 1)).sqrt();
        // pi[j][k] = Pi_l(theta_j, phi_k)
        let mut pi = Vec::with_capacity(design.thetas.len());
        for j in 0..design.thetas.len() {
            let row: Vec<f64> = (0..a)
                .map(|k| pi_l_from_probabilities(twice_s, &data[j * a + k].probs, l))
                .collect::<Result<_>>()?;
            pi.push(row);
        }
        for m in -(l as i32)..=l as i32 {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for (j, &theta) in design.thetas.iter().enumerate() {
                let fourier: Complex64 = pi[j]
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| Complex64::from_polar(v, -f64::from(m) * design.azimuth(k)))
                    .sum::<Complex64>()
                    / a as f64;
                let c = norm * spherical_harmonic(l, m, theta, 0.0).re;
                num += fourier * c;
                den += c * c;
            }
            if den == 0.0 {
                return Err(Error::RankDeficient {
                    rank: report.rank,
                    required: report.required,
                });
            }
            coeffs[multipole_index(l, m)] = num / den;
        }
    }
    let mc = MultipoleCoefficients { twice_s, coeffs };
    let raw = multipoles_to_rho(&mc)?.into_entries();
    let (entries, diagnostics) = recon::finish(raw, options);
    Ok(Reconstruction {
        rho: DensityMatrix::new(twice_s, entries)?,
        diagnostics,
    })
}
