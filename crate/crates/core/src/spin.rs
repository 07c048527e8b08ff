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

//! Spin bookkeeping: exact spin labels, spin operators, rotations and density matrices.
//!
//! All matrices use the basis `|mu, n_z>` ordered by `k = s - mu`, so row/column 0
//! is `mu = +s` and row/column `2s` is `mu = -s`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, I};

/// Spin magnitude stored as the integer `2s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TwiceSpin(pub u32);

impl TwiceSpin {
    pub fn new(twice_s: u32) -> Self {
        TwiceSpin(twice_s)
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    /// Hilbert space dimension `2s + 1`.
    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    pub fn spin(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// Half-integer spin.
    pub fn is_fermionic(self) -> bool {
        self.0 % 2 == 1
    }

    /// `2 mu` for basis index `k`.
    pub fn twice_mu(self, k: usize) -> i64 {
        i64::from(self.0) - 2 * k as i64
    }

    pub fn mu(self, k: usize) -> f64 {
        self.twice_mu(k) as f64 / 2.0
    }
}

impl std::fmt::Display for TwiceSpin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Spin matrices in the `k = s - mu` basis.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub twice_s: TwiceSpin,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub s_plus: CMatrix,
    pub s_minus: CMatrix,
}

impl SpinOperators {
    /// `n . s` for the unit vector `n`.
    pub fn along(&self, n: [f64; 3]) -> CMatrix {
        self.sx.scale(n[0]) + self.sy.scale(n[1]) + self.sz.scale(n[2])
    }
}

/// Builds the ladder operators from their standard matrix elements and derives `sx, sy, sz`.
pub fn build_spin_operators(twice_s: TwiceSpin) -> SpinOperators {
    let n = twice_s.dim();
    let ts = twice_s.twice() as usize;
    // <mu+1| s_+ |mu> = sqrt((s - mu)(s + mu + 1)) = sqrt(k (2s - k + 1)) at (k-1, k).
    let mut s_plus = CMatrix::zeros(n, n);
    for k in 1..n {
        s_plus[(k - 1, k)] = Complex64::new(((k * (ts - k + 1)) as f64).sqrt(), 0.0);
    }
    let s_minus = s_plus.transpose();
    let sx = (&s_plus + &s_minus).scale(0.5);
    let sy = (&s_plus - &s_minus) / (I * 2.0);
    let sz = CMatrix::from_diagonal(&CVector::from_fn(n, |k, _| {
        Complex64::new(twice_s.mu(k), 0.0)
    }));
    SpinOperators {
        twice_s,
        sx,
        sy,
        sz,
        s_plus,
        s_minus,
    }
}

/// A direction in space, `(theta, phi)` with `theta` in `[0, pi]` and `phi` in `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub const NORTH: Direction = Direction {
        theta: 0.0,
        phi: 0.0,
    };

    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::NonFinite(format!("direction ({theta}, {phi})")));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidArgument(format!(
                "theta = {theta} outside [0, pi]"
            )));
        }
        Ok(Direction {
            theta,
            phi: phi.rem_euclid(2.0 * PI),
        })
    }

    /// Inverse stereographic projection of `z = tan(theta/2) e^{i phi}`.
    pub fn from_stereographic(z: Complex64) -> Result<Self> {
        if !z.is_finite() {
            return Err(Error::NonFinite(format!("stereographic coordinate {z}")));
        }
        let phi = if z.norm() == 0.0 { 0.0 } else { z.arg() };
        Direction::new(2.0 * z.norm().atan(), phi)
    }

    pub fn stereographic(&self) -> Result<Complex64> {
        if self.theta >= PI {
            return Err(Error::SouthPole);
        }
        Ok(Complex64::from_polar((self.theta / 2.0).tan(), self.phi))
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// `exp[-i theta m(phi) . s]` with `m(phi) = (-sin phi, cos phi, 0)`, the rotation taking
/// `n_z` to `n(theta, phi)`.
///
/// Computed from the eigendecomposition of the Hermitian generator.
pub fn rotation_operator(twice_s: TwiceSpin, d: Direction) -> CMatrix {
    let ops = build_spin_operators(twice_s);
    rotation_with(&ops, d)
}

pub(crate) fn rotation_with(ops: &SpinOperators, d: Direction) -> CMatrix {
    let (sp, cp) = d.phi.sin_cos();
    let generator = ops.along([-sp, cp, 0.0]);
    let (vals, vecs) = linalg::hermitian_eigen(&generator);
    let mut scaled = vecs.clone();
    for (c, &l) in vals.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -d.theta * l);
        scaled.column_mut(c).iter_mut().for_each(|z| *z *= phase);
    }
    scaled * vecs.adjoint()
}

/// Eigenvectors `|mu, n>` of `n . s`, labelled by `2 mu` (descending from `2s`).
///
/// These are the columns of [`rotation_operator`], so their phases follow the rotation
/// convention.
pub fn eigenbasis_of_axis(twice_s: TwiceSpin, d: Direction) -> Vec<(i64, CVector)> {
    let u = rotation_operator(twice_s, d);
    (0..twice_s.dim())
        .map(|k| (twice_s.twice_mu(k), u.column(k).into_owned()))
        .collect()
}

/// A `(2s+1) x (2s+1)` density matrix with entry `(k', k) = rho_{s-k', s-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityMatrixJson", into = "DensityMatrixJson")]
pub struct DensityMatrix {
    twice_s: TwiceSpin,
    entries: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixJson {
    twice_s: u32,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<DensityMatrixJson> for DensityMatrix {
    type Error = Error;

    fn try_from(j: DensityMatrixJson) -> Result<Self> {
        let n = j.twice_s as usize + 1;
        let ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if !ok(&j.re) || !ok(&j.im) {
            return Err(Error::DimensionMismatch {
                expected: n,
                rows: j.re.len(),
                cols: j.re.first().map_or(0, Vec::len),
            });
        }
        let m = CMatrix::from_fn(n, n, |r, c| Complex64::new(j.re[r][c], j.im[r][c]));
        DensityMatrix::new(TwiceSpin(j.twice_s), m)
    }
}

impl From<DensityMatrix> for DensityMatrixJson {
    fn from(d: DensityMatrix) -> Self {
        let n = d.dim();
        let row =
            |f: fn(&Complex64) -> f64, r: usize| (0..n).map(|c| f(&d.entries[(r, c)])).collect();
        DensityMatrixJson {
            twice_s: d.twice_s.0,
            re: (0..n).map(|r| row(|z| z.re, r)).collect(),
            im: (0..n).map(|r| row(|z| z.im, r)).collect(),
        }
    }
}

impl DensityMatrix {
    /// Wraps a matrix after checking its shape and finiteness. Physicality is not checked here.
    pub fn new(twice_s: TwiceSpin, entries: CMatrix) -> Result<Self> {
        let n = twice_s.dim();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("density matrix entry".into()));
        }
        Ok(DensityMatrix { twice_s, entries })
    }

    /// The maximally mixed state `I / (2s+1)`.
    pub fn maximally_mixed(twice_s: TwiceSpin) -> Self {
        let n = twice_s.dim();
        DensityMatrix {
            twice_s,
            entries: CMatrix::identity(n, n).unscale(n as f64),
        }
    }

    /// `|psi><psi|` for a (not necessarily normalized) state vector.
    pub fn pure(twice_s: TwiceSpin, psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v = psi.unscale(norm);
        DensityMatrix::new(twice_s, &v * v.adjoint())
    }

    pub fn twice_s(&self) -> TwiceSpin {
        self.twice_s
    }

    pub fn dim(&self) -> usize {
        self.twice_s.dim()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        validate_density(self.twice_s, &self.entries, tol).expect("shape checked at construction")
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        linalg::max_abs(&(&self.entries - &other.entries))
    }
}

/// Outcome of [`validate_density`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `max |A - A^dagger| / 2` over entries.
    pub hermiticity_defect: f64,
    /// `|Tr A - 1|`.
    pub trace_defect: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
    pub hermitian: bool,
    pub normalized: bool,
    pub physical: bool,
}

pub fn validate_density(twice_s: TwiceSpin, m: &CMatrix, tol: f64) -> Result<ValidationReport> {
    let n = twice_s.dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let hermiticity_defect = linalg::max_abs(&(m - m.adjoint())) / 2.0;
    let trace_defect = (m.trace() - Complex64::new(1.0, 0.0)).norm();
    let min_eigenvalue = linalg::min_hermitian_eigenvalue(m);
    let hermitian = hermiticity_defect <= tol;
    let normalized = trace_defect <= tol;
    Ok(ValidationReport {
        hermiticity_defect,
        trace_defect,
        min_eigenvalue,
        hermitian,
        normalized,
        physical: hermitian && normalized && min_eigenvalue >= -tol,
    })
}

/// Seeded random test state.
///
/// Without `purity`, returns `G G^dagger / Tr(G G^dagger)` for a complex Ginibre matrix `G`.
/// With `purity = p` in `[1/(2s+1), 1]`, mixes a random pure state with `I/(2s+1)` so that
/// `Tr rho^2 = p`; `p = 1` is a rank-1 projector.
pub fn random_density(twice_s: TwiceSpin, seed: u64, purity: Option<f64>) -> Result<DensityMatrix> {
    let n = twice_s.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> Complex64 {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    };
    match purity {
        None => {
            let g = CMatrix::from_fn(n, n, |_, _| gauss());
            let gg = &g * g.adjoint();
            let tr = gg.trace().re;
            let rho = linalg::hermitian_part(&gg.unscale(tr));
            DensityMatrix::new(twice_s, rho)
        }
        Some(p) => {
            let floor = 1.0 / n as f64;
            if !(p.is_finite() && p >= floor - 1e-15 && p <= 1.0 + 1e-15) {
                return Err(Error::InvalidArgument(format!(
                    "purity {p} outside [{floor}, 1]"
                )));
            }
            let psi = DVector::from_fn(n, |_, _| gauss());
            let pure = DensityMatrix::pure(twice_s, &psi)?;
            if n == 1 {
                return Ok(pure);
            }
            let weight = ((p - floor).max(0.0) / (1.0 - floor)).sqrt().min(1.0);
            if weight == 1.0 {
                return Ok(pure);
            }
            let mixed = CMatrix::identity(n, n).unscale(n as f64);
            let rho = pure.entries.scale(weight) + mixed.scale(1.0 - weight);
            DensityMatrix::new(twice_s, linalg::hermitian_part(&rho))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ladder_elements() {
        let half = build_spin_operators(TwiceSpin(1));
        assert_eq!(half.s_plus[(0, 1)], c(1.0));
        assert_eq!(half.s_plus.iter().filter(|z| z.norm() > 0.0).count(), 1);

        let one = build_spin_operators(TwiceSpin(2));
        assert!((one.s_plus[(0, 1)].re - 2f64.sqrt()).abs() < 1e-15);

        // s = 3/2: <1/2| s_+ |-1/2> sits at (k=1, k=2).
        let three_half = build_spin_operators(TwiceSpin(3));
        assert_eq!(three_half.s_plus[(1, 2)], c(2.0));
    }

    #[test]
    fn commutators_and_casimir() {
        for ts in 0..=40 {
            let ops = build_spin_operators(TwiceSpin(ts));
            let comm = |a: &CMatrix, b: &CMatrix| a * b - b * a;
            assert!(max_abs(&(comm(&ops.sx, &ops.sy) - ops.sz.map(|z| z * I))) < 1e-12);
            assert!(max_abs(&(comm(&ops.sy, &ops.sz) - ops.sx.map(|z| z * I))) < 1e-12);
            assert!(max_abs(&(comm(&ops.sz, &ops.sx) - ops.sy.map(|z| z * I))) < 1e-12);
            let s = TwiceSpin(ts).spin();
            let n = TwiceSpin(ts).dim();
            let casimir = &ops.sx * &ops.sx + &ops.sy * &ops.sy + &ops.sz * &ops.sz;
            let expect = CMatrix::identity(n, n).scale(s * (s + 1.0));
            assert!(max_abs(&(casimir - expect)) < 1e-10, "twice_s {ts}");
        }
    }

    #[test]
    fn ladder_matrices_are_real_nonnegative() {
        // Consistent with T|mu> = (-1)^{s-mu} |-mu>: no phases in s_+ or s_-.
        for ts in 0..=12 {
            let ops = build_spin_operators(TwiceSpin(ts));
            for z in ops.s_plus.iter().chain(ops.s_minus.iter()) {
                assert_eq!(z.im, 0.0);
                assert!(z.re >= 0.0);
            }
        }
    }

    #[test]
    fn sz_is_diagonal_descending() {
        let ops = build_spin_operators(TwiceSpin(3));
        let diag: Vec<f64> = (0..4).map(|k| ops.sz[(k, k)].re).collect();
        assert_eq!(diag, vec![1.5, 0.5, -0.5, -1.5]);
    }

    #[test]
    fn rotation_identity_at_north_pole() {
        let u = rotation_operator(TwiceSpin(1), Direction::NORTH);
        assert!(max_abs(&(u - CMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn rotation_by_pi_about_y() {
        let u = rotation_operator(TwiceSpin(1), Direction::new(PI, 0.0).unwrap());
        let expect = CMatrix::from_row_slice(2, 2, &[c(0.0), c(-1.0), c(1.0), c(0.0)]);
        assert!(max_abs(&(u - expect)) < 1e-14);
    }

    #[test]
    fn rotation_is_unitary() {
        for ts in [1, 2, 5, 10, 17] {
            let d = Direction::new(1.1, 4.2).unwrap();
            let u = rotation_operator(TwiceSpin(ts), d);
            let n = TwiceSpin(ts).dim();
            assert!(max_abs(&(&u * u.adjoint() - CMatrix::identity(n, n))) < 1e-12);
        }
    }

    #[test]
    fn eigenbasis_along_z_is_standard() {
        let basis = eigenbasis_of_axis(TwiceSpin(2), Direction::NORTH);
        for (k, (twice_mu, v)) in basis.iter().enumerate() {
            assert_eq!(*twice_mu, 2 - 2 * k as i64);
            for (i, z) in v.iter().enumerate() {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((z - c(want)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn eigenbasis_along_x_for_spin_half() {
        let basis = eigenbasis_of_axis(TwiceSpin(1), Direction::new(PI / 2.0, 0.0).unwrap());
        let h = 0.5f64.sqrt();
        assert!((basis[0].1[0] - c(h)).norm() < 1e-14 && (basis[0].1[1] - c(h)).norm() < 1e-14);
        // mu = -1/2 eigenvector is (1, -1)/sqrt2 up to a global phase.
        let v = &basis[1].1;
        let ratio = v[1] / v[0];
        assert!((ratio - c(-1.0)).norm() < 1e-14);
        assert!((v.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stereographic_round_trip() {
        for &(t, p) in &[(0.3, 1.0), (1.5, 6.0), (3.0, 0.1), (PI - 1e-6, 2.0)] {
            let d = Direction::new(t, p).unwrap();
            let back = Direction::from_stereographic(d.stereographic().unwrap()).unwrap();
            assert!((back.theta - t).abs() < 1e-12 && (back.phi - p).abs() < 1e-12);
        }
        assert_eq!(
            Direction::new(PI, 0.0).unwrap().stereographic(),
            Err(Error::SouthPole)
        );
    }

    #[test]
    fn validate_maximally_mixed() {
        let rep = DensityMatrix::maximally_mixed(TwiceSpin(4)).validate(1e-12);
        assert!(rep.hermiticity_defect == 0.0 && rep.trace_defect < 1e-15);
        assert!(rep.physical);
    }

    #[test]
    fn validate_non_hermitian() {
        let mut m = CMatrix::identity(2, 2).unscale(2.0);
        m[(0, 1)] = c(0.3);
        let rep = validate_density(TwiceSpin(1), &m, 1e-12).unwrap();
        assert!((rep.hermiticity_defect - 0.15).abs() < 1e-15);
        assert!(!rep.physical);
    }

    #[test]
    fn validate_projector() {
        let psi = CVector::from_vec(vec![c(1.0), Complex64::new(0.0, 1.0), c(0.5)]);
        let rho = DensityMatrix::pure(TwiceSpin(2), &psi).unwrap();
        let rep = rho.validate(1e-12);
        assert!(rep.min_eigenvalue.abs() < 1e-12 && rep.physical);
    }

    #[test]
    fn validate_wrong_dimension() {
        let m = CMatrix::identity(3, 3);
        assert!(matches!(
            validate_density(TwiceSpin(1), &m, 1e-12),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn random_density_is_deterministic_and_physical() {
        let a = random_density(TwiceSpin(5), 42, None).unwrap();
        let b = random_density(TwiceSpin(5), 42, None).unwrap();
        assert_eq!(a, b);
        assert!(a.validate(1e-12).physical);
        let c = random_density(TwiceSpin(5), 43, None).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_pure_state() {
        let rho = random_density(TwiceSpin(3), 7, Some(1.0)).unwrap();
        let m = rho.entries();
        assert!(max_abs(&(m * m - m)) < 1e-12);
        assert!(rho.validate(1e-12).physical);
        let mixed = random_density(TwiceSpin(3), 7, Some(0.5)).unwrap();
        let purity = (mixed.entries() * mixed.entries()).trace().re;
        assert!((purity - 0.5).abs() < 1e-12);
        assert!(random_density(TwiceSpin(3), 7, Some(0.1)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let rho = random_density(TwiceSpin(2), 3, None).unwrap();
        let text = serde_json::to_string(&rho).unwrap();
        assert!(text.starts_with("{\"twice_s\":2,\"re\":[["));
        let back: DensityMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rho);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        let bad = r#"{"twice_s":2,"re":[[1.0]],"im":[[0.0]]}"#;
        assert!(serde_json::from_str::<DensityMatrix>(bad).is_err());
    }
}
