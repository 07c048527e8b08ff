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

//! Linear inversion of coherent-state probabilities on the circle grid.
//!
//! Pipeline: rescale `p~ = (1+|z|^2)^{2s} p_s`, Fourier transform over the azimuths of each
//! circle, solve one `(2s+1) x (2s+1)` system `M_m rho_m = p_m` per Fourier index `m`,
//! then undo the binomial scaling of the matrix entries.
//!
//! Block `m` carries the entries `rho~_{k+m, k}` (lower diagonal `m`) and, for the wrapped
//! columns `k > 2s - m`, the entries `rho~_{k+m-(2s+1), k}` (upper diagonal `2s+1-m`).
//! All blocks are solved independently; Hermiticity of the result is a consistency check.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_grid, GridSpec, MeasurementGrid};
use crate::linalg::{self, CMatrix, CVector};
use crate::measurement::CoherentRecord;
use crate::policy::NumericPolicy;
use crate::spin::{DensityMatrix, TwiceSpin};
use crate::vandermonde;

/// Angular tolerance when matching record directions to the grid.
const DIRECTION_TOL: f64 = 1e-9;

/// Row of the full linear map `p~ = sum_{k',k} conj(z)^{k'} z^k rho~_{k'k}`,
/// indexed `k' * (2s+1) + k`.
pub fn forward_design_row(twice_s: TwiceSpin, z: Complex64) -> Vec<Complex64> {
    let n = twice_s.dim();
    let zc = z.conj();
    let mut row = Vec::with_capacity(n * n);
    for kp in 0..n {
        for k in 0..n {
            row.push(zc.powi(kp as i32) * z.powi(k as i32));
        }
    }
    row
}

/// Matrix entries rescaled by `sqrt(C(2s,k') C(2s,k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledRho {
    pub twice_s: TwiceSpin,
    pub entries: CMatrix,
}

fn binomial_weights(twice_s: TwiceSpin) -> Vec<f64> {
    (0..twice_s.dim() as u32)
        .map(|k| linalg::binomial(twice_s.twice(), k).sqrt())
        .collect()
}

impl RescaledRho {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let w = binomial_weights(rho.twice_s());
        let e = rho.entries();
        RescaledRho {
            twice_s: rho.twice_s(),
            entries: CMatrix::from_fn(e.nrows(), e.ncols(), |i, j| e[(i, j)] * w[i] * w[j]),
        }
    }

    /// Undoes the binomial scaling. The result is not checked for physicality.
    pub fn to_matrix(&self) -> CMatrix {
        let w = binomial_weights(self.twice_s);
        let e = &self.entries;
        CMatrix::from_fn(e.nrows(), e.ncols(), |i, j| e[(i, j)] / (w[i] * w[j]))
    }
}

/// Rescaled probabilities `p~_{qr}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledData {
    pub twice_s: TwiceSpin,
    /// `p_tilde[q][r_index]`.
    pub p_tilde: Vec<Vec<f64>>,
}

/// Azimuthal Fourier coefficients `p~_{qm}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierData {
    pub twice_s: TwiceSpin,
    /// `p_hat[q][m]`, `m = 0..2s`.
    pub p_hat: Vec<Vec<Complex64>>,
}

/// `p~_{qr} = (1 + R_q^2)^{2s} p_s(n_qr)`. Requires every grid point exactly once.
pub fn rescale(records: &[CoherentRecord], grid: &MeasurementGrid) -> Result<RescaledData> {
    let spec = &grid.spec;
    let n = spec.twice_s().dim();
    if records.len() != n * n {
        return Err(Error::IncompleteData(format!(
            "expected {} probabilities, got {}",
            n * n,
            records.len()
        )));
    }
    let mut slots: Vec<Option<f64>> = vec![None; n * n];
    for rec in records {
        if rec.q >= n || rec.r_index >= n {
            return Err(Error::IncompleteData(format!(
                "grid label (q = {}, r = {}) out of range",
                rec.q, rec.r_index
            )));
        }
        if !rec.p_s.is_finite() {
            return Err(Error::NonFinite(format!(
                "probability at (q = {}, r = {})",
                rec.q, rec.r_index
            )));
        }
        let idx = grid.index(rec.q, rec.r_index);
        let want = grid.points[idx].direction;
        let dphi = (rec.phi - want.phi + PI).rem_euclid(2.0 * PI) - PI;
        if (rec.theta - want.theta).abs() > DIRECTION_TOL || dphi.abs() > DIRECTION_TOL {
            return Err(Error::IncompleteData(format!(
                "record (q = {}, r = {}) direction ({}, {}) does not match grid ({}, {})",
                rec.q, rec.r_index, rec.theta, rec.phi, want.theta, want.phi
            )));
        }
        if slots[idx].replace(rec.p_s).is_some() {
            return Err(Error::IncompleteData(format!(
                "duplicate grid point (q = {}, r = {})",
                rec.q, rec.r_index
            )));
        }
    }
    let two_s = spec.twice_s().twice() as i32;
    let p_tilde = (0..n)
        .map(|q| {
            let factor = (1.0 + spec.radius(q).powi(2)).powi(two_s);
            (0..n)
                .map(|r| factor * slots[grid.index(q, r)].expect("all slots filled"))
                .collect()
        })
        .collect();
    Ok(RescaledData {
        twice_s: spec.twice_s(),
        p_tilde,
    })
}

/// `p~_{qm} = (1/(2s+1)) sum_r exp(i m phi_qr) p~_{qr}`, using the shifted azimuths.
pub fn azimuthal_dft(data: &RescaledData, spec: &GridSpec) -> FourierData {
    let n = data.twice_s.dim();
    let p_hat = (0..n)
        .map(|q| {
            (0..n)
                .map(|m| {
                    data.p_tilde[q]
                        .iter()
                        .enumerate()
                        .map(|(r, &p)| Complex64::from_polar(p, m as f64 * spec.azimuth(q, r)))
                        .sum::<Complex64>()
                        / n as f64
                })
                .collect()
        })
        .collect();
    FourierData {
        twice_s: data.twice_s,
        p_hat,
    }
}

/// Matrix position `(k', k)` of unknown `k` in block `m`.
pub fn block_unknown(twice_s: TwiceSpin, m: usize, k: usize) -> (usize, usize) {
    let n = twice_s.dim();
    if k + m < n {
        (k + m, k)
    } else {
        (k + m - n, k)
    }
}

fn block_exponent(n: usize, m: usize, k: usize) -> i64 {
    let e = (2 * k + m) as i64;
    if k + m < n {
        e
    } else {
        e - n as i64
    }
}

/// `(M_m)_{qk} = R_q^{2k+m}` for `k <= 2s-m`, `R_q^{2k+m-(2s+1)} exp(i 2 pi q delta)` otherwise.
pub fn assemble_block(spec: &GridSpec, m: usize) -> CMatrix {
    let n = spec.twice_s().dim();
    assert!(m < n, "block index {m} out of range");
    CMatrix::from_fn(n, n, |q, k| {
        let modulus = spec.radius_pow(q, block_exponent(n, m, k));
        if k + m < n {
            Complex64::new(modulus, 0.0)
        } else {
            Complex64::from_polar(modulus, 2.0 * PI * q as f64 * spec.delta())
        }
    })
}

/// Nodes `r_k = r^{2k+m}` (unwrapped) or `r^{2k+m-(2s+1)}` (wrapped).
pub fn block_nodes(spec: &GridSpec, m: usize) -> Vec<f64> {
    let n = spec.twice_s().dim();
    (0..n)
        .map(|k| spec.r().powf(block_exponent(n, m, k) as f64))
        .collect()
}

/// Factorization `(M_m)_{qk} = a_k y_k^q` with `a_k = r_k^s` and
/// `y_k = r_k^{-1}` times `exp(i 2 pi delta)` on wrapped columns.
pub fn block_factors(spec: &GridSpec, m: usize) -> (Vec<f64>, Vec<Complex64>) {
    let n = spec.twice_s().dim();
    let s = spec.twice_s().spin();
    (0..n)
        .map(|k| {
            let e = block_exponent(n, m, k) as f64;
            let a = spec.r().powf(s * e);
            let y = spec.r().powf(-e);
            let y = if k + m < n {
                Complex64::new(y, 0.0)
            } else {
                Complex64::from_polar(y, 2.0 * PI * spec.delta())
            };
            (a, y)
        })
        .unzip()
}

/// `det M_m = prod_k a_k prod_{k'<k} (y_k - y_{k'})`; reduces to the closed form of
/// [`vandermonde::vandermonde_det`] on the nodes of [`block_nodes`] when `delta = 0`.
pub fn block_determinant(spec: &GridSpec, m: usize) -> Complex64 {
    let (a, y) = block_factors(spec, m);
    let mut det = Complex64::new(a.iter().product(), 0.0);
    for (i, yi) in y.iter().enumerate() {
        for yk in &y[i + 1..] {
            det *= yk - yi;
        }
    }
    det
}

/// One decoupled block `M_m rho_m = p_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    pub m: usize,
    pub matrix: CMatrix,
    pub rhs: CVector,
}

impl BlockSystem {
    pub fn new(spec: &GridSpec, fourier: &FourierData, m: usize) -> Self {
        let n = spec.twice_s().dim();
        BlockSystem {
            m,
            matrix: assemble_block(spec, m),
            rhs: CVector::from_fn(n, |q, _| fourier.p_hat[q][m]),
        }
    }
}

/// Solution of one block together with its 2-norm condition estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSolution {
    pub m: usize,
    pub unknowns: CVector,
    pub condition: f64,
}

/// Row factors `(1+R_q^2)^{-2s}` and column factors `sqrt(C(2s,k') C(2s,k))` of block `m`.
///
/// Applied on both sides they express the block in the units of the raw probabilities and
/// the unscaled matrix entries, which removes the spread of magnitudes between circles.
pub fn block_scaling(spec: &GridSpec, m: usize) -> (Vec<f64>, Vec<f64>) {
    let ts = spec.twice_s();
    let n = ts.dim();
    let w = binomial_weights(ts);
    let rows = (0..n)
        .map(|q| (1.0 + spec.radius(q).powi(2)).powi(-(ts.twice() as i32)))
        .collect();
    let cols = (0..n)
        .map(|k| {
            let (kp, kk) = block_unknown(ts, m, k);
            w[kp] * w[kk]
        })
        .collect();
    (rows, cols)
}

/// `diag(rows) M_m diag(cols)` with the factors of [`block_scaling`].
pub fn equilibrated_block(spec: &GridSpec, m: usize) -> CMatrix {
    let (rows, cols) = block_scaling(spec, m);
    let mut b = assemble_block(spec, m);
    for q in 0..rows.len() {
        for k in 0..cols.len() {
            b[(q, k)] *= rows[q] * cols[k];
        }
    }
    b
}

/// Pivoted LU solve of one block in equilibrated form. Refuses blocks whose condition
/// estimate exceeds the policy threshold.
pub fn solve_block(
    block: &BlockSystem,
    spec: &GridSpec,
    policy: &NumericPolicy,
) -> Result<BlockSolution> {
    let (rows, cols) = block_scaling(spec, block.m);
    let mut scaled = block.matrix.clone();
    for q in 0..rows.len() {
        for k in 0..cols.len() {
            scaled[(q, k)] *= rows[q] * cols[k];
        }
    }
    let condition = linalg::condition_number(&scaled);
    let singular = || Error::SingularBlock {
        m: block.m,
        delta: spec.delta(),
        r: spec.r(),
        condition,
    };
    if !condition.is_finite() || condition > policy.condition_threshold {
        return Err(singular());
    }
    let rhs = CVector::from_fn(rows.len(), |q, _| block.rhs[q] * rows[q]);
    let mut unknowns = scaled.full_piv_lu().solve(&rhs).ok_or_else(singular)?;
    for (x, c) in unknowns.iter_mut().zip(&cols) {
        *x *= *c;
    }
    Ok(BlockSolution {
        m: block.m,
        unknowns,
        condition,
    })
}

/// Solves block `m` with the explicit Vandermonde inverse instead of a factorization.
/// Intended for cross-validation at small spin.
pub fn solve_block_explicit(spec: &GridSpec, m: usize, rhs: &CVector) -> CVector {
    let (a, y) = block_factors(spec, m);
    let inv = vandermonde::vandermonde_inverse(&y);
    let mut x = inv * rhs;
    for (xi, ai) in x.iter_mut().zip(&a) {
        *xi /= *ai;
    }
    x
}

/// Post-processing switches for [`reconstruct`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReconstructOptions {
    /// Divide by the trace.
    pub renormalize: bool,
    /// Clip negative eigenvalues, then renormalize.
    pub project_psd: bool,
    pub policy: NumericPolicy,
}

/// Consistency indicators of a reconstruction.
///
/// `hermiticity_defect` is measured before symmetrization; `trace_defect` and
/// `min_eigenvalue` describe the symmetrized estimate before any optional post-processing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub trace_defect: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub block_condition: Vec<f64>,
    pub renormalized: bool,
    pub psd_projected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub rho: DensityMatrix,
    pub diagnostics: Diagnostics,
}

/// Solves every block and reassembles the rescaled matrix. No symmetrization.
pub fn solve_all_blocks(
    fourier: &FourierData,
    spec: &GridSpec,
    policy: &NumericPolicy,
) -> Result<(RescaledRho, Vec<f64>)> {
    let ts = spec.twice_s();
    let n = ts.dim();
    let mut rho_tilde = CMatrix::zeros(n, n);
    let mut conditions = Vec::with_capacity(n);
    for m in 0..n {
        let sol = solve_block(&BlockSystem::new(spec, fourier, m), spec, policy)?;
        for (k, v) in sol.unknowns.iter().enumerate() {
            rho_tilde[block_unknown(ts, m, k)] = *v;
        }
        conditions.push(sol.condition);
    }
    Ok((
        RescaledRho {
            twice_s: ts,
            entries: rho_tilde,
        },
        conditions,
    ))
}

/// Reconstructs `rho` from the `(2s+1)^2` coherent-state probabilities of the grid.
pub fn reconstruct(
    records: &[CoherentRecord],
    spec: &GridSpec,
    options: &ReconstructOptions,
) -> Result<Reconstruction> {
    let grid = build_grid(spec);
    let data = rescale(records, &grid)?;
    let fourier = azimuthal_dft(&data, spec);
    let (rho_tilde, block_condition) = solve_all_blocks(&fourier, spec, &options.policy)?;
    let raw = rho_tilde.to_matrix();
    let (entries, mut diagnostics) = finish(raw, options);
    diagnostics.block_condition = block_condition;
    Ok(Reconstruction {
        rho: DensityMatrix::new(spec.twice_s(), entries)?,
        diagnostics,
    })
}

/// Symmetrizes, records diagnostics and applies the optional post-processing.
pub(crate) fn finish(raw: CMatrix, options: &ReconstructOptions) -> (CMatrix, Diagnostics) {
    let hermiticity_defect = linalg::max_abs(&(&raw - raw.adjoint())) / 2.0;
    let mut rho = linalg::hermitian_part(&raw);
    let trace_defect = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
    let min_eigenvalue = linalg::min_hermitian_eigenvalue(&rho);
    let mut renormalized = false;
    let mut psd_projected = false;
    if options.project_psd {
        rho = project_psd(&rho);
        psd_projected = true;
        renormalized = true;
    } else if options.renormalize {
        let tr = rho.trace().re;
        if tr != 0.0 {
            rho.unscale_mut(tr);
            renormalized = true;
        }
    }
    (
        rho,
        Diagnostics {
            trace_defect,
            hermiticity_defect,
            min_eigenvalue,
            block_condition: Vec::new(),
            renormalized,
            psd_projected,
        },
    )
}

/// Nearest PSD matrix by eigenvalue clipping, renormalized to unit trace.
pub fn project_psd(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = linalg::hermitian_eigen(m);
    let mut scaled = vecs.clone();
    for (c, &v) in vals.iter().enumerate() {
        let w = v.max(0.0);
        scaled.column_mut(c).iter_mut().for_each(|z| *z *= w);
    }
    let out = linalg::hermitian_part(&(scaled * vecs.adjoint()));
    let tr = out.trace().re;
    if tr > 0.0 {
        out.unscale(tr)
    } else {
        let n = m.nrows();
        CMatrix::identity(n, n).unscale(n as f64)
    }
}

/// Condition numbers of every equilibrated block (see [`equilibrated_block`]) for one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub twice_s: TwiceSpin,
    pub r: f64,
    pub delta: f64,
    pub block_condition: Vec<f64>,
    pub worst: f64,
}

pub fn condition_report(spec: &GridSpec) -> ConditionReport {
    let n = spec.twice_s().dim();
    let block_condition: Vec<f64> = (0..n)
        .map(|m| linalg::condition_number(&equilibrated_block(spec, m)))
        .collect();
    let worst = block_condition.iter().copied().fold(1.0, f64::max);
    ConditionReport {
        twice_s: spec.twice_s(),
        r: spec.r(),
        delta: spec.delta(),
        block_condition,
        worst,
    }
}

/// Condition reports over a list of `r` values; invalid `r` (such as `r = 1`) are skipped.
pub fn condition_scan(twice_s: TwiceSpin, delta: f64, rs: &[f64]) -> Vec<ConditionReport> {
    rs.iter()
        .filter_map(|&r| GridSpec::new(twice_s, r, delta).ok())
        .map(|spec| condition_report(&spec))
        .collect()
}

/// `r` with the smallest worst-block condition number in a scan.
pub fn recommended_r(reports: &[ConditionReport]) -> Option<f64> {
    reports
        .iter()
        .min_by(|a, b| a.worst.total_cmp(&b.worst))
        .map(|rep| rep.r)
}
