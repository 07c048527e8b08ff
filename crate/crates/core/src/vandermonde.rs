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

//! Closed-form Vandermonde determinant and explicit inverse.

use num_complex::Complex64;

use crate::linalg::CMatrix;
use crate::spin::TwiceSpin;

/// Determinant of the matrix with entries `x_k^{s-q}` (`q, k = 0..2s`):
/// `(prod_k x_k)^{-s} prod_{k' < k} (x_{k'} - x_k)`.
///
/// Non-integer powers use the principal branch, matching entries `exp((s-q) Log x_k)`.
pub fn vandermonde_det(nodes: &[Complex64], twice_s: TwiceSpin) -> Complex64 {
    // Accumulated as a sum of logarithms: the partial products overflow long before the
    // determinant does once the nodes spread over several decades.
    let s = twice_s.spin();
    let mut log_det = Complex64::new(0.0, 0.0);
    for x in nodes {
        log_det -= s * x.ln();
    }
    for (i, xi) in nodes.iter().enumerate() {
        for xk in &nodes[i + 1..] {
            let diff = xi - xk;
            if diff == Complex64::new(0.0, 0.0) {
                return diff;
            }
            log_det += diff.ln();
        }
    }
    log_det.exp()
}

/// The matrix `x_k^{s-q}` whose determinant [`vandermonde_det`] evaluates.
pub fn generalized_vandermonde(nodes: &[Complex64], twice_s: TwiceSpin) -> CMatrix {
    let s = twice_s.spin();
    CMatrix::from_fn(nodes.len(), nodes.len(), |q, k| nodes[k].powf(s - q as f64))
}

/// Explicit inverse of `W` with `W[j][k] = x_k^j`, built from the Lagrange basis:
/// row `k` of `W^{-1}` holds the monomial coefficients of `prod_{i != k} (t - x_i) / (x_k - x_i)`.
pub fn vandermonde_inverse(nodes: &[Complex64]) -> CMatrix {
    let n = nodes.len();
    let zero = Complex64::new(0.0, 0.0);
    // Master polynomial prod_i (t - x_i), coefficients in ascending order.
    let mut master = vec![zero; n + 1];
    master[0] = Complex64::new(1.0, 0.0);
    for (deg, &x) in nodes.iter().enumerate() {
        for j in (1..=deg + 1).rev() {
            master[j] = master[j - 1] - x * master[j];
        }
        master[0] = -x * master[0];
    }
    let mut inv = CMatrix::zeros(n, n);
    for (k, &xk) in nodes.iter().enumerate() {
        // Synthetic division of the master polynomial by (t - x_k).
        let mut quotient = vec![zero; n];
        let mut carry = master[n];
        for j in (0..n).rev() {
            quotient[j] = carry;
            carry = master[j] + xk * carry;
        }
        let denom: Complex64 = nodes
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &xi)| xk - xi)
            .product();
        for j in 0..n {
            inv[(k, j)] = quotient[j] / denom;
        }
    }
    inv
}
