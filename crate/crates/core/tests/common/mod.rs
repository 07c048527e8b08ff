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

//! Oracles shared by the integration tests.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Determinant by fraction-free Gaussian elimination (Bareiss) in exact arithmetic.
pub fn exact_determinant(mut a: Vec<Vec<BigRational>>) -> BigRational {
    let n = a.len();
    let mut sign = BigRational::one();
    let mut prev = BigRational::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigRational::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * prev
}

/// `(num/den)^e` for any integer `e`.
pub fn rational_pow(num: i64, den: i64, e: i64) -> BigRational {
    let base = BigRational::new(BigInt::from(num), BigInt::from(den));
    let p = base.pow(e.unsigned_abs() as i32);
    if e < 0 {
        p.recip()
    } else {
        p
    }
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact determinant of `x_k^{s-q}` for nodes `x_k = (num/den)^{e_k}`.
///
/// Every product `e_k (s - q)` must be an integer, which holds for integer `s` and for
/// even exponents at half-integer `s`.
pub fn exact_generalized_vandermonde_det(
    num: i64,
    den: i64,
    exponents: &[i64],
    twice_s: u32,
) -> f64 {
    let n = exponents.len();
    let rows = (0..n)
        .map(|q| {
            exponents
                .iter()
                .map(|&e| {
                    let twice = e * (i64::from(twice_s) - 2 * q as i64);
                    assert!(twice % 2 == 0, "non-integer power");
                    rational_pow(num, den, twice / 2)
                })
                .collect()
        })
        .collect();
    to_f64(&exact_determinant(rows))
}
