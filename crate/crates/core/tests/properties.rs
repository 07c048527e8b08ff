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

//! Randomized invariants of the reconstruction pipeline.

use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;

use spintomo::coherent::{coherent_probability, outcome_distribution, sample_counts};
use spintomo::grid::{build_grid, default_delta, GridSpec};
use spintomo::linalg::{self, CMatrix, CVector};
use spintomo::measurement::{exact_records, simulate_coherent, MeasurementSet};
use spintomo::multipole::{clebsch_gordan, multipoles_to_rho, rho_to_multipoles};
use spintomo::recon::{
    azimuthal_dft, block_unknown, reconstruct, rescale, solve_block, solve_block_explicit,
    BlockSystem, ReconstructOptions,
};
use spintomo::spin::{random_density, rotation_operator, DensityMatrix, Direction, TwiceSpin};
use spintomo::vandermonde::vandermonde_inverse;
use spintomo::{Error, NumericPolicy};

fn direction() -> impl Strategy<Value = Direction> {
    (0.0..3.1f64, 0.0..TAU).prop_map(|(t, p)| Direction::new(t, p).unwrap())
}

fn raw_reconstruction(rho: &DensityMatrix, spec: &GridSpec, scale: f64) -> CMatrix {
    let grid = build_grid(spec);
    let mut recs = exact_records(rho, &grid).unwrap();
    for rec in &mut recs {
        rec.p_s *= scale;
    }
    reconstruct(&recs, spec, &ReconstructOptions::default())
        .unwrap()
        .rho
        .into_entries()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn probability_is_linear_in_the_state(
        ts in 1u32..=8, a in 0.0..1.0f64, s1 in any::<u64>(), s2 in any::<u64>(), d in direction()
    ) {
        let ts = TwiceSpin(ts);
        let r1 = random_density(ts, s1, None).unwrap();
        let r2 = random_density(ts, s2, None).unwrap();
        let mix = DensityMatrix::new(ts, r1.entries().scale(a) + r2.entries().scale(1.0 - a)).unwrap();
        let lhs = coherent_probability(&mix, d).unwrap();
        let rhs = a * coherent_probability(&r1, d).unwrap() + (1.0 - a) * coherent_probability(&r2, d).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn probability_is_rotation_covariant(ts in 1u32..=8, seed in any::<u64>(), d in direction()) {
        // p_rho(n) equals the top diagonal entry of R(n)^dagger rho R(n).
        let ts = TwiceSpin(ts);
        let rho = random_density(ts, seed, None).unwrap();
        let u = rotation_operator(ts, d);
        let rotated = u.adjoint() * rho.entries() * &u;
        let p = coherent_probability(&rho, d).unwrap();
        prop_assert!((rotated[(0, 0)].re - p).abs() < 1e-12);
        let dist = outcome_distribution(&rho, d).unwrap();
        prop_assert!((dist.probs[0] - p).abs() < 1e-12);
        for (k, q) in dist.probs.iter().enumerate() {
            prop_assert!((rotated[(k, k)].re - q).abs() < 1e-12);
        }
        prop_assert!((dist.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_data_round_trips(ts in 1u32..=10, seed in any::<u64>(), pure in any::<bool>()) {
        let ts = TwiceSpin(ts);
        let purity = pure.then_some(1.0);
        let rho = random_density(ts, seed, purity).unwrap();
        let spec = GridSpec::with_defaults(ts);
        let out = reconstruct(&exact_records(&rho, &build_grid(&spec)).unwrap(), &spec, &ReconstructOptions::default())
            .unwrap();
        prop_assert!(out.rho.max_abs_diff(&rho) < 1e-8);
        prop_assert!(out.diagnostics.hermiticity_defect < 1e-9);
    }

    #[test]
    fn reconstruction_is_linear_in_the_data(ts in 1u32..=6, seed in any::<u64>(), scale in 0.1..3.0f64) {
        let ts = TwiceSpin(ts);
        let rho = random_density(ts, seed, None).unwrap();
        let spec = GridSpec::with_defaults(ts);
        let scaled = raw_reconstruction(&rho, &spec, scale);
        prop_assert!(linalg::max_abs(&(scaled - rho.entries().scale(scale))) < 1e-9 * scale.max(1.0));
    }

    #[test]
    fn explicit_inverse_matches_lu(ts in 1u32..=4, r in 1.3..3.0f64, frac in 0.05..1.0f64, seed in any::<u64>()) {
        let ts = TwiceSpin(ts);
        let spec = GridSpec::new(ts, r, frac / ts.dim() as f64).unwrap();
        let rho = random_density(ts, seed, None).unwrap();
        let grid = build_grid(&spec);
        let fourier = azimuthal_dft(&rescale(&exact_records(&rho, &grid).unwrap(), &grid).unwrap(), &spec);
        for m in 0..ts.dim() {
            let block = BlockSystem::new(&spec, &fourier, m);
            let lu = solve_block(&block, &spec, &NumericPolicy { condition_threshold: f64::INFINITY, ..Default::default() })
                .unwrap()
                .unknowns;
            let explicit = solve_block_explicit(&spec, m, &block.rhs);
            let scale = lu.iter().map(|z| z.norm()).fold(1.0, f64::max);
            prop_assert!((lu - explicit).iter().all(|z| z.norm() < 1e-7 * scale));
        }
    }

    #[test]
    fn vandermonde_inverse_is_an_inverse(nodes in prop::collection::vec((0.3..2.0f64, 0.0..TAU), 1..7)) {
        let nodes: Vec<Complex64> = nodes.iter().map(|&(m, a)| Complex64::from_polar(m, a)).collect();
        // Skip near-coincident nodes.
        for (i, a) in nodes.iter().enumerate() {
            for b in &nodes[i + 1..] {
                prop_assume!((a - b).norm() > 0.2);
            }
        }
        let n = nodes.len();
        let w = CMatrix::from_fn(n, n, |j, k| nodes[k].powi(j as i32));
        let prod = vandermonde_inverse(&nodes) * w;
        prop_assert!(linalg::max_abs(&(prod - CMatrix::identity(n, n))) < 1e-9);
    }

    #[test]
    fn multipole_expansion_round_trips(ts in 1u32..=8, seed in any::<u64>()) {
        let ts = TwiceSpin(ts);
        let rho = random_density(ts, seed, None).unwrap();
        let back = multipoles_to_rho(&rho_to_multipoles(&rho).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn clebsch_gordan_columns_are_orthonormal(tj1 in 0i32..=8, tj2 in 0i32..=8, pick in 0usize..64) {
        // sum_{m1 m2} <j1 m1 j2 m2|J M><j1 m1 j2 m2|J' M> = delta_{JJ'}.
        let js: Vec<i32> = ((tj1 - tj2).abs()..=tj1 + tj2).step_by(2).collect();
        let tj = js[pick % js.len()];
        for &tjp in &js {
            for tm in (-tj.min(tjp)..=tj.min(tjp)).step_by(2) {
                let mut sum = 0.0;
                for tm1 in (-tj1..=tj1).step_by(2) {
                    let tm2 = tm - tm1;
                    if tm2.abs() <= tj2 {
                        sum += clebsch_gordan(tj1, tm1, tj2, tm2, tj, tm) * clebsch_gordan(tj1, tm1, tj2, tm2, tjp, tm);
                    }
                }
                let want = if tj == tjp { 1.0 } else { 0.0 };
                prop_assert!((sum - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn measurement_files_reserialize_identically(ts in 1u32..=5, seed in any::<u64>(), shots in 0u64..2000) {
        let ts = TwiceSpin(ts);
        let rho = random_density(ts, seed, None).unwrap();
        let set = simulate_coherent(&rho, &GridSpec::with_defaults(ts), shots, seed, &NumericPolicy::DEFAULT).unwrap();
        let text = set.to_json();
        let back = MeasurementSet::from_json(&text).unwrap();
        prop_assert_eq!(&back, &set);
        prop_assert_eq!(back.to_json(), text);
        let rho_text = serde_json::to_string(&rho).unwrap();
        let rho_back: DensityMatrix = serde_json::from_str(&rho_text).unwrap();
        prop_assert_eq!(rho_back, rho);
    }

    #[test]
    fn counts_are_conserved(ts in 1u32..=8, seed in any::<u64>(), shots in 0u64..100_000, d in direction()) {
        let ts = TwiceSpin(ts);
        let dist = outcome_distribution(&random_density(ts, seed, None).unwrap(), d).unwrap();
        let counts = sample_counts(&dist, shots, seed).unwrap();
        prop_assert_eq!(counts.counts.len(), ts.dim());
        prop_assert_eq!(counts.counts.iter().sum::<u64>(), shots);
        prop_assert_eq!(sample_counts(&dist, shots, seed).unwrap(), counts);
    }
}

#[test]
fn pure_state_never_yields_forbidden_outcomes() {
    let ts = TwiceSpin(4);
    let mut psi = CVector::zeros(ts.dim());
    psi[0] = Complex64::new(1.0, 0.0);
    let rho = DensityMatrix::pure(ts, &psi).unwrap();
    let dist = outcome_distribution(&rho, Direction::NORTH).unwrap();
    let counts = sample_counts(&dist, 50_000, 3).unwrap();
    assert_eq!(counts.counts[0], 50_000);
    assert!(counts.counts[1..].iter().all(|&c| c == 0));
}

#[test]
fn perturbation_response_is_linear() {
    // The error from a fixed perturbation direction scales exactly with its size.
    for ts in [2u32, 3, 5] {
        let ts = TwiceSpin(ts);
        let spec = GridSpec::with_defaults(ts);
        let rho = random_density(ts, 9, None).unwrap();
        let grid = build_grid(&spec);
        let exact = exact_records(&rho, &grid).unwrap();
        let direction: Vec<f64> = (0..exact.len())
            .map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0)
            .collect();
        let slopes: Vec<f64> = [1e-6, 1e-5, 1e-4]
            .iter()
            .map(|&eps| {
                let mut recs = exact.clone();
                for (rec, d) in recs.iter_mut().zip(&direction) {
                    rec.p_s += eps * d;
                }
                let out = reconstruct(&recs, &spec, &ReconstructOptions::default()).unwrap();
                out.rho.max_abs_diff(&rho) / eps
            })
            .collect();
        for s in &slopes {
            assert!(
                (s / slopes[0] - 1.0).abs() < 0.01,
                "twice_s {ts}: {slopes:?}"
            );
        }
    }
}

#[test]
fn fermionic_grids_need_the_shift() {
    for ts in [1u32, 3, 5, 7, 9] {
        let ts = TwiceSpin(ts);
        let r = spintomo::grid::default_r(ts);
        let rho = random_density(ts, 21, None).unwrap();
        let unshifted = GridSpec::new(ts, r, 0.0).unwrap();
        let err = reconstruct(
            &exact_records(&rho, &build_grid(&unshifted)).unwrap(),
            &unshifted,
            &ReconstructOptions::default(),
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::SingularBlock { .. }),
            "twice_s {ts}: {err}"
        );
        for frac in [0.25, 0.5, 1.0] {
            let spec = GridSpec::new(ts, r, frac / ts.dim() as f64).unwrap();
            let out = reconstruct(
                &exact_records(&rho, &build_grid(&spec)).unwrap(),
                &spec,
                &ReconstructOptions::default(),
            )
            .unwrap();
            assert!(
                out.rho.max_abs_diff(&rho) < 1e-8,
                "twice_s {ts}, delta fraction {frac}"
            );
        }
        assert_eq!(default_delta(ts), 1.0 / ts.dim() as f64);
    }
}

#[test]
fn high_spin_round_trip_within_looser_bound() {
    for ts in 11..=16 {
        let ts = TwiceSpin(ts);
        let spec = GridSpec::with_defaults(ts);
        let grid = build_grid(&spec);
        for seed in 0..20 {
            let rho = random_density(ts, seed, None).unwrap();
            let out = reconstruct(
                &exact_records(&rho, &grid).unwrap(),
                &spec,
                &ReconstructOptions::default(),
            )
            .unwrap();
            assert!(
                out.rho.max_abs_diff(&rho) < 1e-6,
                "twice_s {ts} seed {seed}"
            );
        }
    }
}

#[test]
fn every_matrix_entry_is_owned_by_one_block() {
    for ts in 1..=9 {
        let ts = TwiceSpin(ts);
        let n = ts.dim();
        let mut seen = vec![0; n * n];
        for m in 0..n {
            for k in 0..n {
                let (i, j) = block_unknown(ts, m, k);
                seen[i * n + j] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }
}
