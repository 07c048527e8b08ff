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

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use spintomo::coherent::outcome_distribution;
use spintomo::grid::{default_delta, default_r, GridSpec};
use spintomo::measurement::{
    reconstruct_measurements, simulate_coherent, simulate_multipole, MeasurementSet,
};
use spintomo::multipole::{
    aliasing_defect, cone_design_matrix, pi_l_from_probabilities, reconstruct_multipole,
    ConeDesign, MAX_TWICE_S,
};
use spintomo::recon::{self, condition_report, ReconstructOptions};
use spintomo::spin::{random_density, DensityMatrix, TwiceSpin};
use spintomo::{Error, NumericPolicy};

use crate::{GridArgs, ModeArg};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Singular(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Singular(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Singular(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularBlock { .. } | Error::RankDeficient { .. } => {
                CliError::Singular(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
    }
}

fn spin(twice_s: u32) -> CliResult<TwiceSpin> {
    if twice_s == 0 || twice_s > MAX_TWICE_S {
        return Err(CliError::Input(format!(
            "--twice-s must lie in 1..={MAX_TWICE_S}, got {twice_s}"
        )));
    }
    Ok(TwiceSpin(twice_s))
}

fn grid_spec(twice_s: TwiceSpin, grid: GridArgs) -> CliResult<GridSpec> {
    let r = grid.r.unwrap_or_else(|| default_r(twice_s));
    let delta = grid.delta.unwrap_or_else(|| default_delta(twice_s));
    Ok(GridSpec::new(twice_s, r, delta)?)
}

/// Shortest round-trip decimal form; non-finite values as `inf`, `-inf`, `nan`.
fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite floats serialize")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn with_newline(mut text: String) -> String {
    text.push('\n');
    text
}

pub fn simulate(
    state: &Path,
    grid: GridArgs,
    shots: u64,
    seed: u64,
    mode: ModeArg,
    out: Option<&Path>,
    policy: &NumericPolicy,
) -> CliResult<()> {
    let rho: DensityMatrix = serde_json::from_str(&read_text(state)?)
        .map_err(|e| CliError::Input(format!("bad state file: {e}")))?;
    spin(rho.twice_s().twice())?;
    let set = match mode {
        ModeArg::Coherent => {
            let spec = grid_spec(rho.twice_s(), grid)?;
            let mut set = simulate_coherent(&rho, &spec, shots, seed, policy)?;
            let report = rho.validate(policy.structural_tol);
            if shots == 0
                && report.hermitian
                && report.normalized
                && report.min_eigenvalue >= -policy.eigen_tol
            {
                // Exact probabilities of a physical state can round to just below 0 or above 1.
                for rec in &mut set.records {
                    rec.p_s = rec.p_s.clamp(0.0, 1.0);
                }
            }
            set
        }
        ModeArg::Multipole => {
            if grid.r.is_some() || grid.delta.is_some() {
                return Err(CliError::Input(
                    "--r and --delta apply to coherent mode only".into(),
                ));
            }
            simulate_multipole(
                &rho,
                &ConeDesign::corrected(rho.twice_s()),
                shots,
                seed,
                policy,
            )?
        }
    };
    write_output(out, &with_newline(set.to_json()))
}

pub fn reconstruct(
    measurements: &Path,
    renormalize: bool,
    project_psd: bool,
    out: Option<&Path>,
    diagnostics: Option<&Path>,
    policy: &NumericPolicy,
) -> CliResult<()> {
    let set = MeasurementSet::from_json(&read_text(measurements)?)?;
    let options = ReconstructOptions {
        renormalize,
        project_psd,
        policy: *policy,
    };
    let result = reconstruct_measurements(&set, &options)?;
    let diag = &result.diagnostics;
    if !project_psd && diag.min_eigenvalue < -policy.eigen_tol {
        eprintln!(
            "warning: estimate has a negative eigenvalue {} (use --project-psd to clip)",
            diag.min_eigenvalue
        );
    }
    write_output(
        out,
        &with_newline(serde_json::to_string_pretty(&result.rho).expect("serializes")),
    )?;
    let diag_text = with_newline(serde_json::to_string_pretty(diag).expect("serializes"));
    match diagnostics {
        Some(path) => write_output(Some(path), &diag_text),
        None => {
            eprint!("{diag_text}");
            Ok(())
        }
    }
}

/// Seed for the sampling of one `(trial, shots)` pair.
fn sample_seed(seed: u64, trial: u64, shots: u64) -> u64 {
    seed.wrapping_add(trial).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ shots
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Trial `t` reconstructs `random_density(twice_s, seed + t)`.
pub fn roundtrip(
    twice_s: u32,
    seed: u64,
    shots: &[u64],
    trials: u64,
    grid: GridArgs,
    out: Option<&Path>,
    policy: &NumericPolicy,
) -> CliResult<()> {
    let ts = spin(twice_s)?;
    if trials == 0 {
        return Err(CliError::Input("--trials must be positive".into()));
    }
    let spec = grid_spec(ts, grid)?;
    let options = ReconstructOptions {
        policy: *policy,
        ..Default::default()
    };
    let mut csv =
        String::from("trial,shots,max_abs_error,trace_defect,hermiticity_defect,min_eig\n");
    let mut errors: Vec<Vec<f64>> = vec![Vec::new(); shots.len()];
    for trial in 0..trials {
        let rho = random_density(ts, seed.wrapping_add(trial), None)?;
        for (i, &n) in shots.iter().enumerate() {
            let set = simulate_coherent(&rho, &spec, n, sample_seed(seed, trial, n), policy)?;
            let result = reconstruct_measurements(&set, &options)?;
            let err = result.rho.max_abs_diff(&rho);
            let d = &result.diagnostics;
            csv.push_str(&format!(
                "{trial},{n},{},{},{},{}\n",
                num(err),
                num(d.trace_defect),
                num(d.hermiticity_defect),
                num(d.min_eigenvalue)
            ));
            errors[i].push(err);
        }
    }
    write_output(out, &csv)?;
    let mut fit = Vec::new();
    for (&n, errs) in shots.iter().zip(&errors) {
        let max = errs.iter().copied().fold(0.0, f64::max);
        let med = median(errs);
        eprintln!("shots {n}: max error {max:.3e}, median error {med:.3e}");
        if n > 0 && med > 0.0 {
            fit.push(((n as f64).ln(), med.ln()));
        }
    }
    if fit.len() >= 2 && fit.iter().any(|p| p.0 != fit[0].0) {
        eprintln!(
            "log-log slope of median error vs shots: {:.3}",
            fit_slope(&fit)
        );
    }
    Ok(())
}

pub fn condition(
    twice_s: u32,
    r_min: f64,
    r_max: f64,
    steps: usize,
    delta: Option<f64>,
    min_gap: f64,
    out: Option<&Path>,
) -> CliResult<()> {
    let ts = spin(twice_s)?;
    if !(r_min > 0.0 && r_min <= r_max && r_max.is_finite()) {
        return Err(CliError::Input(format!(
            "need 0 < r-min <= r-max, got {r_min}..{r_max}"
        )));
    }
    if steps == 0 {
        return Err(CliError::Input("--steps must be positive".into()));
    }
    let delta = delta.unwrap_or_else(|| default_delta(ts));
    let mut csv = String::from("r,m,kappa\n");
    let mut best: Option<(f64, f64)> = None;
    for i in 0..steps {
        let r = if steps == 1 {
            r_min
        } else {
            r_min + (r_max - r_min) * i as f64 / (steps - 1) as f64
        };
        if (r - 1.0).abs() < min_gap {
            eprintln!(
                "warning: skipping r = {}: circles coincide as r approaches 1",
                num(r)
            );
            continue;
        }
        let report = condition_report(&GridSpec::new(ts, r, delta)?);
        for (m, kappa) in report.block_condition.iter().enumerate() {
            csv.push_str(&format!("{},{m},{}\n", num(r), num(*kappa)));
        }
        if best.is_none_or(|(_, w)| report.worst < w) {
            best = Some((r, report.worst));
        }
    }
    write_output(out, &csv)?;
    match best {
        Some((r, worst)) => {
            eprintln!(
                "recommended r = {} (worst-block condition number {worst:.3e})",
                num(r)
            );
            Ok(())
        }
        None => Err(CliError::Input("every r in the scan was excluded".into())),
    }
}

fn tidy(v: f64) -> f64 {
    if v.abs() < 5e-13 {
        0.0
    } else {
        v
    }
}

pub fn appendix_demo(twice_s: u32, seed: u64, policy: &NumericPolicy) -> CliResult<()> {
    let ts = spin(twice_s)?;
    let t = ts.twice() as i32;
    let n = ts.dim();
    let mut text = format!("twice_s = {t}, (2s+1)^2 = {}\n\n", n * n);

    let alias = aliasing_defect(ts);
    text.push_str("azimuthal average of exp(i d phi_k), d = m - m'\n");
    text.push_str(&format!(
        "{:>4} {:>12} {:>12}\n",
        "d",
        format!("{} pts", t + 1),
        format!("{} pts", 2 * t + 1)
    ));
    for d in -2 * t..=2 * t {
        let avg = |points: i32| {
            (0..points)
                .map(|k| {
                    (f64::from(d) * 2.0 * std::f64::consts::PI * f64::from(k) / f64::from(points))
                        .cos()
                })
                .sum::<f64>()
                / f64::from(points)
        };
        text.push_str(&format!(
            "{d:>4} {:>12.6} {:>12.6}\n",
            tidy(avg(t + 1)),
            tidy(avg(2 * t + 1))
        ));
    }
    text.push_str(&format!(
        "identity defects: {:.1e} ({} azimuths), {:.1e} ({} azimuths); {} aliased (m, m') pairs with m != m'\n\n",
        alias.short_defect,
        t + 1,
        alias.long_defect,
        2 * t + 1,
        alias.alias_pairs.len()
    ));

    text.push_str(&format!("single cone, {} azimuths\n", t + 1));
    for theta in [0.5, std::f64::consts::FRAC_PI_2, 2.0] {
        let report = cone_design_matrix(ts, &ConeDesign::single_cone(ts, theta)?, policy.rank_tol)?;
        text.push_str(&format!(
            "  theta = {theta:.4}: rank {} of {}\n",
            report.rank, report.required
        ));
    }

    let design = ConeDesign::corrected(ts);
    let report = cone_design_matrix(ts, &design, policy.rank_tol)?;
    text.push_str(&format!(
        "\ncorrected design, {} cones x {} azimuths: rank {} of {} ({})\n",
        design.thetas.len(),
        design.azimuths,
        report.rank,
        report.required,
        if report.is_full_rank() {
            "full rank"
        } else {
            "RANK DEFICIENT"
        }
    ));

    let rho = random_density(ts, seed, None)?;
    let data = design
        .directions()
        .into_iter()
        .map(|d| outcome_distribution(&rho, d))
        .collect::<Result<Vec<_>, _>>()?;
    let options = ReconstructOptions {
        policy: *policy,
        ..Default::default()
    };
    let multipole = reconstruct_multipole(ts, &design, &data, &options)?;
    let pi0_defect = data
        .iter()
        .map(|dist| pi_l_from_probabilities(ts, &dist.probs, 0).map(|p| (p - 1.0).abs()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let spec = GridSpec::with_defaults(ts);
    let coherent = recon::reconstruct(
        &spintomo::measurement::exact_records(&rho, &spintomo::grid::build_grid(&spec))?,
        &spec,
        &options,
    )?;
    text.push_str(&format!(
        "multipole round trip (seed {seed}): max error {:.3e}\n",
        multipole.rho.max_abs_diff(&rho)
    ));
    text.push_str(&format!(
        "agreement with the circle-grid inversion: {:.3e}\n",
        multipole.rho.max_abs_diff(&coherent.rho)
    ));
    text.push_str(&format!("Pi_0 column: max |Pi_0 - 1| = {pi0_defect:.3e}\n"));
    write_output(None, &text)
}
