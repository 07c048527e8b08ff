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

//! `spintomo` command-line tool.
//!
//! Exit codes: 0 success, 2 bad input, 3 singular or ill-conditioned system, 4 I/O error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spintomo::NumericPolicy;

#[derive(Parser)]
#[command(
    name = "spintomo",
    version,
    about = "Spin density-matrix reconstruction from coherent-state probabilities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Numeric policy overrides shared by the subcommands.
#[derive(Args, Clone, Copy)]
pub struct PolicyArgs {
    /// Tolerance for Hermiticity and trace of input states.
    #[arg(long, default_value_t = NumericPolicy::DEFAULT.structural_tol)]
    pub structural_tol: f64,
    /// Most negative eigenvalue accepted for a state that is sampled.
    #[arg(long, default_value_t = NumericPolicy::DEFAULT.eigen_tol)]
    pub eigen_tol: f64,
    /// Refuse blocks whose condition estimate exceeds this value.
    #[arg(long, default_value_t = NumericPolicy::DEFAULT.condition_threshold)]
    pub cond_threshold: f64,
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long, default_value_t = NumericPolicy::DEFAULT.rank_tol)]
    pub rank_tol: f64,
}

impl PolicyArgs {
    pub fn policy(&self) -> NumericPolicy {
        NumericPolicy {
            structural_tol: self.structural_tol,
            eigen_tol: self.eigen_tol,
            condition_threshold: self.cond_threshold,
            rank_tol: self.rank_tol,
        }
    }
}

/// Grid overrides; unset values fall back to the spin-dependent defaults.
#[derive(Args, Clone, Copy)]
pub struct GridArgs {
    /// Radius ratio between neighbouring circles.
    #[arg(long)]
    pub r: Option<f64>,
    /// Azimuthal shift per circle, in [0, 1/(2s+1)].
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Coherent,
    Multipole,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate measurement data for a state file.
    Simulate {
        /// Density matrix JSON: {"twice_s", "re", "im"}.
        state: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Shots per direction; 0 writes exact probabilities.
        #[arg(long, default_value_t = 0)]
        shots: u64,
        #[arg(long, env = "SPINTOMO_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Coherent)]
        mode: ModeArg,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Reconstruct a density matrix from a measurement file.
    Reconstruct {
        measurements: PathBuf,
        /// Divide the estimate by its trace.
        #[arg(long)]
        renormalize: bool,
        /// Clip negative eigenvalues and renormalize.
        #[arg(long)]
        project_psd: bool,
        /// Output path for the estimate; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output path for the diagnostics; stderr when omitted.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Simulate and reconstruct random states; CSV of the errors.
    Roundtrip {
        #[arg(long)]
        twice_s: u32,
        #[arg(long, env = "SPINTOMO_SEED", default_value_t = 0)]
        seed: u64,
        /// Comma-separated shot counts; 0 means exact data.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        shots: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Scan r and report the condition number of every block.
    Condition {
        #[arg(long)]
        twice_s: u32,
        #[arg(long, default_value_t = 1.05)]
        r_min: f64,
        #[arg(long, default_value_t = 3.0)]
        r_max: f64,
        #[arg(long, default_value_t = 40)]
        steps: usize,
        #[arg(long)]
        delta: Option<f64>,
        /// Values with |r - 1| below this are skipped.
        #[arg(long, default_value_t = 1e-3)]
        min_gap: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show why one cone with 2s+1 azimuths cannot resolve the multipoles and how the
    /// (2s+1)-cone, (4s+1)-azimuth design does.
    AppendixDemo {
        #[arg(long)]
        twice_s: u32,
        #[arg(long, env = "SPINTOMO_SEED", default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        policy: PolicyArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            state,
            grid,
            shots,
            seed,
            mode,
            out,
            policy,
        } => commands::simulate(
            &state,
            grid,
            shots,
            seed,
            mode,
            out.as_deref(),
            &policy.policy(),
        ),
        Command::Reconstruct {
            measurements,
            renormalize,
            project_psd,
            out,
            diagnostics,
            policy,
        } => commands::reconstruct(
            &measurements,
            renormalize,
            project_psd,
            out.as_deref(),
            diagnostics.as_deref(),
            &policy.policy(),
        ),
        Command::Roundtrip {
            twice_s,
            seed,
            shots,
            trials,
            grid,
            out,
            policy,
        } => commands::roundtrip(
            twice_s,
            seed,
            &shots,
            trials,
            grid,
            out.as_deref(),
            &policy.policy(),
        ),
        Command::Condition {
            twice_s,
            r_min,
            r_max,
            steps,
            delta,
            min_gap,
            out,
        } => commands::condition(twice_s, r_min, r_max, steps, delta, min_gap, out.as_deref()),
        Command::AppendixDemo {
            twice_s,
            seed,
            policy,
        } => commands::appendix_demo(twice_s, seed, &policy.policy()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
