// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
use commands::ExitStatus;
mod parse;
mod reproduce;

/// Pulse-sequence compiler, simulator and tomography for a spin coupled to
/// a harmonic oscillator.
#[derive(Parser, Debug)]
#[command(name = "ladderkit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a target state into a pulse program.
    Compile(CompileArgs),
    /// Run a pulse program and write its Hilbert-space trajectory.
    Simulate(SimulateArgs),
    /// Synthesize Rabi scans, fit them and invert to populations.
    Tomo(TomoArgs),
    /// Synthesize a coherence fringe and estimate fidelity.
    Fringe(FringeArgs),
    /// Run the whole pipeline for the |↓⟩(|0⟩+|3⟩)/√2 demonstration.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Lamb-Dicke parameter.
    #[arg(long, conflicts_with = "calibrate_ratio")]
    pub eta: Option<f64>,
    /// Solve eta so that |Ω(A)/Ω(B)| = R on the --calibrate-dn ladder.
    #[arg(long, num_args = 3, value_names = ["R", "A", "B"], allow_hyphen_values = true)]
    pub calibrate_ratio: Option<Vec<String>>,
    /// Sideband order used by --calibrate-ratio.
    #[arg(long, default_value_t = 1)]
    pub calibrate_dn: usize,
    /// Bare Rabi frequency, rad/s.
    #[arg(long)]
    pub omega0: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    /// Target specification (JSON).
    pub target: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Emit the clearing program instead of the generation program.
    #[arg(long)]
    pub clearing: bool,
    /// Program document to write.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Program document (JSON).
    pub program: PathBuf,
    /// Trajectory CSV to write.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Noise settings as key=value (amp_jitter, phase_jitter, seed).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub noise: Vec<String>,
    #[arg(long)]
    pub amp_jitter: Option<f64>,
    #[arg(long)]
    pub phase_jitter: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run even if the program's digests do not match.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args, Debug)]
pub struct TomoArgs {
    /// State specification or program document. A program is simulated
    /// first and the final state is analysed.
    pub source: Option<PathBuf>,
    /// Fit measured scans instead of synthesizing them: DN=path.csv.
    #[arg(long = "data", value_name = "DN=CSV", allow_hyphen_values = true)]
    pub data: Vec<String>,
    /// Target used for the support probability.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Shots per point; 0 for exact probabilities.
    #[arg(long, default_value_t = 600)]
    pub shots: u32,
    #[arg(long, default_value_t = 120)]
    pub points: usize,
    /// Scan length in periods of pair 0 of each ladder.
    #[arg(long, default_value_t = 18.0)]
    pub periods: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0, 1, -1], allow_hyphen_values = true)]
    pub deltas: Vec<i32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// 1/e envelope in periods of pair 0 (see --no-decay).
    #[arg(long, default_value_t = 9.0)]
    pub decay_osc: f64,
    #[arg(long)]
    pub no_decay: bool,
    #[arg(long, default_value_t = 0.001)]
    pub prep_error: f64,
    /// Highest Fock level to reconstruct (defaults to the source's).
    #[arg(long)]
    pub n_max: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct FringeArgs {
    /// State specification or program document.
    pub source: PathBuf,
    /// Analysis pulse area, e.g. 0.5pi, pi/2, 1.5708.
    #[arg(long, default_value = "0.5pi")]
    pub area: String,
    #[arg(long, default_value_t = 32)]
    pub phases: usize,
    /// Dephase the analysis-coupled pairs first.
    #[arg(long)]
    pub mixture: bool,
    /// Shots per point; 0 for exact probabilities.
    #[arg(long, default_value_t = 0)]
    pub shots: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub prep_error: f64,
    /// Two-term target for the fidelity estimate (defaults to the source).
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Population table CSV to use instead of the source's exact populations.
    #[arg(long)]
    pub populations: Option<PathBuf>,
    /// Use this Re ρ12 instead of the value extracted from the fringe.
    #[arg(long, allow_hyphen_values = true)]
    pub coherence: Option<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Fringe CSV to write.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[arg(long, default_value = "reproduce-out")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(a) => commands::compile(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Tomo(a) => commands::tomo(&a),
        Command::Fringe(a) => commands::fringe(&a),
        Command::Reproduce(a) => reproduce::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
