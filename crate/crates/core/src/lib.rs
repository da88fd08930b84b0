// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic synthesis of arbitrary spin-oscillator states by sequences
//! of carrier and sideband pulses, with an exact simulator and the
//! Rabi-oscillation / coherence-fringe analysis used to verify the result.

pub mod compiler;
pub mod coupling;
pub mod error;
pub mod io;
pub mod sim;
pub mod state;
pub mod tomo;

pub use compiler::{compile_clearing, compile_generation, invert_program, solve_clear, Direction, PulseProgram};
pub use coupling::{eta_from_ratio, laguerre, pair_rotations, rabi_rate, CouplingModel, PairRotation, Pulse};
pub use error::{Error, Result};
pub use sim::{apply_pulse, run_program, simulate_fringe_scan, simulate_rabi_scan, FringeDataset, NoiseModel, RabiDataset};
pub use state::{fidelity_pure, populations, JointState, PopulationTable, Spin};
pub use tomo::{
    fidelity_estimate, fit_rabi, fringe_contrast, invert_populations, rabi_signal, FidelityReport, FringeFit,
    RabiFit,
};
