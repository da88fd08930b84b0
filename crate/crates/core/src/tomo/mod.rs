// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Analysis chain: Rabi fits, population inversion, coherence fringes.

pub mod fit;
pub mod fringe;
pub mod invert;

pub use fit::{fit_rabi, rabi_signal, RabiComponent, RabiFit};
pub use fringe::{
    coherence_from_fringe, coherence_magnitude, fidelity_estimate, fringe_contrast, two_term, FidelityReport,
    FringeFit,
};
pub use invert::{invert_populations, pair_cells, InvertedPopulations};
