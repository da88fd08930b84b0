// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use ladderkit::{JointState, Spin};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Random normalized state with a random support pattern. `up_weight`
/// scales the `|↑⟩` amplitudes before normalization.
pub fn random_target<R: Rng>(rng: &mut R, n_max: usize, up_weight: f64) -> JointState {
    let fill: f64 = rng.random_range(0.2..1.0);
    loop {
        let mut entries = Vec::new();
        for spin in Spin::BOTH {
            for n in 0..=n_max {
                if rng.random::<f64>() < fill {
                    let w = if spin == Spin::Up { up_weight } else { 1.0 };
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    entries.push((spin, n, Complex64::new(re, im) * w));
                }
            }
        }
        if let Ok(s) = JointState::new(n_max, &entries) {
            return s;
        }
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
