// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact pulse evolution and synthetic measurement records.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::compiler::{Direction, PulseProgram};
use crate::coupling::{pair_rotations, rotate, CouplingModel, Pulse};
use crate::error::{Error, Result};
use crate::state::{index, JointState, Spin};

/// Imperfections applied to synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// 1/e envelope time in oscillation periods of the scan's lowest pair.
    pub decay_osc: Option<f64>,
    /// Give every pair its own envelope of `decay_osc` of its own periods.
    #[serde(default)]
    pub per_component_decay: bool,
    /// Probability that the initial state was not `|↓⟩|0⟩`.
    pub prep_error: f64,
    /// Relative standard deviation of pulse area.
    pub amp_jitter: f64,
    /// Standard deviation of pulse phase, rad.
    pub phase_jitter: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            decay_osc: None,
            per_component_decay: false,
            prep_error: 0.001,
            amp_jitter: 0.0,
            phase_jitter: 0.0,
            seed: 0,
        }
    }
}

impl NoiseModel {
    /// No decay, no preparation error, no jitter.
    pub fn ideal() -> Self {
        NoiseModel { prep_error: 0.0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidModel(format!("noise model: {what}")));
        if let Some(d) = self.decay_osc {
            if !(d.is_finite() && d > 0.0) {
                return bad("decay_osc must be positive");
            }
        }
        if !(0.0..1.0).contains(&self.prep_error) {
            return bad("prep_error must lie in [0, 1)");
        }
        if !(self.amp_jitter >= 0.0 && self.phase_jitter >= 0.0) {
            return bad("jitter must be non-negative");
        }
        Ok(())
    }

    /// Deterministic generator for sample `index` of a scan.
    pub fn point_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiDataset {
    pub delta_n: i32,
    /// Pulse durations, s.
    pub times: Vec<f64>,
    pub p_down: Vec<f64>,
    /// Shots per point; `None` for exact probabilities.
    pub shots: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeDataset {
    pub phases: Vec<f64>,
    pub p_down: Vec<f64>,
    pub shots: Option<u32>,
}

/// Applies every pair rotation of `p`. The pairs are disjoint, so applying
/// the 2×2 blocks one after another is exact.
pub fn apply_pulse(s: &JointState, p: &Pulse, m: &CouplingModel) -> Result<JointState> {
    let n_max = s.n_max();
    let mut amps = s.amplitudes().to_vec();
    for r in pair_rotations(m, p, n_max)? {
        let (i, j) = (index(n_max, Spin::Down, r.n_down), index(n_max, Spin::Up, r.n_up));
        let (a, b) = r.apply(amps[i], amps[j]);
        amps[i] = a;
        amps[j] = b;
    }
    Ok(JointState::from_unitary_image(n_max, amps))
}

fn check_digests(s0: &JointState, prog: &PulseProgram, m: &CouplingModel) -> Result<()> {
    let md = m.digest();
    if md != prog.model_digest {
        return Err(Error::DigestMismatch {
            what: "model",
            expected: prog.model_digest.clone(),
            found: md,
        });
    }
    if prog.direction == Direction::Clearing {
        let sd = s0.digest();
        if sd != prog.target_digest {
            return Err(Error::DigestMismatch {
                what: "target",
                expected: prog.target_digest.clone(),
                found: sd,
            });
        }
    }
    Ok(())
}

/// State after each pulse, initial state first.
///
/// The model must be the one the program was compiled with, and a clearing
/// program must start from its own target, unless `force` is set.
pub fn run_program(
    s0: &JointState,
    prog: &PulseProgram,
    m: &CouplingModel,
    force: bool,
) -> Result<Vec<JointState>> {
    run_program_inner(s0, prog, m, force, None)
}

/// Like [`run_program`], with per-pulse area and phase jitter drawn from
/// `noise` (seeded; one stream per pulse).
pub fn run_program_noisy(
    s0: &JointState,
    prog: &PulseProgram,
    m: &CouplingModel,
    noise: &NoiseModel,
    force: bool,
) -> Result<Vec<JointState>> {
    noise.validate()?;
    run_program_inner(s0, prog, m, force, Some(noise))
}

fn run_program_inner(
    s0: &JointState,
    prog: &PulseProgram,
    m: &CouplingModel,
    force: bool,
    noise: Option<&NoiseModel>,
) -> Result<Vec<JointState>> {
    if !force {
        check_digests(s0, prog, m)?;
    }
    let mut state = s0.resized(s0.n_max().max(prog.n_max))?;
    let mut out = Vec::with_capacity(prog.len() + 1);
    out.push(state.clone());
    for (k, p) in prog.pulses.iter().enumerate() {
        if !p.noop {
            let pulse = match noise {
                Some(nm) => jitter(p, nm, k as u64)?,
                None => *p,
            };
            state = apply_pulse(&state, &pulse, m)?;
        }
        out.push(state.clone());
    }
    Ok(out)
}

fn jitter(p: &Pulse, noise: &NoiseModel, k: u64) -> Result<Pulse> {
    let mut rng = noise.point_rng(k);
    let mut q = *p;
    if noise.amp_jitter > 0.0 {
        let d = Normal::new(0.0, noise.amp_jitter).map_err(|e| Error::InvalidModel(e.to_string()))?;
        q.area = (q.area * (1.0 + d.sample(&mut rng))).max(0.0);
    }
    if noise.phase_jitter > 0.0 {
        let d = Normal::new(0.0, noise.phase_jitter).map_err(|e| Error::InvalidModel(e.to_string()))?;
        q.phase += d.sample(&mut rng);
    }
    Ok(q)
}

/// One coupled pair of a scan, or a `|↓⟩` state with no partner.
struct ScanTerm {
    down: Complex64,
    up: Complex64,
    /// `None` for an uncoupled `|↓⟩` state.
    rate: Option<f64>,
}

/// Decomposes `s` into the blocks a `delta_n` drive couples. The ladder is
/// not truncated: a partner above `n_max` is simply empty.
fn scan_terms(s: &JointState, delta_n: i32, m: &CouplingModel) -> Vec<ScanTerm> {
    let n_max = s.n_max() as i64;
    let mut terms = Vec::new();
    for n_down in 0..=n_max {
        let n_up = n_down - delta_n as i64;
        let down = s.amp(Spin::Down, n_down as usize);
        if n_up < 0 {
            terms.push(ScanTerm { down, up: Complex64::new(0.0, 0.0), rate: None });
            continue;
        }
        let up = s.amp(Spin::Up, n_up as usize);
        terms.push(ScanTerm { down, up, rate: Some(m.pair_rate(n_down as usize, delta_n)) });
    }
    // ↑ states whose ↓ partner sits above n_max
    for n_up in 0..=n_max {
        let n_down = n_up + delta_n as i64;
        if n_down > n_max {
            let up = s.amp(Spin::Up, n_up as usize);
            let rate = Some(m.pair_rate(n_down as usize, delta_n));
            terms.push(ScanTerm { down: Complex64::new(0.0, 0.0), up, rate });
        }
    }
    terms
}

/// `P↓` after driving for `t`, each pair's oscillation scaled by `envelope(rate)`.
fn scan_signal(terms: &[ScanTerm], t: f64, envelope: impl Fn(f64) -> f64) -> f64 {
    terms
        .iter()
        .map(|term| match term.rate {
            None => term.down.norm_sqr(),
            Some(rate) => {
                let phi = if rate < 0.0 { std::f64::consts::PI } else { 0.0 };
                let (a, _) = rotate(term.down, term.up, rate.abs() * t, phi);
                let mean = 0.5 * (term.down.norm_sqr() + term.up.norm_sqr());
                mean + (a.norm_sqr() - mean) * envelope(rate)
            }
        })
        .sum()
}

fn sample(p: f64, shots: Option<u32>, rng: &mut ChaCha8Rng) -> f64 {
    let p = p.clamp(0.0, 1.0);
    match shots {
        None => p,
        Some(n) => {
            let k = Binomial::new(n as u64, p).expect("p clamped to [0, 1]").sample(rng);
            k as f64 / n as f64
        }
    }
}

/// Synthetic Rabi-flopping record: `P↓` after a `delta_n` drive of each
/// duration in `times`, with decay, preparation error, area jitter and
/// binomial projection noise from `noise`.
pub fn simulate_rabi_scan(
    s: &JointState,
    delta_n: i32,
    times: &[f64],
    noise: &NoiseModel,
    m: &CouplingModel,
    shots: Option<u32>,
) -> Result<RabiDataset> {
    noise.validate()?;
    m.validate()?;
    if delta_n.abs() > 2 {
        return Err(Error::InvalidPulse(format!("|delta_n| must be ≤ 2, got {delta_n}")));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InsufficientData("times must be non-negative and strictly increasing".into()));
    }
    if shots == Some(0) {
        return Err(Error::InsufficientData("shots must be positive".into()));
    }
    let terms = scan_terms(s, delta_n, m);
    let ground = scan_terms(&JointState::ground(s.n_max()), delta_n, m);
    let ref_rate = m.rabi_rate(0, delta_n.unsigned_abs() as usize).abs();
    let amp_noise = Normal::new(0.0, noise.amp_jitter).map_err(|e| Error::InvalidModel(e.to_string()))?;

    let p_down = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut rng = noise.point_rng(i as u64);
            let t_eff = if noise.amp_jitter > 0.0 { (t * (1.0 + amp_noise.sample(&mut rng))).max(0.0) } else { t };
            let envelope = |rate: f64| match noise.decay_osc {
                None => 1.0,
                Some(osc) => {
                    let w = if noise.per_component_decay { rate.abs() } else { ref_rate };
                    if w == 0.0 {
                        1.0
                    } else {
                        (-t_eff * w / (osc * TAU)).exp()
                    }
                }
            };
            let mut p = scan_signal(&terms, t_eff, envelope);
            if noise.prep_error > 0.0 {
                p = (1.0 - noise.prep_error) * p + noise.prep_error * scan_signal(&ground, t_eff, envelope);
            }
            sample(p, shots, &mut rng)
        })
        .collect();
    Ok(RabiDataset { delta_n, times: times.to_vec(), p_down, shots })
}

/// Default analysis pulse: couples `|↓,0⟩ ↔ |↑,2⟩` (and every `|↓,n⟩ ↔ |↑,n+2⟩`).
pub fn analysis_pulse(area: f64, phase: f64) -> Pulse {
    Pulse::new(-2, 0, area, phase)
}

/// `P↓` after the analysis pulse versus its phase.
///
/// With `mixture_mode` the coherences inside each analysis-coupled pair are
/// dropped first, so the response carries no phase information.
pub fn simulate_fringe_scan(
    s: &JointState,
    analysis_area: f64,
    phases: &[f64],
    noise: &NoiseModel,
    m: &CouplingModel,
    mixture_mode: bool,
    shots: Option<u32>,
) -> Result<FringeDataset> {
    noise.validate()?;
    if shots == Some(0) {
        return Err(Error::InsufficientData("shots must be positive".into()));
    }
    // Room for every |↓,n⟩ ↔ |↑,n+2⟩ partner.
    let padded = s.resized(s.n_max() + 2)?;
    let n_max = padded.n_max();
    let ground = JointState::ground(n_max);
    let amp_noise = Normal::new(0.0, noise.amp_jitter).map_err(|e| Error::InvalidModel(e.to_string()))?;
    let phase_noise = Normal::new(0.0, noise.phase_jitter).map_err(|e| Error::InvalidModel(e.to_string()))?;

    let p_down_of = |state: &JointState, area: f64, phase: f64, mixture: bool| -> Result<f64> {
        let rots = pair_rotations(m, &analysis_pulse(area, phase), n_max)?;
        let mut p: f64 = (0..=n_max)
            .filter(|n| !rots.iter().any(|r| r.n_down == *n))
            .map(|n| state.amp(Spin::Down, n).norm_sqr())
            .sum();
        for r in &rots {
            let a = state.amp(Spin::Down, r.n_down);
            let b = state.amp(Spin::Up, r.n_up);
            p += if mixture {
                let (sn, cs) = (0.5 * r.theta).sin_cos();
                cs * cs * a.norm_sqr() + sn * sn * b.norm_sqr()
            } else {
                r.apply(a, b).0.norm_sqr()
            };
        }
        Ok(p)
    };

    let mut p_down = Vec::with_capacity(phases.len());
    for (i, &phase) in phases.iter().enumerate() {
        let mut rng = noise.point_rng(i as u64);
        let area = if noise.amp_jitter > 0.0 {
            (analysis_area * (1.0 + amp_noise.sample(&mut rng))).max(0.0)
        } else {
            analysis_area
        };
        let phase = if noise.phase_jitter > 0.0 { phase + phase_noise.sample(&mut rng) } else { phase };
        let mut p = p_down_of(&padded, area, phase, mixture_mode)?;
        if noise.prep_error > 0.0 {
            p = (1.0 - noise.prep_error) * p + noise.prep_error * p_down_of(&ground, area, phase, mixture_mode)?;
        }
        p_down.push(sample(p, shots, &mut rng));
    }
    Ok(FringeDataset { phases: phases.to_vec(), p_down, shots })
}

/// `count` evenly spaced phases covering one full turn.
pub fn phase_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| TAU * i as f64 / count as f64).collect()
}
