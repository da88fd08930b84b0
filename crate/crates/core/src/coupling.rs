// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Spin-motion coupling: Lamb-Dicke Rabi rates and the decomposition of a
//! pulse into independent two-level rotations.
//!
//! Rotation convention used throughout the crate: a rotation `(theta, phi)`
//! on the ordered pair `(|↓,n⟩, |↑,n'⟩)` maps
//!
//! ```text
//! a ↦ cos(θ/2)·a − i·e^{−iφ}·sin(θ/2)·b
//! b ↦ −i·e^{+iφ}·sin(θ/2)·a + cos(θ/2)·b
//! ```
//!
//! so shifting `phi` by π (same `theta`) gives the inverse rotation.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAX_LAGUERRE_ORDER: usize = 64;
pub const MAX_SIDEBAND_ORDER: i32 = 2;

/// Axial trap frequency of the reference apparatus, Hz.
pub const DEFAULT_TRAP_FREQ: f64 = 2.9e6;
/// Hyperfine splitting of the reference apparatus, Hz.
pub const DEFAULT_HYPERFINE_SPLIT: f64 = 1.25e9;
/// Base Rabi frequency used when none is given, rad/s.
pub const DEFAULT_OMEGA0: f64 = TAU * 100e3;

/// Generalized Laguerre polynomial `L_n^α(x)` by forward recurrence.
pub fn laguerre(n: usize, alpha: usize, x: f64) -> Result<f64> {
    if n > MAX_LAGUERRE_ORDER {
        return Err(Error::LaguerreOrder(n));
    }
    let a = alpha as f64;
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingModel {
    /// Base Rabi frequency, rad/s.
    pub omega0: f64,
    /// Lamb-Dicke parameter.
    pub eta: f64,
    /// Metadata only.
    pub trap_freq: f64,
    /// Metadata only.
    pub hyperfine_split: f64,
}

impl CouplingModel {
    pub fn new(omega0: f64, eta: f64) -> Result<Self> {
        let m = CouplingModel {
            omega0,
            eta,
            trap_freq: DEFAULT_TRAP_FREQ,
            hyperfine_split: DEFAULT_HYPERFINE_SPLIT,
        };
        m.validate()?;
        Ok(m)
    }

    /// Model whose `η` reproduces `Ω34/Ω01 = 0.60` on the first sideband.
    pub fn calibrated() -> Self {
        let eta = eta_from_ratio(0.60, (3, 1), (0, 1)).expect("calibration root exists");
        CouplingModel::new(DEFAULT_OMEGA0, eta).expect("valid default model")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::InvalidModel(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if !(self.eta.is_finite() && (0.0..2.0).contains(&self.eta)) {
            return Err(Error::InvalidModel(format!("eta must lie in [0, 2), got {}", self.eta)));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in [self.omega0, self.eta, self.trap_freq, self.hyperfine_split] {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Signed Rabi rate of the pair `(n_lower, n_lower + abs_dn)`, rad/s.
    pub fn rabi_rate(&self, n_lower: usize, abs_dn: usize) -> f64 {
        rabi_rate(self, n_lower, abs_dn)
    }

    /// Rate of the pair coupled by `delta_n` whose `↓` side sits at `n_down`.
    pub fn pair_rate(&self, n_down: usize, delta_n: i32) -> f64 {
        let n_up = n_down as i64 - delta_n as i64;
        debug_assert!(n_up >= 0);
        let lower = (n_down as i64).min(n_up) as usize;
        rabi_rate(self, lower, delta_n.unsigned_abs() as usize)
    }
}

impl Default for CouplingModel {
    fn default() -> Self {
        CouplingModel::calibrated()
    }
}

/// `Ω = Ω0·e^{−η²/2}·η^{|Δn|}·sqrt(n!/(n+|Δn|)!)·L_n^{|Δn|}(η²)` with `n` the
/// lower Fock index of the pair.
///
/// The sign of the Laguerre factor is kept; it matters for the relative
/// phase of rotations on different pairs.
pub fn rabi_rate(m: &CouplingModel, n_lower: usize, abs_dn: usize) -> f64 {
    let x = m.eta * m.eta;
    let fact_ratio: f64 = (1..=abs_dn).map(|k| (n_lower + k) as f64).product();
    let lag = laguerre(n_lower, abs_dn, x).unwrap_or(f64::NAN);
    m.omega0 * (-x / 2.0).exp() * m.eta.powi(abs_dn as i32) * lag / fact_ratio.sqrt()
}

/// Smallest `η` in `(0, 2)` at which `Ω(pair_a)/Ω(pair_b)` equals `target_ratio`.
///
/// Pairs are `(n_lower, |Δn|)`.
pub fn eta_from_ratio(
    target_ratio: f64,
    pair_a: (usize, usize),
    pair_b: (usize, usize),
) -> Result<f64> {
    if pair_a == pair_b {
        return Err(Error::DegeneratePair);
    }
    if !(target_ratio.is_finite() && target_ratio > 0.0) {
        return Err(Error::InvalidModel(format!(
            "target ratio must be positive, got {target_ratio}"
        )));
    }
    if pair_a.0.max(pair_b.0) > MAX_LAGUERRE_ORDER {
        return Err(Error::LaguerreOrder(pair_a.0.max(pair_b.0)));
    }
    let f = |eta: f64| {
        let m = CouplingModel { omega0: 1.0, eta, trap_freq: 0.0, hyperfine_split: 0.0 };
        let rb = rabi_rate(&m, pair_b.0, pair_b.1);
        (rabi_rate(&m, pair_a.0, pair_a.1) / rb - target_ratio, rb)
    };

    const STEPS: usize = 20_000;
    let lo_eta = 1e-6;
    let hi_eta = 2.0 - 1e-9;
    let step = (hi_eta - lo_eta) / STEPS as f64;
    let (mut prev_f, mut prev_rb) = f(lo_eta);
    let mut prev_eta = lo_eta;
    for i in 1..=STEPS {
        let eta = lo_eta + step * i as f64;
        let (cur_f, cur_rb) = f(eta);
        // A sign change across a zero of the denominator is a pole, not a root.
        let crosses = prev_f.is_finite()
            && cur_f.is_finite()
            && (prev_f == 0.0 || prev_f.signum() != cur_f.signum())
            && prev_rb.signum() == cur_rb.signum();
        if crosses {
            if prev_f == 0.0 {
                return Ok(prev_eta);
            }
            let (mut a, mut b, mut fa) = (prev_eta, eta, prev_f);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let (fm, _) = f(mid);
                if fm == 0.0 {
                    return Ok(mid);
                }
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
                if b - a <= f64::EPSILON * b {
                    break;
                }
            }
            let root = 0.5 * (a + b);
            if f(root).0.abs() <= 1e-10 * target_ratio.max(1.0) {
                return Ok(root);
            }
        }
        prev_eta = eta;
        prev_f = cur_f;
        prev_rb = cur_rb;
    }
    Err(Error::NoRoot { target: target_ratio })
}

/// One sideband/carrier pulse. `area` is the rotation angle accumulated on the
/// reference pair `(|↓,ref_pair⟩, |↑,ref_pair − delta_n⟩)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub delta_n: i32,
    pub ref_pair: usize,
    pub area: f64,
    pub phase: f64,
    /// Zero-area placeholder kept for the carrier/sideband alternation.
    #[serde(default)]
    pub noop: bool,
}

impl Pulse {
    pub fn new(delta_n: i32, ref_pair: usize, area: f64, phase: f64) -> Self {
        Pulse { delta_n, ref_pair, area, phase, noop: false }
    }

    pub fn noop(delta_n: i32, ref_pair: usize) -> Self {
        Pulse { delta_n, ref_pair, area: 0.0, phase: 0.0, noop: true }
    }

    pub fn is_carrier(&self) -> bool {
        self.delta_n == 0
    }

    /// `↑`-side Fock index of the reference pair.
    pub fn ref_partner(&self) -> i64 {
        self.ref_pair as i64 - self.delta_n as i64
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_n.abs() > MAX_SIDEBAND_ORDER {
            return Err(Error::InvalidPulse(format!("|delta_n| must be ≤ 2, got {}", self.delta_n)));
        }
        if !(self.area.is_finite() && self.area >= 0.0) {
            return Err(Error::InvalidPulse(format!("area must be ≥ 0, got {}", self.area)));
        }
        if !self.phase.is_finite() {
            return Err(Error::InvalidPulse("phase must be finite".into()));
        }
        if self.ref_partner() < 0 {
            return Err(Error::InvalidPulse(format!(
                "reference pair (↓{}, ↑{}) does not exist",
                self.ref_pair,
                self.ref_partner()
            )));
        }
        Ok(())
    }

    /// The exact inverse: same area, phase shifted by π.
    pub fn inverse(&self) -> Pulse {
        Pulse { phase: wrap_phase(self.phase + PI), ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRotation {
    pub n_down: usize,
    pub n_up: usize,
    pub theta: f64,
    pub phi: f64,
}

impl PairRotation {
    pub fn apply(&self, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        rotate(a, b, self.theta, self.phi)
    }
}

/// Applies the crate-wide rotation convention to the ordered pair `(a, b)`.
#[inline]
pub fn rotate(a: Complex64, b: Complex64, theta: f64, phi: f64) -> (Complex64, Complex64) {
    let (s, c) = (0.5 * theta).sin_cos();
    let minus_i = Complex64::new(0.0, -1.0);
    let off_ab = minus_i * Complex64::from_polar(s, -phi);
    let off_ba = minus_i * Complex64::from_polar(s, phi);
    (a * c + off_ab * b, off_ba * a + b * c)
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(TAU);
    if p > PI {
        p -= TAU;
    }
    p
}

/// Splits a pulse into the two-level rotations it drives on a ladder
/// truncated at `n_max`, ordered by increasing `n_down`.
///
/// Basis states whose partner would fall outside `[0, n_max]` are not
/// coupled. A pair whose rate has the opposite sign to the reference pair
/// is rotated with `phi + π` so every `theta` stays non-negative.
pub fn pair_rotations(m: &CouplingModel, p: &Pulse, n_max: usize) -> Result<Vec<PairRotation>> {
    p.validate()?;
    let ref_up = p.ref_partner() as usize;
    if p.ref_pair > n_max || ref_up > n_max {
        return Err(Error::InvalidPulse(format!(
            "reference pair (↓{}, ↑{ref_up}) exceeds n_max={n_max}",
            p.ref_pair
        )));
    }
    let ref_rate = m.pair_rate(p.ref_pair, p.delta_n);
    if !(ref_rate.abs() > 1e-14 * m.omega0) {
        return Err(Error::ZeroReferenceRate { delta_n: p.delta_n, ref_pair: p.ref_pair });
    }
    let mut out = Vec::with_capacity(n_max + 1);
    for n_down in 0..=n_max {
        let n_up = n_down as i64 - p.delta_n as i64;
        if n_up < 0 || n_up > n_max as i64 {
            continue;
        }
        let ratio = m.pair_rate(n_down, p.delta_n) / ref_rate;
        let phi = if ratio < 0.0 { wrap_phase(p.phase + PI) } else { p.phase };
        out.push(PairRotation { n_down, n_up: n_up as usize, theta: p.area * ratio.abs(), phi });
    }
    Ok(out)
}
