// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Pure states of a spin-1/2 coupled to a truncated harmonic oscillator.
//!
//! The basis is the dual ladder `{|↓,n⟩} ∪ {|↑,n⟩}` for `n` in `0..=n_max`,
//! stored densely with all `↓` amplitudes first.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Amplitudes below this modulus count as empty in support queries.
pub const SUPPORT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Down, Spin::Up];

    pub fn as_str(self) -> &'static str {
        match self {
            Spin::Down => "down",
            Spin::Up => "up",
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Spin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "down" => Ok(Spin::Down),
            "up" => Ok(Spin::Up),
            other => Err(Error::Parse(format!("unknown spin label {other:?}"))),
        }
    }
}

/// Normalized joint spin-oscillator amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    n_max: usize,
    amps: Vec<Complex64>,
}

impl JointState {
    /// Builds a normalized state from sparse `(spin, n, amplitude)` entries.
    /// Unlisted basis states are zero.
    pub fn new(n_max: usize, entries: &[(Spin, usize, Complex64)]) -> Result<Self> {
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * (n_max + 1)];
        let mut seen = vec![false; amps.len()];
        for &(spin, n, amp) in entries {
            if n > n_max {
                return Err(Error::IndexOutOfRange { spin, n, n_max });
            }
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::NonFinite { spin, n });
            }
            let i = index(n_max, spin, n);
            if seen[i] {
                return Err(Error::DuplicateEntry { spin, n });
            }
            seen[i] = true;
            amps[i] = amp;
        }
        Self::from_amplitudes(n_max, amps)
    }

    /// Normalizes a dense amplitude vector laid out as `[↓0..↓n_max, ↑0..↑n_max]`.
    pub fn from_amplitudes(n_max: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 2 * (n_max + 1) {
            return Err(Error::Parse(format!(
                "expected {} amplitudes for n_max={n_max}, got {}",
                2 * (n_max + 1),
                amps.len()
            )));
        }
        for (i, a) in amps.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                let (spin, n) = basis_label(n_max, i);
                return Err(Error::NonFinite { spin, n });
            }
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::EmptyState);
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(JointState { n_max, amps })
    }

    /// `|↓⟩|0⟩` on a ladder truncated at `n_max`.
    pub fn ground(n_max: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * (n_max + 1)];
        amps[0] = Complex64::new(1.0, 0.0);
        JointState { n_max, amps }
    }

    /// A single basis state.
    pub fn basis(n_max: usize, spin: Spin, n: usize) -> Result<Self> {
        Self::new(n_max, &[(spin, n, Complex64::new(1.0, 0.0))])
    }

    // Evolution code hands back vectors it has kept unitary; no renormalization.
    pub(crate) fn from_unitary_image(n_max: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 2 * (n_max + 1));
        JointState { n_max, amps }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// Amplitude of `|spin, n⟩`; zero above the truncation.
    pub fn amp(&self, spin: Spin, n: usize) -> Complex64 {
        if n > self.n_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.amps[index(self.n_max, spin, n)]
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_occupied(&self, spin: Spin, n: usize) -> bool {
        self.amp(spin, n).norm() >= SUPPORT_EPS
    }

    /// Highest Fock level occupied in either spin, or `None` for a state
    /// below the support threshold everywhere.
    pub fn highest_occupied(&self) -> Option<usize> {
        (0..=self.n_max)
            .rev()
            .find(|&n| self.is_occupied(Spin::Down, n) || self.is_occupied(Spin::Up, n))
    }

    /// Occupied basis labels, `↓` first, increasing `n`.
    pub fn support(&self) -> Vec<(Spin, usize)> {
        Spin::BOTH
            .iter()
            .flat_map(|&s| (0..=self.n_max).map(move |n| (s, n)))
            .filter(|&(s, n)| self.is_occupied(s, n))
            .collect()
    }

    /// Same state on a ladder truncated at `n_max`, which must not drop support.
    pub fn resized(&self, n_max: usize) -> Result<Self> {
        if let Some(k) = self.highest_occupied() {
            if k > n_max {
                let spin = if self.is_occupied(Spin::Up, k) { Spin::Up } else { Spin::Down };
                return Err(Error::IndexOutOfRange { spin, n: k, n_max });
            }
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * (n_max + 1)];
        for spin in Spin::BOTH {
            for n in 0..=n_max.min(self.n_max) {
                amps[index(n_max, spin, n)] = self.amp(spin, n);
            }
        }
        Ok(JointState { n_max, amps })
    }

    /// Hex SHA-256 over `n_max` and the little-endian bit patterns of the amplitudes.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_max as u64).to_le_bytes());
        for a in &self.amps {
            h.update(a.re.to_bits().to_le_bytes());
            h.update(a.im.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// `⟨self|other⟩`, zero-padding the shorter ladder.
    pub fn inner(&self, other: &JointState) -> Complex64 {
        let top = self.n_max.max(other.n_max);
        let mut acc = Complex64::new(0.0, 0.0);
        for spin in Spin::BOTH {
            for n in 0..=top {
                acc += self.amp(spin, n).conj() * other.amp(spin, n);
            }
        }
        acc
    }
}

#[inline]
pub(crate) fn index(n_max: usize, spin: Spin, n: usize) -> usize {
    match spin {
        Spin::Down => n,
        Spin::Up => n_max + 1 + n,
    }
}

pub(crate) fn basis_label(n_max: usize, i: usize) -> (Spin, usize) {
    if i <= n_max {
        (Spin::Down, i)
    } else {
        (Spin::Up, i - n_max - 1)
    }
}

/// `|⟨a|b⟩|²`; insensitive to the global phase of either state.
pub fn fidelity_pure(a: &JointState, b: &JointState) -> f64 {
    a.inner(b).norm_sqr().clamp(0.0, 1.0)
}

/// Probabilities `|c_{s,n}|²` with standard uncertainties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTable {
    pub n_max: usize,
    /// `p[0]` is `↓`, `p[1]` is `↑`, each indexed by Fock level.
    pub p: [Vec<f64>; 2],
    pub sigma: [Vec<f64>; 2],
}

impl PopulationTable {
    pub fn zeros(n_max: usize) -> Self {
        PopulationTable {
            n_max,
            p: [vec![0.0; n_max + 1], vec![0.0; n_max + 1]],
            sigma: [vec![0.0; n_max + 1], vec![0.0; n_max + 1]],
        }
    }

    pub fn get(&self, spin: Spin, n: usize) -> f64 {
        self.p[spin as usize].get(n).copied().unwrap_or(0.0)
    }

    pub fn sigma(&self, spin: Spin, n: usize) -> f64 {
        self.sigma[spin as usize].get(n).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, spin: Spin, n: usize, p: f64, sigma: f64) {
        self.p[spin as usize][n] = p;
        self.sigma[spin as usize][n] = sigma;
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    /// Summed probability over the occupied cells of `target`.
    pub fn support_probability(&self, target: &JointState) -> f64 {
        target.support().into_iter().map(|(s, n)| self.get(s, n)).sum()
    }

    /// Cells as `(spin, n, p, sigma)`, `↓` first.
    pub fn cells(&self) -> impl Iterator<Item = (Spin, usize, f64, f64)> + '_ {
        Spin::BOTH.into_iter().flat_map(move |s| {
            (0..=self.n_max).map(move |n| (s, n, self.get(s, n), self.sigma(s, n)))
        })
    }
}

pub fn populations(s: &JointState) -> PopulationTable {
    let mut t = PopulationTable::zeros(s.n_max);
    for spin in Spin::BOTH {
        for n in 0..=s.n_max {
            t.set(spin, n, s.amp(spin, n).norm_sqr(), 0.0);
        }
    }
    t
}

/// The superposition `|↓⟩(|0⟩+|3⟩)/√2`.
pub fn psi_03() -> JointState {
    let one = Complex64::new(1.0, 0.0);
    JointState::new(3, &[(Spin::Down, 0, one), (Spin::Down, 3, one)]).expect("valid fixture")
}

/// The coherence-test target `0.64|↓0⟩ + 0.77|↑2⟩` (normalized).
pub fn psi_t() -> JointState {
    JointState::new(
        2,
        &[
            (Spin::Down, 0, Complex64::new(0.64, 0.0)),
            (Spin::Up, 2, Complex64::new(0.77, 0.0)),
        ],
    )
    .expect("valid fixture")
}

fn from_populations(n_max: usize, cells: &[(Spin, usize, f64)]) -> JointState {
    let entries: Vec<_> = cells.iter().map(|&(s, n, p)| (s, n, Complex64::new(p.sqrt(), 0.0))).collect();
    JointState::new(n_max, &entries).expect("valid fixture")
}

/// Real positive amplitudes with the populations measured for the
/// `Ψ03` experiment (↓: 0.43, 0, 0.01, 0.46; ↑: 0.03, 0.04, 0.02, 0.01).
pub fn psi_03_measured() -> JointState {
    from_populations(
        3,
        &[
            (Spin::Down, 0, 0.43),
            (Spin::Down, 2, 0.01),
            (Spin::Down, 3, 0.46),
            (Spin::Up, 0, 0.03),
            (Spin::Up, 1, 0.04),
            (Spin::Up, 2, 0.02),
            (Spin::Up, 3, 0.01),
        ],
    )
}

/// Real positive amplitudes with the populations measured for the `Ψ_T`
/// experiment: 0.39 in `|↓0⟩`, 0.55 in `|↑2⟩`, 0.03 in `|↑0⟩` and the
/// remaining 0.03 spread over `|↓1⟩`, `|↓2⟩`, `|↑1⟩`.
pub fn psi_t_measured() -> JointState {
    from_populations(
        2,
        &[
            (Spin::Down, 0, 0.39),
            (Spin::Down, 1, 0.01),
            (Spin::Down, 2, 0.01),
            (Spin::Up, 0, 0.03),
            (Spin::Up, 1, 0.01),
            (Spin::Up, 2, 0.55),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn psi03_amplitudes() {
        let s = psi_03();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amp(Spin::Down, 0) - c(h)).norm() < 1e-15);
        assert!((s.amp(Spin::Down, 3) - c(h)).norm() < 1e-15);
        assert_eq!(s.amp(Spin::Up, 2), c(0.0));
    }

    #[test]
    fn ground_state_norm() {
        let s = JointState::new(0, &[(Spin::Down, 0, c(1.0))]).unwrap();
        assert_eq!(s, JointState::ground(0));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn psi_t_populations() {
        let t = populations(&psi_t());
        assert!((t.get(Spin::Down, 0) - 0.41).abs() < 5e-3);
        assert!((t.get(Spin::Up, 2) - 0.59).abs() < 5e-3);
        assert!((t.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            JointState::new(3, &[(Spin::Down, 5, c(1.0))]),
            Err(Error::IndexOutOfRange { n: 5, n_max: 3, .. })
        ));
        assert!(matches!(JointState::new(3, &[(Spin::Up, 1, c(0.0))]), Err(Error::EmptyState)));
        assert!(matches!(JointState::new(3, &[]), Err(Error::EmptyState)));
        assert!(matches!(
            JointState::new(3, &[(Spin::Up, 1, Complex64::new(f64::NAN, 0.0))]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            JointState::new(3, &[(Spin::Up, 1, c(1.0)), (Spin::Up, 1, c(1.0))]),
            Err(Error::DuplicateEntry { .. })
        ));
    }

    #[test]
    fn fidelity_examples() {
        let up0 = JointState::basis(3, Spin::Up, 0).unwrap();
        let down0 = JointState::ground(3);
        assert!((fidelity_pure(&psi_03(), &psi_03()) - 1.0).abs() < 1e-15);
        assert_eq!(fidelity_pure(&down0, &up0), 0.0);
        assert!((fidelity_pure(&psi_03(), &down0) - 0.5).abs() < 1e-15);
        // shorter ladder is zero-padded
        assert!((fidelity_pure(&psi_03(), &JointState::ground(0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn global_phase_ignored() {
        let a = psi_t();
        let rot = Complex64::from_polar(1.0, 1.234);
        let b = JointState::from_amplitudes(2, a.amplitudes().iter().map(|x| x * rot).collect())
            .unwrap();
        assert!((fidelity_pure(&a, &b) - 1.0).abs() < 1e-15);
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn support_threshold() {
        let s = JointState::new(
            4,
            &[(Spin::Down, 0, c(1.0)), (Spin::Up, 4, Complex64::new(1e-13, 0.0))],
        )
        .unwrap();
        assert_eq!(s.highest_occupied(), Some(0));
        assert_eq!(s.support(), vec![(Spin::Down, 0)]);
        assert!(s.resized(1).is_ok());
        assert!(psi_03().resized(2).is_err());
    }
}
