// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Ladder-clearing synthesis: clear a target state down the dual ladder to
//! `|↓⟩|0⟩` one level at a time, then run the clearing sequence backwards.
//!
//! Level `k` is cleared by a carrier pulse that merges `|↑,k⟩` into `|↓,k⟩`,
//! followed by a first red sideband (`delta_n = 1`) that moves `|↓,k⟩` into
//! `|↑,k−1⟩`. Every pulse also rotates the lower pairs it couples, so the
//! state is re-simulated after each pulse and the next pulse is solved
//! against the simulated amplitudes. `|↓,0⟩` has no sideband partner, which
//! is what lets amplitude accumulate there.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::{wrap_phase, CouplingModel, Pulse};
use crate::error::{Error, Result};
use crate::sim::apply_pulse;
use crate::state::{fidelity_pure, JointState, Spin, SUPPORT_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Maps the target to `|↓⟩|0⟩`.
    Clearing,
    /// Maps `|↓⟩|0⟩` to the target.
    Generation,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Clearing => Direction::Generation,
            Direction::Generation => Direction::Clearing,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseProgram {
    pub pulses: Vec<Pulse>,
    pub direction: Direction,
    /// Truncation of the target ladder the program was compiled on.
    pub n_max: usize,
    pub target_digest: String,
    pub model_digest: String,
}

impl PulseProgram {
    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Pulses that are not zero-area placeholders.
    pub fn effective_pulses(&self) -> impl Iterator<Item = &Pulse> {
        self.pulses.iter().filter(|p| !p.noop)
    }

    /// Copy keeping only the first `count` pulses.
    pub fn truncated(&self, count: usize) -> PulseProgram {
        PulseProgram { pulses: self.pulses[..count.min(self.len())].to_vec(), ..self.clone() }
    }
}

/// Rotation `(theta, phi)` that empties the `|↓⟩` slot `a` of the ordered
/// pair `(a, b)` into `b`.
///
/// An already empty `a` yields the identity `(0, 0)`; a fully empty pair is
/// an error.
pub fn solve_clear(a: Complex64, b: Complex64) -> Result<(f64, f64)> {
    let (ma, mb) = (a.norm(), b.norm());
    if ma < SUPPORT_EPS && mb < SUPPORT_EPS {
        return Err(Error::NothingToClear);
    }
    if ma < SUPPORT_EPS {
        return Ok((0.0, 0.0));
    }
    let theta = 2.0 * ma.atan2(mb);
    let phi = if mb < SUPPORT_EPS { 0.0 } else { wrap_phase(b.arg() - a.arg() + FRAC_PI_2) };
    Ok((theta, phi))
}

/// Rotation that empties the `|↑⟩` slot `b` of `(a, b)` into `a`.
fn solve_clear_up(a: Complex64, b: Complex64) -> Result<(f64, f64)> {
    let (theta, phi) = solve_clear(b, a)?;
    Ok((theta, wrap_phase(-phi)))
}

pub fn compile_clearing(target: &JointState, m: &CouplingModel) -> Result<PulseProgram> {
    m.validate()?;
    let n_max = target.n_max();
    let guard = 2 * (n_max + 1) + 1;
    let mut state = target.clone();
    let mut pulses = Vec::new();

    let top = state.highest_occupied().unwrap_or(0);
    for k in (0..=top).rev() {
        let up = state.amp(Spin::Up, k);
        let pulse = if up.norm() >= SUPPORT_EPS {
            let (theta, phi) = solve_clear_up(state.amp(Spin::Down, k), up)?;
            Pulse::new(0, k, theta, phi)
        } else {
            Pulse::noop(0, k)
        };
        if !pulse.noop {
            state = apply_pulse(&state, &pulse, m)?;
        }
        pulses.push(pulse);

        if k == 0 {
            break;
        }
        let down = state.amp(Spin::Down, k);
        let pulse = if down.norm() >= SUPPORT_EPS {
            let (theta, phi) = solve_clear(down, state.amp(Spin::Up, k - 1))?;
            Pulse::new(1, k, theta, phi)
        } else {
            Pulse::noop(1, k)
        };
        if !pulse.noop {
            state = apply_pulse(&state, &pulse, m)?;
        }
        pulses.push(pulse);

        if pulses.len() > guard {
            return Err(Error::NonConvergence { pulses: pulses.len() });
        }
    }

    // Placeholders only matter between real pulses.
    while pulses.last().is_some_and(|p| p.noop) {
        pulses.pop();
    }
    let lead = pulses.iter().take_while(|p| p.noop).count();
    pulses.drain(..lead);

    if fidelity_pure(&state, &JointState::ground(n_max)) < 1.0 - 1e-9 {
        return Err(Error::NonConvergence { pulses: pulses.len() });
    }

    Ok(PulseProgram {
        pulses,
        direction: Direction::Clearing,
        n_max,
        target_digest: target.digest(),
        model_digest: m.digest(),
    })
}

/// Reverses the pulse order and inverts each pulse (phase + π, same area).
/// Placeholders are left as they are.
pub fn invert_program(p: &PulseProgram) -> PulseProgram {
    PulseProgram {
        pulses: p
            .pulses
            .iter()
            .rev()
            .map(|q| if q.noop { *q } else { q.inverse() })
            .collect(),
        direction: p.direction.flipped(),
        ..p.clone()
    }
}

pub fn compile_generation(target: &JointState, m: &CouplingModel) -> Result<PulseProgram> {
    compile_clearing(target, m).map(|p| invert_program(&p))
}

/// Cell a clearing pulse empties: the carrier at `k` clears `|↑,k⟩`, the
/// sideband at `k` clears `|↓,k⟩`.
pub fn cleared_cell(p: &Pulse) -> (Spin, usize) {
    if p.is_carrier() {
        (Spin::Up, p.ref_pair)
    } else {
        (Spin::Down, p.ref_pair)
    }
}

/// Checks a clearing run: once a pulse has cleared its cell, the cell stays
/// below `tol` for every later step. `traj` is the output of
/// [`run_program`](crate::sim::run_program), initial state first. Returns
/// the violations as `(step, spin, n, |amplitude|)`.
pub fn clearing_violations(
    prog: &PulseProgram,
    traj: &[JointState],
    tol: f64,
) -> Vec<(usize, Spin, usize, f64)> {
    let mut cleared: Vec<(Spin, usize)> = Vec::new();
    let mut out = Vec::new();
    for (k, p) in prog.pulses.iter().enumerate() {
        cleared.push(cleared_cell(p));
        let Some(state) = traj.get(k + 1) else { break };
        for &(spin, n) in &cleared {
            let a = state.amp(spin, n).norm();
            if a > tol {
                out.push((k + 1, spin, n, a));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::coupling::rotate;
    use crate::sim::run_program;
    use crate::state::{populations, psi_03};

    #[test]
    fn solve_clear_pi_pulse() {
        let (theta, phi) = solve_clear(Complex64::new(0.5f64.sqrt(), 0.0), Complex64::new(0.0, 0.0)).unwrap();
        assert!((theta - PI).abs() < 1e-15);
        assert_eq!(phi, 0.0);
    }

    #[test]
    fn solve_clear_already_clear() {
        let r = solve_clear(Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)).unwrap();
        assert_eq!(r, (0.0, 0.0));
        assert!(matches!(
            solve_clear(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
            Err(Error::NothingToClear)
        ));
    }

    #[test]
    fn solve_clear_equal_split() {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let (theta, phi) = solve_clear(h, h).unwrap();
        assert!((theta - FRAC_PI_2).abs() < 1e-15);
        let (a, b) = rotate(h, h, theta, phi);
        assert!(a.norm() < 1e-12);
        assert!((b.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_clear_up_side() {
        let a = Complex64::new(0.2, -0.4);
        let b = Complex64::new(-0.3, 0.6);
        let (theta, phi) = solve_clear_up(a, b).unwrap();
        let (a1, b1) = rotate(a, b, theta, phi);
        assert!(b1.norm() < 1e-12);
        assert!((a1.norm_sqr() - a.norm_sqr() - b.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn psi03_structure() {
        let m = CouplingModel::calibrated();
        let prog = compile_clearing(&psi_03(), &m).unwrap();
        let kinds: Vec<_> = prog.pulses.iter().map(|p| (p.delta_n, p.ref_pair, p.noop)).collect();
        assert_eq!(
            kinds,
            vec![(1, 3, false), (0, 2, false), (1, 2, false), (0, 1, false), (1, 1, false), (0, 0, false)]
        );
        for p in &prog.pulses[..3] {
            assert!((p.area - PI).abs() < 1e-9, "{p:?}");
        }
        let traj = run_program(&psi_03(), &prog, &m, false).unwrap();
        assert!((populations(traj.last().unwrap()).get(Spin::Down, 0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn psi03_clearing_keeps_levels_clear() {
        let m = CouplingModel::calibrated();
        let prog = compile_clearing(&psi_03(), &m).unwrap();
        let traj = run_program(&psi_03(), &prog, &m, false).unwrap();
        assert!(clearing_violations(&prog, &traj, 1e-10).is_empty());
        // a perturbed trajectory is caught
        let mut bad = traj.clone();
        bad[3] = JointState::basis(3, Spin::Down, 3).unwrap();
        assert!(!clearing_violations(&prog, &bad, 1e-10).is_empty());
    }

    #[test]
    fn ground_state_compiles_to_nothing() {
        let m = CouplingModel::calibrated();
        assert!(compile_clearing(&JointState::ground(4), &m).unwrap().is_empty());
    }

    #[test]
    fn up0_is_one_carrier_pi() {
        let m = CouplingModel::calibrated();
        let target = JointState::basis(2, Spin::Up, 0).unwrap();
        let prog = compile_generation(&target, &m).unwrap();
        assert_eq!(prog.len(), 1);
        assert!(prog.pulses[0].is_carrier());
        assert!((prog.pulses[0].area - PI).abs() < 1e-12);
        let traj = run_program(&JointState::ground(2), &prog, &m, false).unwrap();
        assert!((fidelity_pure(traj.last().unwrap(), &target) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inversion_is_an_involution() {
        let m = CouplingModel::calibrated();
        let p = compile_clearing(&psi_03(), &m).unwrap();
        let back = invert_program(&invert_program(&p));
        assert_eq!(back.direction, p.direction);
        for (x, y) in back.pulses.iter().zip(&p.pulses) {
            assert_eq!(x.area, y.area);
            assert!(wrap_phase(x.phase - y.phase).abs() < 1e-12);
        }
        let empty = compile_clearing(&JointState::ground(1), &m).unwrap();
        assert!(invert_program(&empty).is_empty());
    }

    #[test]
    fn mixed_spin_support_clears() {
        let m = CouplingModel::calibrated();
        let one = Complex64::new(1.0, 0.0);
        let target = JointState::new(2, &[(Spin::Up, 0, one), (Spin::Down, 2, one)]).unwrap();
        let prog = compile_clearing(&target, &m).unwrap();
        assert!(prog.len() <= 2 * 3);
        let traj = run_program(&target, &prog, &m, false).unwrap();
        assert!(fidelity_pure(traj.last().unwrap(), &JointState::ground(2)) > 1.0 - 1e-9);
    }
}
