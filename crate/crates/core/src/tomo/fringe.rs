// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Coherence fringe fitting and the two-term fidelity estimate.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::FringeDataset;
use crate::state::{JointState, PopulationTable, Spin};

pub const MIN_FRINGE_POINTS: usize = 8;
// Slack when checking |coh| against the positivity bound.
const POSITIVITY_TOL: f64 = 1e-9;

/// `P↓(φ) = offset + (contrast/2)·cos(φ − phase0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub contrast: f64,
    pub offset: f64,
    pub phase0: f64,
    pub sigma_contrast: f64,
    pub sigma_offset: f64,
    pub sigma_phase0: f64,
    /// Quadratures: `offset + cos_amp·cos φ + sin_amp·sin φ`.
    pub cos_amp: f64,
    pub sin_amp: f64,
    pub sigma_sin_amp: f64,
    pub residual_rms: f64,
}

impl FringeFit {
    pub fn eval(&self, phase: f64) -> f64 {
        self.offset + 0.5 * self.contrast * (phase - self.phase0).cos()
    }
}

pub fn fringe_contrast(d: &FringeDataset) -> Result<FringeFit> {
    let n = d.phases.len();
    if n != d.p_down.len() {
        return Err(Error::InsufficientData("phases and p_down differ in length".into()));
    }
    if n < MIN_FRINGE_POINTS {
        return Err(Error::InsufficientPhaseCoverage);
    }
    let (lo, hi) = d.phases.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
    // n evenly spaced samples of one turn cover 2π once the last step is counted
    let span = (hi - lo) * n as f64 / (n - 1) as f64;
    if !(span >= TAU - 1e-9) {
        return Err(Error::InsufficientPhaseCoverage);
    }

    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => d.phases[i].cos(),
        _ => d.phases[i].sin(),
    });
    let y = DVector::from_column_slice(&d.p_down);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&y, 1e-12).map_err(|e| Error::FitFailed(e.to_string()))?;
    if svd.rank(1e-10) < 3 {
        return Err(Error::InsufficientPhaseCoverage);
    }
    let resid = &a * &x - &y;
    let rss = resid.norm_squared();
    let mut var = rss / (n - 3).max(1) as f64;
    if let Some(shots) = d.shots {
        // never claim better than the shot-noise floor
        let mean_p = x[0].clamp(0.0, 1.0);
        var = var.max(mean_p * (1.0 - mean_p) / shots as f64);
    }
    let cov = (a.transpose() * &a)
        .try_inverse()
        .ok_or(Error::InsufficientPhaseCoverage)?
        * var;

    let (off, ca, sa) = (x[0], x[1], x[2]);
    let half = ca.hypot(sa);
    let contrast = 2.0 * half;
    let phase0 = sa.atan2(ca);
    let (sc, ss) = (cov[(1, 1)], cov[(2, 2)]);
    let csx = cov[(1, 2)];
    let (sigma_contrast, sigma_phase0) = if half > 0.0 {
        let (u, v) = (ca / half, sa / half);
        let var_h = u * u * sc + v * v * ss + 2.0 * u * v * csx;
        let var_p = (v * v * sc + u * u * ss - 2.0 * u * v * csx) / (half * half);
        (2.0 * var_h.max(0.0).sqrt(), var_p.max(0.0).sqrt())
    } else {
        (2.0 * sc.max(ss).max(0.0).sqrt(), f64::INFINITY)
    };
    Ok(FringeFit {
        contrast,
        offset: off,
        phase0,
        sigma_contrast,
        sigma_offset: cov[(0, 0)].max(0.0).sqrt(),
        sigma_phase0,
        cos_amp: ca,
        sin_amp: sa,
        sigma_sin_amp: ss.max(0.0).sqrt(),
        residual_rms: (rss / n as f64).sqrt(),
    })
}

/// `|ρ_{↓↑}|` of the analysis pair from a fitted contrast.
pub fn coherence_magnitude(contrast: f64, analysis_area: f64) -> f64 {
    contrast / (2.0 * analysis_area.sin())
}

/// Real part of `ρ_{↓n,↑n+2}` and its uncertainty, from the fringe phase.
///
/// The analysis pulse produces `P↓ = … + sin(area)·Re(ρ e^{−i(φ+π/2)})`, so
/// the `sin φ` quadrature carries `−Re ρ·sin(area)`.
pub fn coherence_from_fringe(fit: &FringeFit, analysis_area: f64) -> Result<(f64, f64)> {
    let s = analysis_area.sin();
    if s.abs() < 1e-6 {
        return Err(Error::InvalidPulse("analysis area has no sensitivity to coherence".into()));
    }
    Ok((-fit.sin_amp / s, fit.sigma_sin_amp / s.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub f: f64,
    pub sigma_f: f64,
    /// Target amplitudes, global phase removed.
    pub alpha: f64,
    pub beta: f64,
    pub cells: [(Spin, usize); 2],
    pub rho11: f64,
    pub rho22: f64,
    pub coh_re: f64,
}

impl FidelityReport {
    /// `α²ρ11 + β²ρ22 + 2αβ·Re ρ12`.
    pub fn formula(&self) -> f64 {
        self.alpha * self.alpha * self.rho11 + self.beta * self.beta * self.rho22 + 2.0 * self.alpha * self.beta * self.coh_re
    }
}

/// Splits a two-term target into `(cells, α, β)` with real coefficients.
pub fn two_term(target: &JointState) -> Result<([(Spin, usize); 2], f64, f64)> {
    let support = target.support();
    if support.len() != 2 {
        return Err(Error::NotTwoTerm);
    }
    let (c1, c2) = (support[0], support[1]);
    let a = target.amp(c1.0, c1.1);
    let b = target.amp(c2.0, c2.1);
    let rot = Complex64::from_polar(1.0, -a.arg());
    let (a, b) = (a * rot, b * rot);
    if b.im.abs() > 1e-9 * b.norm() {
        return Err(Error::NotTwoTerm);
    }
    Ok(([c1, c2], a.re, b.re))
}

pub fn fidelity_estimate(pops: &PopulationTable, coh_re: f64, sigma_coh: f64, target: &JointState) -> Result<FidelityReport> {
    let (cells, alpha, beta) = two_term(target)?;
    let r11 = pops.get(cells[0].0, cells[0].1);
    let r22 = pops.get(cells[1].0, cells[1].1);
    let bound = (r11.max(0.0) * r22.max(0.0)).sqrt();
    if !coh_re.is_finite() || coh_re.abs() > bound + POSITIVITY_TOL {
        return Err(Error::UnphysicalCoherence { coh: coh_re, bound });
    }
    let coh = coh_re.clamp(-bound, bound);
    let s11 = pops.sigma(cells[0].0, cells[0].1);
    let s22 = pops.sigma(cells[1].0, cells[1].1);
    let sigma_f = ((alpha * alpha * s11).powi(2) + (beta * beta * s22).powi(2) + (2.0 * alpha * beta * sigma_coh).powi(2)).sqrt();
    let mut r = FidelityReport { f: 0.0, sigma_f, alpha, beta, cells, rho11: r11, rho22: r22, coh_re: coh };
    r.f = r.formula();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{populations, psi_t};

    fn target_041() -> JointState {
        JointState::new(
            2,
            &[(Spin::Down, 0, Complex64::new(0.41f64.sqrt(), 0.0)), (Spin::Up, 2, Complex64::new(0.59f64.sqrt(), 0.0))],
        )
        .unwrap()
    }

    fn table(r11: f64, r22: f64) -> PopulationTable {
        let mut t = PopulationTable::zeros(2);
        t.set(Spin::Down, 0, r11, 0.0);
        t.set(Spin::Up, 2, r22, 0.0);
        t
    }

    #[test]
    fn measured_fixture_populations() {
        let t = target_041();
        let r = fidelity_estimate(&table(0.39, 0.55), 0.450, 0.0, &t).unwrap();
        // 0.41·0.39 + 0.59·0.55 + 2·sqrt(0.41·0.59)·0.45
        let oracle = 0.1599 + 0.3245 + 0.9 * (0.41f64 * 0.59).sqrt();
        assert!((r.f - oracle).abs() < 1e-12);
        assert!((r.f - 0.93).abs() < 5e-3);
        let floor = fidelity_estimate(&table(0.39, 0.55), 0.0, 0.0, &t).unwrap();
        assert!((floor.f - 0.4844).abs() < 1e-12);
    }

    #[test]
    fn ideal_state_is_one() {
        let r = fidelity_estimate(&table(0.41, 0.59), (0.41f64 * 0.59).sqrt(), 0.0, &target_041()).unwrap();
        assert!((r.f - 1.0).abs() < 1e-12);
        let pt = psi_t();
        let (_, a, b) = two_term(&pt).unwrap();
        let r = fidelity_estimate(&populations(&pt), a * b, 0.0, &pt).unwrap();
        assert!((r.f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unphysical_and_shape_errors() {
        let t = target_041();
        assert!(matches!(
            fidelity_estimate(&table(0.39, 0.55), 0.5, 0.0, &t),
            Err(Error::UnphysicalCoherence { .. })
        ));
        let one = JointState::ground(2);
        assert!(matches!(fidelity_estimate(&table(1.0, 0.0), 0.0, 0.0, &one), Err(Error::NotTwoTerm)));
        let complex = JointState::new(
            1,
            &[(Spin::Down, 0, Complex64::new(1.0, 0.0)), (Spin::Up, 1, Complex64::new(0.0, 1.0))],
        )
        .unwrap();
        assert!(matches!(two_term(&complex), Err(Error::NotTwoTerm)));
    }

    #[test]
    fn sigma_propagation() {
        let mut t = table(0.39, 0.55);
        t.set(Spin::Down, 0, 0.39, 0.03);
        let r = fidelity_estimate(&t, 0.45, 0.02, &target_041()).unwrap();
        let ab = (0.41f64 * 0.59).sqrt();
        let expect = ((0.41 * 0.03f64).powi(2) + (2.0 * ab * 0.02f64).powi(2)).sqrt();
        assert!((r.sigma_f - expect).abs() < 1e-15);
    }

    #[test]
    fn clean_cosine_fit() {
        let phases = crate::sim::phase_grid(16);
        let p_down = phases.iter().map(|p| 0.46 + 0.2 * (p - 0.7).cos()).collect();
        let fit = fringe_contrast(&FringeDataset { phases, p_down, shots: None }).unwrap();
        assert!((fit.contrast - 0.4).abs() < 1e-12);
        assert!((fit.offset - 0.46).abs() < 1e-12);
        assert!((fit.phase0 - 0.7).abs() < 1e-12);
    }

    #[test]
    fn coverage_errors() {
        let phases: Vec<f64> = (0..8).map(|i| i as f64 * 0.3).collect();
        let p_down = vec![0.5; 8];
        assert!(matches!(
            fringe_contrast(&FringeDataset { phases, p_down, shots: None }),
            Err(Error::InsufficientPhaseCoverage)
        ));
        let phases = crate::sim::phase_grid(6);
        assert!(matches!(
            fringe_contrast(&FringeDataset { phases, p_down: vec![0.5; 6], shots: None }),
            Err(Error::InsufficientPhaseCoverage)
        ));
    }
}
