// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use std::f64::consts::{FRAC_PI_2, TAU};

use ladderkit::sim::phase_grid;
use ladderkit::state::{psi_03, psi_03_measured, psi_t, psi_t_measured};
use ladderkit::tomo::{coherence_from_fringe, fidelity_estimate, invert_populations, RabiFit};
use ladderkit::{
    fidelity_pure, fit_rabi, fringe_contrast, populations, simulate_fringe_scan, simulate_rabi_scan, CouplingModel,
    Error, JointState, NoiseModel, PopulationTable, RabiDataset, Spin,
};
use proptest::prelude::*;

fn times(m: &CouplingModel, dn: i32, points: usize, periods: f64) -> Vec<f64> {
    let w = m.rabi_rate(0, dn.unsigned_abs() as usize).abs();
    (0..points).map(|i| periods * TAU / w * i as f64 / (points - 1) as f64).collect()
}

fn scans(s: &JointState, noise: &NoiseModel, shots: Option<u32>) -> Vec<RabiDataset> {
    let m = CouplingModel::calibrated();
    [0, 1, -1]
        .into_iter()
        .enumerate()
        .map(|(j, dn)| {
            let nm = NoiseModel { seed: noise.seed * 3 + j as u64, ..*noise };
            simulate_rabi_scan(s, dn, &times(&m, dn, 120, 18.0), &nm, &m, shots).unwrap()
        })
        .collect()
}

fn fits(s: &JointState, noise: &NoiseModel, shots: Option<u32>, n_pairs: usize) -> Vec<RabiFit> {
    let m = CouplingModel::calibrated();
    scans(s, noise, shots).iter().map(|d| fit_rabi(d, &m, n_pairs).unwrap()).collect()
}

fn exact_noise() -> NoiseModel {
    NoiseModel { decay_osc: Some(9.0), ..NoiseModel::ideal() }
}

fn max_error(a: &PopulationTable, b: &PopulationTable) -> f64 {
    a.cells().map(|(s, n, p, _)| (p - b.get(s, n)).abs()).fold(0.0, f64::max)
}

#[test]
fn noiseless_psi03_inverts_exactly() {
    let f = fits(&psi_03(), &exact_noise(), None, 4);
    for fit in &f {
        assert!(fit.residual_rms < 1e-8, "dn {} rms {}", fit.delta_n, fit.residual_rms);
    }
    let inv = invert_populations(&f, 3).unwrap();
    assert!(max_error(&inv.table, &populations(&psi_03())) < 1e-6);
    assert!((inv.table.total() - 1.0).abs() < 1e-12);
}

#[test]
fn ground_state_scan_is_one_full_flop() {
    let m = CouplingModel::calibrated();
    let d = simulate_rabi_scan(&JointState::ground(3), -1, &times(&m, -1, 120, 18.0), &exact_noise(), &m, None)
        .unwrap();
    let fit = fit_rabi(&d, &m, 4).unwrap();
    assert!((fit.components[0].amplitude - 0.5).abs() < 1e-6);
    assert!((fit.offset - 0.5).abs() < 1e-6);
    assert!(fit.components[1..].iter().all(|c| c.amplitude < 1e-6));
    let inv = invert_populations(&fits(&JointState::ground(3), &exact_noise(), None, 4), 3).unwrap();
    assert!((inv.table.get(Spin::Down, 0) - 1.0).abs() < 1e-6);
}

#[test]
fn noiseless_parameters_recovered() {
    let m = CouplingModel::calibrated();
    let s = psi_03_measured();
    for dn in [0, 1, -1] {
        let d = simulate_rabi_scan(&s, dn, &times(&m, dn, 120, 18.0), &exact_noise(), &m, None).unwrap();
        let fit = fit_rabi(&d, &m, 4).unwrap();
        assert!(fit.residual_rms < 1e-8);
        let w = m.rabi_rate(0, dn.unsigned_abs() as usize).abs();
        assert!((fit.omega_base / w - 1.0).abs() < 1e-6, "dn {dn}");
        assert!((fit.tau() * w / (9.0 * TAU) - 1.0).abs() < 1e-6, "dn {dn}");
    }
}

#[test]
fn measured_table_round_trip() {
    let s = psi_03_measured();
    let inv = invert_populations(&fits(&s, &exact_noise(), None, 4), 3).unwrap();
    assert!(max_error(&inv.table, &populations(&s)) < 1e-6);
    // support probability of the measured fixture
    assert!((inv.table.support_probability(&psi_03()) - 0.89).abs() < 1e-6);
}

#[test]
fn measured_table_beat_comes_from_down0_and_down3() {
    let m = CouplingModel::calibrated();
    let s = psi_03_measured();
    let d = simulate_rabi_scan(&s, -1, &times(&m, -1, 120, 18.0), &exact_noise(), &m, None).unwrap();
    let fit = fit_rabi(&d, &m, 4).unwrap();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| fit.components[b].amplitude.total_cmp(&fit.components[a].amplitude));
    // pair 0 is (↓0, ↑1), pair 3 is (↓3, ↑4)
    let mut top = [order[0], order[1]];
    top.sort();
    assert_eq!(top, [0, 3]);
}

#[test]
fn inversion_ignores_fit_order() {
    let noise = NoiseModel { decay_osc: Some(9.0), seed: 11, ..NoiseModel::default() };
    let f = fits(&psi_03(), &noise, Some(600), 4);
    let a = invert_populations(&f, 3).unwrap();
    for perm in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
        let g: Vec<RabiFit> = perm.iter().map(|&i| f[i].clone()).collect();
        let b = invert_populations(&g, 3).unwrap();
        assert!(max_error(&a.table, &b.table) < 1e-9);
        assert!(max_error(&a.unprojected, &b.unprojected) < 1e-9);
    }
}

#[test]
fn single_seed_noisy_round_trip() {
    let noise = NoiseModel { decay_osc: Some(9.0), seed: 3, ..NoiseModel::default() };
    let inv = invert_populations(&fits(&psi_03(), &noise, Some(600), 4), 3).unwrap();
    let truth = populations(&psi_03());
    let close = inv.table.cells().filter(|(s, n, p, _)| (p - truth.get(*s, *n)).abs() <= 0.03).count();
    assert!(close >= 7, "{close}/8");
    assert!((inv.table.total() - 1.0).abs() < 1e-12);
    for (_, _, p, sigma) in inv.table.cells() {
        assert!((0.0..=1.0).contains(&p));
        assert!(sigma > 0.0 && sigma < 0.05);
    }
}

#[test]
fn single_shot_still_sums_to_one() {
    let noise = NoiseModel { decay_osc: Some(9.0), seed: 2, ..NoiseModel::default() };
    let inv = invert_populations(&fits(&psi_03(), &noise, Some(1), 4), 3).unwrap();
    assert!((inv.table.total() - 1.0).abs() < 1e-12);
    let mean_sigma = inv.table.cells().map(|c| c.3).sum::<f64>() / 8.0;
    assert!(mean_sigma > 0.05, "{mean_sigma}");
}

#[test]
fn too_few_pairs_is_underdetermined() {
    let f = fits(&psi_03(), &exact_noise(), None, 1);
    match invert_populations(&f, 3) {
        Err(Error::Underdetermined(cells)) => {
            assert!(cells.contains(&(Spin::Down, 3)), "{cells:?}");
        }
        other => panic!("expected Underdetermined, got {other:?}"),
    }
    assert!(matches!(invert_populations(&f[..1], 3), Err(Error::InsufficientData(_))));
}

fn fringe(s: &JointState, mixture: bool) -> ladderkit::FringeFit {
    let m = CouplingModel::calibrated();
    let d = simulate_fringe_scan(s, FRAC_PI_2, &phase_grid(32), &NoiseModel::ideal(), &m, mixture, None).unwrap();
    fringe_contrast(&d).unwrap()
}

#[test]
fn pure_psi_t_fringe() {
    let s = psi_t();
    let (a, b) = (s.amp(Spin::Down, 0).re, s.amp(Spin::Up, 2).re);
    let fit = fringe(&s, false);
    assert!((fit.contrast - 2.0 * a * b).abs() < 1e-12);
    assert!(fit.offset > a * a && fit.offset < b * b);
    let (coh, sigma) = coherence_from_fringe(&fit, FRAC_PI_2).unwrap();
    let r = fidelity_estimate(&populations(&s), coh, sigma, &s).unwrap();
    assert!((r.f - 1.0).abs() < 1e-9);
}

#[test]
fn mixture_fringe_is_flat_with_the_same_offset() {
    let s = psi_t_measured();
    let coherent = fringe(&s, false);
    let mixed = fringe(&s, true);
    assert!(mixed.contrast < 0.02);
    assert!((mixed.offset - coherent.offset).abs() < 1e-12);
    let (coh, sigma) = coherence_from_fringe(&mixed, FRAC_PI_2).unwrap();
    let r = fidelity_estimate(&populations(&s), coh, sigma, &psi_t()).unwrap();
    assert!((r.f - 0.484).abs() < 0.01, "{}", r.f);
}

#[test]
fn measured_state_offset() {
    let m = CouplingModel::calibrated();
    let s = psi_t_measured();
    let fit = fringe(&s, false);
    // averaged over phase, pair (↓n, ↑n+2) keeps cos²(θ_n/2) of p↓n and
    // gains sin²(θ_n/2) of p↑n+2; ↑0 and ↑1 have no ↓ partner
    let w0 = m.rabi_rate(0, 2);
    let mut oracle = 0.0;
    for n in 0..=2 {
        let theta = FRAC_PI_2 * m.rabi_rate(n, 2).abs() / w0.abs();
        let (sn, cs) = (theta / 2.0).sin_cos();
        oracle += cs * cs * s.amp(Spin::Down, n).norm_sqr() + sn * sn * s.amp(Spin::Up, n + 2).norm_sqr();
    }
    assert!((fit.offset - oracle).abs() < 1e-12);
    assert!((fit.offset - 0.46).abs() < 0.03);
}

#[test]
fn fringe_phase_recovers_complex_coherence() {
    let m = CouplingModel::calibrated();
    for (k, phase) in [0.0, 0.7, 2.0, -2.5, 3.1].into_iter().enumerate() {
        let a = common::c(0.6, 0.0);
        let b = num_complex::Complex64::from_polar(0.8, phase);
        let s = JointState::new(2, &[(Spin::Down, 0, a), (Spin::Up, 2, b)]).unwrap();
        let area = 0.3 + 0.2 * k as f64;
        let d = simulate_fringe_scan(&s, area, &phase_grid(24), &NoiseModel::ideal(), &m, false, None).unwrap();
        let (coh, _) = coherence_from_fringe(&fringe_contrast(&d).unwrap(), area).unwrap();
        let want = (s.amp(Spin::Down, 0).conj() * s.amp(Spin::Up, 2)).re;
        assert!((coh - want).abs() < 1e-12, "phase {phase}: {coh} vs {want}");
    }
}

proptest! {
    #[test]
    fn fidelity_estimate_matches_pure_overlap(
        t in 0.05f64..1.5,
        sign in any::<bool>(),
        seed in any::<u64>(),
    ) {
        use rand::SeedableRng;
        let (al, be) = (t.cos(), if sign { t.sin() } else { -t.sin() });
        let target = JointState::new(2, &[(Spin::Down, 0, common::c(al, 0.0)), (Spin::Up, 2, common::c(be, 0.0))]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_target(&mut rng, 2, 1.0);
        let coh = (s.amp(Spin::Down, 0) * s.amp(Spin::Up, 2).conj()).re;
        let r = fidelity_estimate(&populations(&s), coh, 0.0, &target).unwrap();
        prop_assert!((r.f - fidelity_pure(&s, &target)).abs() < 1e-12);
        prop_assert!((r.f - r.formula()).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r.f));
    }

    #[test]
    fn fidelity_estimate_monotone_in_coherence(c1 in -0.46f64..0.46, c2 in -0.46f64..0.46) {
        let mut t = PopulationTable::zeros(2);
        t.set(Spin::Down, 0, 0.39, 0.0);
        t.set(Spin::Up, 2, 0.55, 0.0);
        let (lo, hi) = if c1 < c2 { (c1, c2) } else { (c2, c1) };
        let a = fidelity_estimate(&t, lo, 0.0, &psi_t()).unwrap();
        let b = fidelity_estimate(&t, hi, 0.0, &psi_t()).unwrap();
        prop_assert!(a.f <= b.f);
    }
}
