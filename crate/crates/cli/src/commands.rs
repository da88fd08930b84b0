// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

use ladderkit::io::{self, LoadedProgram, TargetSpecDocument};
use ladderkit::sim::{phase_grid, run_program_noisy};
use ladderkit::tomo::{coherence_from_fringe, two_term, RabiFit};
use ladderkit::{
    compile_clearing, compile_generation, fidelity_estimate, fidelity_pure, fit_rabi, fringe_contrast,
    invert_populations, populations, run_program, simulate_fringe_scan, simulate_rabi_scan, CouplingModel, Direction,
    Error, JointState, NoiseModel, PopulationTable, PulseProgram, RabiDataset, Result, Spin,
};

use crate::{parse, CompileArgs, FringeArgs, SimulateArgs, TomoArgs};

pub trait ExitStatus {
    fn exit_code(&self) -> u8;
}

impl ExitStatus for Error {
    fn exit_code(&self) -> u8 {
        if self.is_input_error() {
            2
        } else {
            3
        }
    }
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// What a state-or-program argument resolved to.
pub struct Source {
    pub state: JointState,
    pub program: Option<LoadedProgram>,
}

impl Source {
    pub fn target(&self) -> Option<&JointState> {
        self.program.as_ref().map(|p| &p.target)
    }
}

/// Final state of a program run from its natural starting point.
pub fn program_output(p: &LoadedProgram) -> Result<JointState> {
    let start = match p.program.direction {
        Direction::Generation => JointState::ground(p.program.n_max),
        Direction::Clearing => p.target.clone(),
    };
    let traj = run_program(&start, &p.program, &p.model, false)?;
    Ok(traj.last().cloned().expect("trajectory holds the initial state"))
}

pub fn load_source(path: &Path) -> Result<Source> {
    let text = read(path)?;
    if text.contains("\"pulses\"") {
        let program = io::parse_program(&text)?;
        let state = program_output(&program)?;
        Ok(Source { state, program: Some(program) })
    } else {
        Ok(Source { state: io::parse_target(&text)?, program: None })
    }
}

/// One row per pulse. `step` numbers the pulses in clearing order, so for a
/// generation program it counts down.
pub fn pulse_table(p: &PulseProgram) -> String {
    let mut out =
        format!("{:>3} {:>5}  {:<10} {:>8} {:>10} {:>10}\n", "#", "step", "type", "ref", "area/pi", "phase");
    let len = p.pulses.len();
    for (i, q) in p.pulses.iter().enumerate() {
        let step = match p.direction {
            Direction::Clearing => i + 1,
            Direction::Generation => len - i,
        };
        let kind = match (q.noop, q.delta_n) {
            (true, _) => "no-op".to_string(),
            (false, 0) => "carrier".to_string(),
            (false, d) => format!("sb{d:+}"),
        };
        let pair = format!("{}/{}", q.ref_pair, q.ref_partner());
        let _ = std::fmt::Write::write_fmt(
            &mut out,
            format_args!(
                "{:>3} {:>5}  {:<10} {:>8} {:>10.6} {:>10.6}\n",
                i + 1,
                step,
                kind,
                pair,
                q.area / PI,
                q.phase
            ),
        );
    }
    out
}

pub fn compile(a: &CompileArgs) -> Result<()> {
    let target = io::parse_target(&read(&a.target)?)?;
    let m = parse::model(&a.model, true)?;
    let prog = if a.clearing { compile_clearing(&target, &m)? } else { compile_generation(&target, &m)? };
    if let Some(out) = &a.out {
        write(out, &io::emit_program(&prog, &m, &target))?;
    }
    println!("eta = {:.12}", m.eta);
    print!("{}", pulse_table(&prog));
    println!("effective pulses: {}", prog.effective_pulses().count());
    Ok(())
}

fn load_program(text: &str, force: bool) -> Result<LoadedProgram> {
    let doc = io::parse_program_document(text)?;
    if force {
        doc.load_unverified()
    } else {
        doc.load()
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let loaded = load_program(&read(&a.program)?, a.force)?;
    let mut noise = NoiseModel::ideal();
    let kv = parse::noise_pairs(&a.noise)?;
    noise.amp_jitter = a.amp_jitter.or(kv.amp_jitter).unwrap_or(0.0);
    noise.phase_jitter = a.phase_jitter.or(kv.phase_jitter).unwrap_or(0.0);
    noise.seed = a.seed.or(kv.seed).unwrap_or(0);

    let (start, end, label) = match loaded.program.direction {
        Direction::Generation => {
            (JointState::ground(loaded.program.n_max), loaded.target.clone(), "target".to_string())
        }
        Direction::Clearing => (loaded.target.clone(), JointState::ground(loaded.program.n_max), "|down,0>".to_string()),
    };
    let traj = run_program_noisy(&start, &loaded.program, &loaded.model, &noise, a.force)?;
    if let Some(path) = &a.trajectory {
        write(path, &io::trajectory_csv(&traj))?;
    }
    let last = traj.last().expect("trajectory holds the initial state");
    println!("steps: {}", traj.len());
    println!("final populations:");
    print_populations(&populations(last), false);
    println!("fidelity vs {label}: {}", io::fmt_num(fidelity_pure(last, &end)));
    Ok(())
}

pub fn print_populations(t: &PopulationTable, with_sigma: bool) {
    let header: Vec<String> = (0..=t.n_max).map(|n| format!("{:>9}", format!("n={n}"))).collect();
    println!("      {}", header.join(""));
    for spin in Spin::BOTH {
        let row: Vec<String> = (0..=t.n_max)
            .map(|n| {
                if with_sigma {
                    format!("{:>9}", format!("{:.3}±{:.2}", t.get(spin, n), t.sigma(spin, n)))
                } else {
                    format!("{:>9.4}", t.get(spin, n))
                }
            })
            .collect();
        println!("{:<6}{}", spin.as_str(), row.join(""));
    }
}

/// Evenly spaced pulse durations covering `periods` periods of pair 0.
pub fn scan_times(m: &CouplingModel, delta_n: i32, points: usize, periods: f64) -> Result<Vec<f64>> {
    let w = m.rabi_rate(0, delta_n.unsigned_abs() as usize).abs();
    if !(w > 0.0) || points < 2 || !(periods > 0.0) {
        return Err(Error::InsufficientData("scan needs ≥ 2 points and a nonzero pair-0 rate".into()));
    }
    let t_max = periods * TAU / w;
    Ok((0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect())
}

pub fn rabi_file_name(delta_n: i32) -> String {
    format!("rabi_dn{delta_n:+}.csv")
}

/// Outcome of the scan, fit and inversion steps.
pub struct TomoOutcome {
    pub fits: Vec<RabiFit>,
    pub table: PopulationTable,
}

/// Fits every dataset and inverts. Fits that succeeded are written even if a
/// later step fails.
pub fn analyse(datasets: &[RabiDataset], m: &CouplingModel, n_max: usize, out_dir: &Path) -> Result<TomoOutcome> {
    let n_pairs = (n_max + 1).min(ladderkit::tomo::fit::MAX_PAIRS);
    let mut fits = Vec::new();
    let mut failure = None;
    for d in datasets {
        match fit_rabi(d, m, n_pairs) {
            Ok(f) => fits.push(f),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    write(&out_dir.join("fits.json"), &io::to_json(&fits))?;
    if let Some(e) = failure {
        return Err(e);
    }
    let inv = invert_populations(&fits, n_max)?;
    write(&out_dir.join("populations.csv"), &io::populations_csv(&inv.table))?;
    write(&out_dir.join("populations_unprojected.csv"), &io::populations_csv(&inv.unprojected))?;
    Ok(TomoOutcome { fits, table: inv.table })
}

pub fn tomo(a: &TomoArgs) -> Result<()> {
    let source = a.source.as_deref().map(load_source).transpose()?;
    let m = match source.as_ref().and_then(|s| s.program.as_ref()) {
        Some(p) => p.model,
        None => parse::model(&a.model, false)?,
    };
    let target = match &a.target {
        Some(p) => Some(io::parse_target(&read(p)?)?),
        None => source.as_ref().and_then(|s| s.target().cloned()),
    };
    let n_max = a
        .n_max
        .or(source.as_ref().map(|s| s.state.n_max()))
        .ok_or_else(|| Error::InsufficientData("give a source or --n-max".into()))?;

    let mut datasets = Vec::new();
    if a.data.is_empty() {
        let state = &source.as_ref().ok_or_else(|| Error::InsufficientData("nothing to analyse".into()))?.state;
        let shots = (a.shots > 0).then_some(a.shots);
        for (j, &dn) in a.deltas.iter().enumerate() {
            let noise = NoiseModel {
                decay_osc: (!a.no_decay).then_some(a.decay_osc),
                prep_error: a.prep_error,
                seed: a.seed.wrapping_mul(a.deltas.len() as u64).wrapping_add(j as u64),
                ..NoiseModel::ideal()
            };
            let times = scan_times(&m, dn, a.points, a.periods)?;
            let d = simulate_rabi_scan(state, dn, &times, &noise, &m, shots)?;
            write(&a.out_dir.join(rabi_file_name(dn)), &io::rabi_csv(&d))?;
            datasets.push(d);
        }
    } else {
        for item in &a.data {
            let (dn, path) = parse::data_spec(item)?;
            datasets.push(io::parse_rabi_csv(&read(Path::new(&path))?, dn)?);
        }
    }

    let out = analyse(&datasets, &m, n_max, &a.out_dir)?;
    for f in &out.fits {
        println!(
            "delta_n {:+}: omega_base {:.6e} rad/s, tau {:.4e} s, offset {:.4}, rms {:.4}{}",
            f.delta_n,
            f.omega_base,
            f.tau(),
            f.offset,
            f.residual_rms,
            if f.degenerate { " (degenerate)" } else { "" }
        );
    }
    println!("populations:");
    print_populations(&out.table, true);
    if let Some(t) = &target {
        println!("target-state probability: {:.4}", out.table.support_probability(t));
    }
    Ok(())
}

pub fn fringe(a: &FringeArgs) -> Result<()> {
    let source = load_source(&a.source)?;
    let m = match &source.program {
        Some(p) => p.model,
        None => parse::model(&a.model, false)?,
    };
    let area = parse::angle(&a.area)?;
    let noise = NoiseModel { prep_error: a.prep_error, seed: a.seed, ..NoiseModel::ideal() };
    let shots = (a.shots > 0).then_some(a.shots);
    let d = simulate_fringe_scan(&source.state, area, &phase_grid(a.phases), &noise, &m, a.mixture, shots)?;
    if let Some(out) = &a.out {
        write(out, &io::fringe_csv(&d))?;
    }
    let fit = fringe_contrast(&d)?;
    println!(
        "contrast {:.6} ± {:.6}, offset {:.6} ± {:.6}, phase0 {:.6}",
        fit.contrast, fit.sigma_contrast, fit.offset, fit.sigma_offset, fit.phase0
    );

    let target = match &a.target {
        Some(p) => io::parse_target(&read(p)?)?,
        None => source.target().cloned().unwrap_or_else(|| source.state.clone()),
    };
    two_term(&target)?;
    let pops = match &a.populations {
        Some(p) => io::parse_populations_csv(&read(p)?)?,
        None => populations(&source.state),
    };
    let (coh, sigma_coh) = match a.coherence {
        Some(c) => (c, 0.0),
        None => coherence_from_fringe(&fit, area)?,
    };
    let r = fidelity_estimate(&pops, coh, sigma_coh, &target)?;
    println!(
        "rho({},{}) = {:.6}, rho({},{}) = {:.6}, Re rho12 = {:.6}",
        r.cells[0].0, r.cells[0].1, r.rho11, r.cells[1].0, r.cells[1].1, r.rho22, r.coh_re
    );
    println!("F = {} ± {}", io::fmt_num(r.f), io::fmt_num(r.sigma_f));
    Ok(())
}

/// Document of a target as a user would write it.
pub fn target_document(s: &JointState) -> String {
    io::to_json(&TargetSpecDocument::from_state(s))
}
