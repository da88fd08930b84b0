// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

//! JSON documents for targets and programs, CSV for measurement records.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::compiler::{Direction, PulseProgram};
use crate::coupling::{CouplingModel, Pulse};
use crate::error::{Error, Result};
use crate::sim::{FringeDataset, RabiDataset};
use crate::state::{basis_label, JointState, PopulationTable, Spin};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeEntry {
    pub spin: Spin,
    pub n: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpecDocument {
    pub n_max: usize,
    pub amplitudes: Vec<AmplitudeEntry>,
}

impl TargetSpecDocument {
    /// Lists every amplitude whose bit pattern is not `+0.0`, so that
    /// [`TargetSpecDocument::to_state_exact`] reproduces `s` bit for bit.
    pub fn from_state(s: &JointState) -> Self {
        let amplitudes = s
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.re.to_bits() != 0 || a.im.to_bits() != 0)
            .map(|(i, a)| {
                let (spin, n) = basis_label(s.n_max(), i);
                AmplitudeEntry { spin, n, re: a.re, im: a.im }
            })
            .collect();
        TargetSpecDocument { n_max: s.n_max(), amplitudes }
    }

    fn entries(&self) -> Vec<(Spin, usize, Complex64)> {
        self.amplitudes.iter().map(|e| (e.spin, e.n, Complex64::new(e.re, e.im))).collect()
    }

    /// Normalizing parse for user-written targets.
    pub fn to_state(&self) -> Result<JointState> {
        JointState::new(self.n_max, &self.entries())
    }

    /// Parse of an embedded, already normalized state without renormalizing,
    /// so its digest survives the round trip.
    pub fn to_state_exact(&self) -> Result<JointState> {
        // validates ranges, duplicates and finiteness
        let normalized = self.to_state()?;
        let mut amps = vec![Complex64::new(0.0, 0.0); normalized.dim()];
        for e in &self.amplitudes {
            amps[crate::state::index(self.n_max, e.spin, e.n)] = Complex64::new(e.re, e.im);
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Parse(format!("embedded target is not normalized (|ψ|² = {norm})")));
        }
        Ok(JointState::from_unitary_image(self.n_max, amps))
    }
}

pub fn parse_target(text: &str) -> Result<JointState> {
    serde_json::from_str::<TargetSpecDocument>(text)?.to_state()
}

pub fn emit_target(s: &JointState) -> String {
    to_json(&TargetSpecDocument::from_state(s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramDocument {
    pub model: CouplingModel,
    pub direction: Direction,
    pub n_max: usize,
    pub pulses: Vec<Pulse>,
    pub target_digest: String,
    pub model_digest: String,
    pub target: TargetSpecDocument,
}

/// A parsed and verified program together with its model and target.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedProgram {
    pub program: PulseProgram,
    pub model: CouplingModel,
    pub target: JointState,
}

impl ProgramDocument {
    pub fn new(program: &PulseProgram, model: &CouplingModel, target: &JointState) -> Self {
        ProgramDocument {
            model: *model,
            direction: program.direction,
            n_max: program.n_max,
            pulses: program.pulses.clone(),
            target_digest: program.target_digest.clone(),
            model_digest: program.model_digest.clone(),
            target: TargetSpecDocument::from_state(target),
        }
    }

    /// Checks both digests and every pulse.
    pub fn load(self) -> Result<LoadedProgram> {
        self.model.validate()?;
        let found = self.model.digest();
        if found != self.model_digest {
            return Err(Error::DigestMismatch { what: "model", expected: self.model_digest, found });
        }
        let target = self.target.to_state_exact()?;
        let found = target.digest();
        if found != self.target_digest {
            return Err(Error::DigestMismatch { what: "target", expected: self.target_digest, found });
        }
        self.assemble(target)
    }

    /// Skips both digest checks; the embedded target is renormalized.
    pub fn load_unverified(self) -> Result<LoadedProgram> {
        self.model.validate()?;
        let target = self.target.to_state()?;
        self.assemble(target)
    }

    fn assemble(self, target: JointState) -> Result<LoadedProgram> {
        for p in &self.pulses {
            p.validate()?;
        }
        Ok(LoadedProgram {
            program: PulseProgram {
                pulses: self.pulses,
                direction: self.direction,
                n_max: self.n_max,
                target_digest: self.target_digest,
                model_digest: self.model_digest,
            },
            model: self.model,
            target,
        })
    }
}

pub fn parse_program(text: &str) -> Result<LoadedProgram> {
    parse_program_document(text)?.load()
}

/// Structural parse only; no digest checks.
pub fn parse_program_document(text: &str) -> Result<ProgramDocument> {
    Ok(serde_json::from_str(text)?)
}

pub fn emit_program(program: &PulseProgram, model: &CouplingModel, target: &JointState) -> String {
    to_json(&ProgramDocument::new(program, model, target))
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `[1e-4, 1e12)`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    trim_zeros(&format!("{x:.*}", (11 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trajectory_csv(steps: &[JointState]) -> String {
    let mut out = String::from("step,spin,n,re,im,prob\n");
    for (k, s) in steps.iter().enumerate() {
        for spin in Spin::BOTH {
            for n in 0..=s.n_max() {
                let a = s.amp(spin, n);
                let _ = writeln!(out, "{k},{spin},{n},{},{},{}", fmt_num(a.re), fmt_num(a.im), fmt_num(a.norm_sqr()));
            }
        }
    }
    out
}

fn record_csv(label: &str, xs: &[f64], ps: &[f64], shots: Option<u32>) -> String {
    let mut out = format!("{label},p_down,shots\n");
    for (x, p) in xs.iter().zip(ps) {
        let _ = writeln!(out, "{},{},{}", fmt_num(*x), fmt_num(*p), shots.unwrap_or(0));
    }
    out
}

/// Columns `time,p_down,shots`; shots 0 marks exact probabilities.
pub fn rabi_csv(d: &RabiDataset) -> String {
    record_csv("time", &d.times, &d.p_down, d.shots)
}

/// Columns `phase,p_down,shots`.
pub fn fringe_csv(d: &FringeDataset) -> String {
    record_csv("phase", &d.phases, &d.p_down, d.shots)
}

fn parse_record(text: &str, label: &str) -> Result<(Vec<f64>, Vec<f64>, Option<u32>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let want = format!("{label},p_down,shots");
    if header.trim() != want {
        return Err(Error::Parse(format!("expected header '{want}', got '{}'", header.trim())));
    }
    let (mut xs, mut ps) = (Vec::new(), Vec::new());
    let mut shots: Option<u32> = None;
    for (i, line) in lines.enumerate() {
        let bad = |what: &str| Error::Parse(format!("line {}: {what}", i + 2));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(bad("expected 3 fields"));
        }
        let x: f64 = f[0].parse().map_err(|_| bad("bad abscissa"))?;
        let p: f64 = f[1].parse().map_err(|_| bad("bad p_down"))?;
        let s: u32 = f[2].parse().map_err(|_| bad("bad shots"))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(bad("p_down outside [0, 1]"));
        }
        let s = (s > 0).then_some(s);
        if i > 0 && s != shots {
            return Err(bad("shots differ between rows"));
        }
        shots = s;
        xs.push(x);
        ps.push(p);
    }
    Ok((xs, ps, shots))
}

pub fn parse_rabi_csv(text: &str, delta_n: i32) -> Result<RabiDataset> {
    let (times, p_down, shots) = parse_record(text, "time")?;
    Ok(RabiDataset { delta_n, times, p_down, shots })
}

pub fn parse_fringe_csv(text: &str) -> Result<FringeDataset> {
    let (phases, p_down, shots) = parse_record(text, "phase")?;
    Ok(FringeDataset { phases, p_down, shots })
}

pub fn populations_csv(t: &PopulationTable) -> String {
    let mut out = String::from("spin,n,p,sigma\n");
    for (spin, n, p, s) in t.cells() {
        let _ = writeln!(out, "{spin},{n},{},{}", fmt_num(p), fmt_num(s));
    }
    out
}

/// Reads the `spin,n,p,sigma` layout written by [`populations_csv`].
pub fn parse_populations_csv(text: &str) -> Result<PopulationTable> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    if header.trim() != "spin,n,p,sigma" {
        return Err(Error::Parse(format!("expected header 'spin,n,p,sigma', got '{}'", header.trim())));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let bad = |what: &str| Error::Parse(format!("line {}: {what}", i + 2));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let spin: Spin = f[0].parse().map_err(|_| bad("bad spin"))?;
        let n: usize = f[1].parse().map_err(|_| bad("bad n"))?;
        let p: f64 = f[2].parse().map_err(|_| bad("bad p"))?;
        let sigma: f64 = f[3].parse().map_err(|_| bad("bad sigma"))?;
        rows.push((spin, n, p, sigma));
    }
    let n_max = rows.iter().map(|r| r.1).max().ok_or_else(|| Error::Parse("no rows".into()))?;
    let mut t = PopulationTable::zeros(n_max);
    for (spin, n, p, sigma) in rows {
        t.set(spin, n, p, sigma);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::compile_generation;
    use crate::state::{psi_03, psi_t};

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.0 / 3.0 * 1e-7), "6.66666666667e-08");
        assert_eq!(fmt_num(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_num(-42.0), "-42");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(9.9999999999999), "10");
        assert_eq!(fmt_num(1e-5), "1e-05");
        assert_eq!(fmt_num(0.0001), "0.0001");
    }

    #[test]
    fn target_document_rejects_duplicates_and_range() {
        let dup = r#"{"n_max":1,"amplitudes":[{"spin":"down","n":0,"re":1,"im":0},{"spin":"down","n":0,"re":1,"im":0}]}"#;
        assert!(matches!(parse_target(dup), Err(Error::DuplicateEntry { .. })));
        let range = r#"{"n_max":3,"amplitudes":[{"spin":"up","n":5,"re":1,"im":0}]}"#;
        assert!(matches!(parse_target(range), Err(Error::IndexOutOfRange { n: 5, .. })));
        assert!(matches!(parse_target("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn target_document_round_trip() {
        let s = psi_t();
        let back = serde_json::from_str::<TargetSpecDocument>(&emit_target(&s)).unwrap().to_state_exact().unwrap();
        assert_eq!(back.digest(), s.digest());
    }

    #[test]
    fn program_document_round_trip_and_tamper() {
        let m = CouplingModel::calibrated();
        let target = psi_03();
        let prog = compile_generation(&target, &m).unwrap();
        let text = emit_program(&prog, &m, &target);
        let loaded = parse_program(&text).unwrap();
        assert_eq!(loaded.program, prog);
        assert_eq!(loaded.model, m);
        assert_eq!(emit_program(&loaded.program, &loaded.model, &loaded.target), text);

        let mut doc: ProgramDocument = serde_json::from_str(&text).unwrap();
        doc.model.eta += 1e-6;
        assert!(matches!(doc.load(), Err(Error::DigestMismatch { what: "model", .. })));
        let mut doc: ProgramDocument = serde_json::from_str(&text).unwrap();
        doc.target.amplitudes[0].re = -doc.target.amplitudes[0].re;
        assert!(matches!(doc.load(), Err(Error::DigestMismatch { what: "target", .. })));
    }

    #[test]
    fn record_csv_round_trip() {
        let d = RabiDataset { delta_n: 1, times: vec![0.0, 1.5e-6], p_down: vec![1.0, 0.25], shots: Some(600) };
        let text = rabi_csv(&d);
        assert_eq!(text, "time,p_down,shots\n0,1,600\n1.5e-06,0.25,600\n");
        assert_eq!(parse_rabi_csv(&text, 1).unwrap(), d);
        let f = FringeDataset { phases: vec![0.0], p_down: vec![0.5], shots: None };
        assert_eq!(parse_fringe_csv(&fringe_csv(&f)).unwrap(), f);
        assert!(parse_fringe_csv("phase,p_down,shots\n0,1.5,0\n").is_err());
    }

    #[test]
    fn populations_csv_round_trip() {
        let t = crate::state::populations(&psi_03());
        let back = parse_populations_csv(&populations_csv(&t)).unwrap();
        for ((s, n, p, _), (_, _, q, _)) in t.cells().zip(back.cells()) {
            assert!((p - q).abs() < 1e-12, "{s} {n}");
        }
    }

    #[test]
    fn trajectory_layout() {
        let csv = trajectory_csv(&[JointState::ground(1)]);
        assert_eq!(csv, "step,spin,n,re,im,prob\n0,down,0,1,0,1\n0,down,1,0,0,0\n0,up,0,0,0,0\n0,up,1,0,0,0\n");
    }
}
