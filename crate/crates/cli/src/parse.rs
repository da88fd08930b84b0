// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use ladderkit::{CouplingModel, Error, Result};

use crate::ModelArgs;

/// Angles like `0.5pi`, `pi/2`, `3pi/4`, `-pi` or plain radians.
pub fn angle(text: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("cannot read angle {text:?}"));
    let t = text.trim().to_ascii_lowercase().replace('π', "pi");
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim().to_string(), b.trim().parse::<f64>().map_err(|_| bad())?),
        None => (t.clone(), 1.0),
    };
    let value = match num.strip_suffix("pi") {
        Some(coef) => {
            let coef = coef.trim().trim_end_matches('*');
            let c = match coef {
                "" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad())?,
            };
            c * PI
        }
        None => num.parse::<f64>().map_err(|_| bad())?,
    };
    let v = value / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

pub fn model(args: &ModelArgs, require_choice: bool) -> Result<CouplingModel> {
    let omega0 = args.omega0.unwrap_or(ladderkit::coupling::DEFAULT_OMEGA0);
    let eta = match (&args.eta, &args.calibrate_ratio) {
        (Some(eta), None) => *eta,
        (None, Some(v)) => {
            let bad = |what: &str| Error::Parse(format!("--calibrate-ratio: bad {what}"));
            let r: f64 = v[0].parse().map_err(|_| bad("ratio"))?;
            let a: usize = v[1].parse().map_err(|_| bad("level A"))?;
            let b: usize = v[2].parse().map_err(|_| bad("level B"))?;
            ladderkit::eta_from_ratio(r, (a, args.calibrate_dn), (b, args.calibrate_dn))?
        }
        (None, None) if !require_choice => CouplingModel::calibrated().eta,
        (None, None) => return Err(Error::Parse("give exactly one of --eta or --calibrate-ratio".into())),
        (Some(_), Some(_)) => return Err(Error::Parse("--eta and --calibrate-ratio are exclusive".into())),
    };
    CouplingModel::new(omega0, eta)
}

#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct NoiseFlags {
    pub amp_jitter: Option<f64>,
    pub phase_jitter: Option<f64>,
    pub seed: Option<u64>,
}

pub fn noise_pairs(items: &[String]) -> Result<NoiseFlags> {
    let mut out = NoiseFlags::default();
    for item in items.iter().flat_map(|s| s.split_whitespace()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--noise expects key=value, got {item:?}")))?;
        let num = || v.parse::<f64>().map_err(|_| Error::Parse(format!("--noise {k}: bad number {v:?}")));
        match k {
            "amp_jitter" => out.amp_jitter = Some(num()?),
            "phase_jitter" => out.phase_jitter = Some(num()?),
            "seed" => out.seed = Some(v.parse().map_err(|_| Error::Parse(format!("--noise seed: bad value {v:?}")))?),
            other => return Err(Error::Parse(format!("unknown noise key {other:?}"))),
        }
    }
    Ok(out)
}

/// `DN=path` for `--data`.
pub fn data_spec(item: &str) -> Result<(i32, String)> {
    let (dn, path) =
        item.split_once('=').ok_or_else(|| Error::Parse(format!("--data expects DN=path, got {item:?}")))?;
    let dn = dn.trim().parse().map_err(|_| Error::Parse(format!("--data: bad delta_n {dn:?}")))?;
    Ok((dn, path.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert!((angle("0.5pi").unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((angle("pi/2").unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((angle("3pi/4").unwrap() - 0.75 * PI).abs() < 1e-15);
        assert!((angle("-pi").unwrap() + PI).abs() < 1e-15);
        assert!((angle("1.25").unwrap() - 1.25).abs() < 1e-15);
        assert!(angle("half").is_err());
    }

    #[test]
    fn noise_items() {
        let n = noise_pairs(&["amp_jitter=0.01".into(), "seed=7".into()]).unwrap();
        assert_eq!(n, NoiseFlags { amp_jitter: Some(0.01), phase_jitter: None, seed: Some(7) });
        assert!(noise_pairs(&["bogus=1".into()]).is_err());
    }
}
