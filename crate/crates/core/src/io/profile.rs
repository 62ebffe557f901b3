//! Angle profiles as CSV (12 significant digits) or JSON (lossless).

use super::IoError;
use crate::geometry::AngleProfile;

const COLUMNS: &str = "bond,residue,kappa_rad,tau_rad,bond_length_A";

fn cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.11e}"))
}

/// One row per bond `j`; the bond-angle and torsion columns hold site `j`
/// and are empty where the site does not exist. `residue` is
/// `j + index_offset`. Each entry of `header` becomes a `#` comment line.
pub fn profile_to_csv(profile: &AngleProfile, header: &[String]) -> String {
    let mut out = String::new();
    for line in header {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str(&format!("# index_offset: {}\n", profile.index_offset));
    out.push_str(COLUMNS);
    if profile.bend_phase.is_some() {
        out.push_str(",bend_phase_rad");
    }
    out.push('\n');
    for (j, &len) in profile.bond_lengths.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}",
            j,
            j as i64 + profile.index_offset,
            cell(profile.kappa.get(j).copied()),
            cell(profile.tau_at(j)),
            cell(Some(len))
        ));
        if let Some(phase) = &profile.bend_phase {
            out.push(',');
            out.push_str(&cell(phase.get(j).copied()));
        }
        out.push('\n');
    }
    out
}

pub fn profile_from_csv(text: &str) -> Result<AngleProfile, IoError> {
    let mut offset = 0i64;
    let mut has_phase = None;
    let mut kappa = Vec::new();
    let mut tau = Vec::new();
    let mut bonds = Vec::new();
    let mut phase = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: &str| IoError::Csv { line: line_no, message: message.to_string() };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("index_offset:") {
                offset = v.trim().parse().map_err(|_| err("bad index_offset"))?;
            }
            continue;
        }
        if has_phase.is_none() {
            has_phase = Some(match line {
                l if l == COLUMNS => false,
                l if l == format!("{COLUMNS},bend_phase_rad") => true,
                _ => return Err(err("unexpected column header")),
            });
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let want = if has_phase == Some(true) { 6 } else { 5 };
        if fields.len() != want {
            return Err(err(&format!("expected {want} fields, found {}", fields.len())));
        }
        let j: usize = fields[0].parse().map_err(|_| err("bad bond index"))?;
        if j != bonds.len() {
            return Err(err("bond indices must run 0, 1, 2, ..."));
        }
        let num = |s: &str| -> Result<Option<f64>, IoError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>().map(Some).map_err(|_| err(&format!("bad number {s:?}")))
            }
        };
        if let Some(k) = num(fields[2])? {
            if kappa.len() != j {
                return Err(err("bond angles must be contiguous from bond 0"));
            }
            kappa.push(k);
        }
        if let Some(t) = num(fields[3])? {
            if tau.len() + 1 != j {
                return Err(err("torsions must be contiguous from bond 1"));
            }
            tau.push(t);
        }
        bonds.push(num(fields[4])?.ok_or_else(|| err("missing bond length"))?);
        if has_phase == Some(true) {
            if let Some(p) = num(fields[5])? {
                phase.push(p);
            }
        }
    }
    let mut profile = AngleProfile::new(kappa, tau, bonds)?;
    profile.index_offset = offset;
    if has_phase == Some(true) {
        profile.bend_phase = Some(phase);
        profile.validate()?;
    }
    Ok(profile)
}

pub fn profile_to_json(profile: &AngleProfile) -> String {
    serde_json::to_string_pretty(profile).expect("profiles always serialize")
}

pub fn profile_from_json(text: &str) -> Result<AngleProfile, IoError> {
    let profile: AngleProfile = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    profile.validate()?;
    Ok(profile)
}
