//! Fixed-column PDB reading (Cα atoms only) and writing.

use crate::geometry::{CalphaChain, Vec3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdbError {
    #[error("no chain {0:?} in the selected model")]
    NoSuchChain(char),
    #[error("model {0} not found")]
    NoSuchModel(usize),
    #[error("no CA atoms found")]
    NoAtoms,
    #[error("malformed record at line {0}")]
    MalformedRecord(usize),
}

/// One ATOM record.
#[derive(Debug, Clone, PartialEq)]
pub struct PdbRecord {
    pub atom_name: String,
    pub alt_loc: char,
    pub res_name: String,
    pub chain_id: char,
    pub res_seq: i32,
    pub insertion_code: char,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub occupancy: f64,
    /// Å².
    pub b_factor: f64,
}

impl PdbRecord {
    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }
}

fn column<'a>(line: &'a str, range: std::ops::Range<usize>, line_no: usize) -> Result<&'a str, PdbError> {
    line.get(range).ok_or(PdbError::MalformedRecord(line_no))
}

fn char_at(line: &str, index: usize, line_no: usize) -> Result<char, PdbError> {
    match line.get(index..index + 1) {
        Some(s) => Ok(s.chars().next().unwrap_or(' ')),
        None if line.len() <= index => Ok(' '),
        None => Err(PdbError::MalformedRecord(line_no)),
    }
}

fn number<T: std::str::FromStr>(s: &str, line_no: usize) -> Result<T, PdbError> {
    s.trim().parse().map_err(|_| PdbError::MalformedRecord(line_no))
}

fn finite(x: f64, line_no: usize) -> Result<f64, PdbError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(PdbError::MalformedRecord(line_no))
    }
}

/// Parses an ATOM record. `line_no` is only used for error reporting.
pub fn parse_record(line: &str, line_no: usize) -> Result<PdbRecord, PdbError> {
    let optional = |range: std::ops::Range<usize>, default: f64| -> Result<f64, PdbError> {
        match line.get(range.clone()) {
            Some(s) if !s.trim().is_empty() => finite(number(s, line_no)?, line_no),
            Some(_) => Ok(default),
            None if line.len() <= range.start => Ok(default),
            None => {
                // Truncated field: parse what is there.
                let s = line.get(range.start..).ok_or(PdbError::MalformedRecord(line_no))?;
                if s.trim().is_empty() {
                    Ok(default)
                } else {
                    finite(number(s, line_no)?, line_no)
                }
            }
        }
    };
    Ok(PdbRecord {
        atom_name: column(line, 12..16, line_no)?.trim().to_string(),
        alt_loc: char_at(line, 16, line_no)?,
        res_name: column(line, 17..20, line_no)?.trim().to_string(),
        chain_id: char_at(line, 21, line_no)?,
        res_seq: number(column(line, 22..26, line_no)?, line_no)?,
        insertion_code: char_at(line, 26, line_no)?,
        x: finite(number(column(line, 30..38, line_no)?, line_no)?, line_no)?,
        y: finite(number(column(line, 38..46, line_no)?, line_no)?, line_no)?,
        z: finite(number(column(line, 46..54, line_no)?, line_no)?, line_no)?,
        occupancy: optional(54..60, 1.0)?,
        b_factor: optional(60..66, 0.0)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    /// Chain to read; the first chain of the model when `None`.
    pub chain_id: Option<char>,
    /// Zero-based index among MODEL records (files without MODEL have one model).
    pub model_index: usize,
    /// A proline whose Cα lies closer than this to the previous Cα is cis, Å.
    pub cis_threshold: f64,
    /// Consecutive Cα atoms further apart than this start a new fragment, Å.
    pub gap_distance: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { chain_id: None, model_index: 0, cis_threshold: 3.2, gap_distance: 4.5 }
    }
}

/// A break between fragments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    /// Residue numbers on either side.
    pub after: i32,
    pub before: i32,
    /// Cα–Cα distance across the break, Å.
    pub distance: f64,
}

/// The Cα trace of one chain, split at missing residues.
#[derive(Debug, Clone, PartialEq)]
pub struct PdbChain {
    pub chain_id: char,
    pub fragments: Vec<CalphaChain>,
    pub gaps: Vec<Gap>,
}

impl PdbChain {
    /// The fragment with the most residues (the first among equals).
    pub fn longest(&self) -> &CalphaChain {
        let mut best = &self.fragments[0];
        for f in &self.fragments[1..] {
            if f.len() > best.len() {
                best = f;
            }
        }
        best
    }
}

/// Reads the Cα trace of one chain of one model with default options.
pub fn parse_calpha(text: &str, chain_id: Option<char>, model_index: usize) -> Result<PdbChain, PdbError> {
    parse_calpha_with(text, &ParseOptions { chain_id, model_index, ..Default::default() })
}

/// Cα trace from raw bytes; invalid UTF-8 is replaced before parsing.
pub fn parse_calpha_bytes(bytes: &[u8], options: &ParseOptions) -> Result<PdbChain, PdbError> {
    parse_calpha_with(&String::from_utf8_lossy(bytes), options)
}

pub fn parse_calpha_with(text: &str, options: &ParseOptions) -> Result<PdbChain, PdbError> {
    let mut model = 0usize;
    let mut saw_model = false;
    let mut in_selected = true;
    let mut atoms: Vec<PdbRecord> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let record = line.get(..6).unwrap_or(line);
        if record.starts_with("MODEL") {
            if saw_model {
                model += 1;
            }
            saw_model = true;
            in_selected = model == options.model_index;
            continue;
        }
        if record.starts_with("ENDMDL") {
            in_selected = false;
            continue;
        }
        if record != "ATOM  " && record.trim_end() != "ATOM" {
            continue;
        }
        let rec = parse_record(line, line_no)?;
        if in_selected && rec.atom_name == "CA" {
            atoms.push(rec);
        }
    }
    if options.model_index > model || (!saw_model && options.model_index != 0) {
        return Err(PdbError::NoSuchModel(options.model_index));
    }
    if atoms.is_empty() {
        return Err(PdbError::NoAtoms);
    }
    let chain_id = options.chain_id.unwrap_or(atoms[0].chain_id);
    let mut selected: Vec<PdbRecord> = atoms.into_iter().filter(|a| a.chain_id == chain_id).collect();
    if selected.is_empty() {
        return Err(PdbError::NoSuchChain(chain_id));
    }

    // Alternate locations: keep the highest occupancy, then the first letter.
    selected.sort_by(|a, b| {
        (a.res_seq, a.insertion_code)
            .cmp(&(b.res_seq, b.insertion_code))
            .then(b.occupancy.total_cmp(&a.occupancy))
            .then(a.alt_loc.cmp(&b.alt_loc))
    });
    selected.dedup_by(|later, first| (later.res_seq, later.insertion_code) == (first.res_seq, first.insertion_code));

    let mut fragments = Vec::new();
    let mut gaps = Vec::new();
    let mut current: Vec<&PdbRecord> = Vec::new();
    let flush = |current: &mut Vec<&PdbRecord>, fragments: &mut Vec<CalphaChain>| {
        if current.is_empty() {
            return;
        }
        let mut chain = CalphaChain::new(current.iter().map(|r| r.position()).collect());
        chain.residue_labels = Some(current.iter().map(|r| r.res_name.clone()).collect());
        chain.residue_numbers = Some(current.iter().map(|r| r.res_seq).collect());
        chain.b_factors = Some(current.iter().map(|r| r.b_factor).collect());
        for k in 1..current.len() {
            let d = (current[k].position() - current[k - 1].position()).norm();
            chain.cis_flags[k] = current[k].res_name == "PRO" && d < options.cis_threshold;
        }
        fragments.push(chain);
        current.clear();
    };
    for rec in &selected {
        if let Some(prev) = current.last() {
            let d = (rec.position() - prev.position()).norm();
            if rec.res_seq - prev.res_seq > 1 || d > options.gap_distance {
                gaps.push(Gap { after: prev.res_seq, before: rec.res_seq, distance: d });
                flush(&mut current, &mut fragments);
            }
        }
        current.push(rec);
    }
    flush(&mut current, &mut fragments);
    Ok(PdbChain { chain_id, fragments, gaps })
}

/// Minimal PDB text with one CA ATOM record per vertex, chain `A`.
pub fn write_chain(chain: &CalphaChain) -> String {
    let mut out = String::new();
    for (i, v) in chain.vertices.iter().enumerate() {
        let name = chain.residue_labels.as_ref().map_or("GLY", |l| l[i].as_str());
        let seq = chain.residue_numbers.as_ref().map_or(i as i32 + 1, |n| n[i]);
        let b = chain.b_factors.as_ref().map_or(0.0, |b| b[i]);
        out.push_str(&format!(
            "ATOM  {:>5}  CA  {:>3} A{:>4}    {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}           C\n",
            (i + 1) % 100_000,
            name,
            seq,
            v.x,
            v.y,
            v.z,
            1.0,
            b
        ));
    }
    out.push_str("TER\nEND\n");
    out
}
