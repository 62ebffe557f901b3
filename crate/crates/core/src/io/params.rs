//! Energy parameter files (TOML).
//!
//! A uniform file holds the flat keys `lambda, m, a, b, c, d`; a segmented
//! file holds `[[segment]]` tables that add inclusive `start`/`end` site
//! indices to the same keys.

use super::IoError;
use crate::energy::{EnergyParams, SegmentedParams};

#[derive(Debug, Clone, PartialEq)]
pub enum ParamsFile {
    Uniform(EnergyParams),
    Segmented(SegmentedParams),
}

impl ParamsFile {
    /// Segment form covering sites `0..sites`.
    pub fn into_segmented(self, sites: usize) -> SegmentedParams {
        match self {
            ParamsFile::Uniform(p) => SegmentedParams::uniform(p, sites),
            ParamsFile::Segmented(s) => s,
        }
    }
}

pub fn read_params(text: &str) -> Result<ParamsFile, IoError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| IoError::Toml(e.to_string()))?;
    if table.contains_key("segment") {
        let seg: SegmentedParams = toml::from_str(text).map_err(|e| IoError::Toml(e.to_string()))?;
        Ok(ParamsFile::Segmented(SegmentedParams::new(seg.segments)?))
    } else {
        let p: EnergyParams = toml::from_str(text).map_err(|e| IoError::Toml(e.to_string()))?;
        p.validate()?;
        Ok(ParamsFile::Uniform(p))
    }
}

pub fn write_params(params: &ParamsFile) -> String {
    match params {
        ParamsFile::Uniform(p) => toml::to_string(p),
        ParamsFile::Segmented(s) => toml::to_string(s),
    }
    .expect("parameters always serialize")
}
