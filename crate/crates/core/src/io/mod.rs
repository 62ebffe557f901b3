//! Reading and writing structures, profiles, parameters and trajectories.

pub mod params;
pub mod pdb;
pub mod profile;
pub mod trajectory;

pub use params::{read_params, write_params, ParamsFile};
pub use pdb::{parse_calpha, parse_calpha_bytes, parse_calpha_with, write_chain, Gap, ParseOptions, PdbChain, PdbError, PdbRecord};
pub use profile::{profile_from_csv, profile_from_json, profile_to_csv, profile_to_json};
pub use trajectory::trajectory_to_csv;

use crate::energy::EnergyError;
use crate::geometry::GeometryError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error(transparent)]
    Pdb(#[from] PdbError),
    #[error("CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("JSON: {0}")]
    Json(String),
    #[error("TOML: {0}")]
    Toml(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}
