//! Multi-soliton bond-angle profiles: the relaxation solver for the discrete
//! nonlinear Schrödinger equation, the kink ansatz, the continuum kink, and
//! training of energy parameters against target backbones.
//!
//! Solver sites are the bond-angle sites of an [`AngleProfile`]; the boundary
//! values `κ_{-1} = κ_N = 0` are virtual and never stored.

mod ansatz;
mod fit;
mod relax;

pub use ansatz::{continuum_kink, fit_ansatz, kink_ansatz, SolitonAnsatz};
pub use fit::{fit_multisoliton, seed_segments, FitOptions, FitReport, SegmentOptions};
pub use relax::{
    dnls_residual, relax, relax_newton, RelaxOptions, RelaxationReport,
};

use crate::energy::{torsion_of_kappa, Couplings, EnergyError};
use crate::geometry::{AngleProfile, GeometryError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolitonError {
    #[error("relaxation diverged at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },
    #[error("target has no sign change in the fit window")]
    NoSignChange,
    #[error("fit diverged: {0}")]
    FitDiverged(String),
    #[error("invalid option: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The profile of a solver fixed point: torsions from `τ[κ]`, uniform bonds.
///
/// The torsion of site 0 is not part of a profile (it only orients the
/// reference frame) and is dropped.
pub fn soliton_profile(kappa: &[f64], params: &impl Couplings, bond_length: f64) -> Result<AngleProfile, SolitonError> {
    let bonds = vec![bond_length; kappa.len() + 1];
    soliton_profile_with_bonds(kappa, params, bonds)
}

pub(crate) fn soliton_profile_with_bonds(
    kappa: &[f64],
    params: &impl Couplings,
    bond_lengths: Vec<f64>,
) -> Result<AngleProfile, SolitonError> {
    let tau = kappa
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &k)| torsion_of_kappa(k, params.at(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AngleProfile::new(kappa.to_vec(), tau, bond_lengths)?)
}
