//! Cα chains, discrete Frenet frames and their bond/torsion angle profiles.
//!
//! Index conventions used throughout the crate, for a chain of `N` vertices
//! `r_0 .. r_{N-1}`:
//!
//! * tangent `t_k` points along bond `k` (from `r_k` to `r_{k+1}`), `k = 0..N-1`;
//! * the frame at site `k` is `(n_k, b_k, t_k)` with `b_k ∝ t_{k-1} × t_k`;
//!   frame `0` has no preceding bond and is the free reference frame;
//! * bond angle `κ_k` is the angle between `t_k` and `t_{k+1}` (`N - 2` values);
//! * torsion `τ_k` rotates `b_k` into `b_{k+1}` about `t_k` (`k = 1..N-2`,
//!   `N - 3` values). `τ_0` would rotate the reference frame and carries no
//!   geometry, so it is never stored.
//!
//! The transfer from frame `k` to frame `k + 1` uses the pair `(κ_k, τ_k)`.

pub(crate) mod frames;
mod gauge;
pub(crate) mod observables;

pub use frames::{compute_angles, compute_frames, reconstruct, reconstruct_into, transfer_matrix, FrenetFrame};
pub use gauge::{
    detect_flattening_points, flattening_regions, so2_gauge, total_variation, unfold_gauge,
    unfold_gauge_with, z2_gauge, UnfoldOptions,
};
pub use observables::{kabsch, radius_of_gyration, rmsd, Superposition};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// A point or displacement in Å.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Cα–Cα distance along a trans peptide, Å.
pub const CANONICAL_BOND: f64 = 3.8;
/// Cα–Cα distance across a cis-proline peptide, Å.
pub const CIS_PROLINE_BOND: f64 = 2.8;
/// Collinearity tolerance on `|t_{k-1} × t_k|` below which a frame is undefined.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("need at least {needed} vertices, got {got}")]
    TooFewVertices { needed: usize, got: usize },
    #[error("vertices {0} and its successor coincide")]
    CoincidentVertices(usize),
    #[error("frame at site {0} is undefined: adjacent bonds are collinear")]
    DegenerateFrame(usize),
    #[error("inconsistent lengths: {0}")]
    InconsistentLengths(String),
    #[error("site {site} out of range (profile has {len} sites)")]
    SiteOutOfRange { site: usize, len: usize },
    #[error("chains have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),
}

/// An ordered Cα trace with optional per-residue metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalphaChain {
    pub vertices: Vec<Vec3>,
    /// Three-letter residue names.
    pub residue_labels: Option<Vec<String>>,
    /// Residue sequence numbers as found in the source file.
    pub residue_numbers: Option<Vec<i32>>,
    /// Crystallographic B-factors, Å².
    pub b_factors: Option<Vec<f64>>,
    /// `cis_flags[i]` marks the peptide bond between residues `i - 1` and `i` as cis.
    pub cis_flags: Vec<bool>,
}

impl CalphaChain {
    pub fn new(vertices: Vec<Vec3>) -> Self {
        let n = vertices.len();
        Self {
            vertices,
            residue_labels: None,
            residue_numbers: None,
            b_factors: None,
            cis_flags: vec![false; n],
        }
    }

    pub fn from_points(points: &[[f64; 3]]) -> Self {
        Self::new(points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn bond_lengths(&self) -> Vec<f64> {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).collect()
    }

    /// Whether every bond is 3.8 Å (2.8 Å across flagged cis bonds) within `tol`.
    pub fn is_canonical(&self, tol: f64) -> bool {
        self.bond_lengths().iter().enumerate().all(|(i, &len)| {
            let target = if self.cis_flags.get(i + 1).copied().unwrap_or(false) {
                CIS_PROLINE_BOND
            } else {
                CANONICAL_BOND
            };
            (len - target).abs() <= tol
        })
    }

    /// A copy holding only vertices `range` with their metadata.
    pub fn slice(&self, range: std::ops::Range<usize>) -> CalphaChain {
        CalphaChain {
            vertices: self.vertices[range.clone()].to_vec(),
            residue_labels: self.residue_labels.as_ref().map(|v| v[range.clone()].to_vec()),
            residue_numbers: self.residue_numbers.as_ref().map(|v| v[range.clone()].to_vec()),
            b_factors: self.b_factors.as_ref().map(|v| v[range.clone()].to_vec()),
            cis_flags: {
                let mut flags = self.cis_flags[range.clone()].to_vec();
                if let Some(first) = flags.first_mut() {
                    *first = false;
                }
                flags
            },
        }
    }
}

/// Bond and torsion angles of a chain: its gauge-variant coordinates.
///
/// `kappa[k]` and `tau_at(k)` drive the transfer from frame `k` to `k + 1`;
/// `tau[j]` is stored for site `j + 1`. `index_offset` maps site `0` back to a
/// residue index of the source chain (the residue at the first bend).
///
/// After a general SO(2) gauge rotation a bond angle no longer lies in the
/// osculating plane; `bend_phase[k]` then holds the rotation of its generator
/// about `t_{k+1}`. Profiles in the extended-range convention (signed `κ`)
/// have no phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AngleProfile {
    pub kappa: Vec<f64>,
    pub tau: Vec<f64>,
    pub bond_lengths: Vec<f64>,
    #[serde(default)]
    pub index_offset: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bend_phase: Option<Vec<f64>>,
}

impl AngleProfile {
    /// Builds a profile, checking the `N - 2 / N - 3 / N - 1` count relations.
    pub fn new(kappa: Vec<f64>, tau: Vec<f64>, bond_lengths: Vec<f64>) -> Result<Self, GeometryError> {
        let p = Self { kappa, tau, bond_lengths, index_offset: 0, bend_phase: None };
        p.validate()?;
        Ok(p)
    }

    /// A profile with one torsion per site; the torsion of site 0 is dropped
    /// since it only rotates the reference frame.
    pub fn from_site_angles(kappa: Vec<f64>, site_tau: &[f64], bond_length: f64) -> Result<Self, GeometryError> {
        if site_tau.len() != kappa.len() {
            return Err(GeometryError::InconsistentLengths(format!(
                "{} bond angles but {} site torsions",
                kappa.len(),
                site_tau.len()
            )));
        }
        let tau = site_tau.iter().skip(1).copied().collect();
        let bonds = vec![bond_length; kappa.len() + 1];
        Self::new(kappa, tau, bonds)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.kappa.len();
        let ok = if n == 0 {
            self.tau.is_empty() && self.bond_lengths.len() <= 1
        } else {
            self.tau.len() == n - 1 && self.bond_lengths.len() == n + 1
        };
        if !ok {
            return Err(GeometryError::InconsistentLengths(format!(
                "{} bond angles, {} torsions, {} bond lengths",
                n,
                self.tau.len(),
                self.bond_lengths.len()
            )));
        }
        if let Some(phase) = &self.bend_phase {
            if phase.len() != n {
                return Err(GeometryError::InconsistentLengths(format!(
                    "{} bond angles but {} bend phases",
                    n,
                    phase.len()
                )));
            }
        }
        Ok(())
    }

    /// Number of bond-angle sites.
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// Number of chain vertices this profile describes.
    pub fn vertex_count(&self) -> usize {
        self.bond_lengths.len() + usize::from(!self.bond_lengths.is_empty())
    }

    /// Torsion paired with bond angle `site`; `None` for site 0.
    pub fn tau_at(&self, site: usize) -> Option<f64> {
        if site == 0 {
            None
        } else {
            self.tau.get(site - 1).copied()
        }
    }

    pub fn set_tau_at(&mut self, site: usize, value: f64) {
        if site > 0 {
            self.tau[site - 1] = value;
        }
    }
}

/// Wraps an angle into `[-π, π)`; values already inside are returned as is.
pub fn wrap_angle(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x;
    }
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Wraps a bond angle into the extended range `[-π, π]`, leaving values
/// already inside it untouched.
pub fn wrap_bond_angle(x: f64) -> f64 {
    if (-PI..=PI).contains(&x) {
        x
    } else {
        wrap_angle(x)
    }
}

/// A straight-line chain helper used by tests and examples: `n` vertices
/// along `+z` with the given spacing.
pub fn straight_chain(n: usize, spacing: f64) -> CalphaChain {
    CalphaChain::new((0..n).map(|i| Vec3::new(0.0, 0.0, spacing * i as f64)).collect())
}
