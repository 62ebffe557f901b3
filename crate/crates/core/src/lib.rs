//! Protein Cα backbones as discrete Frenet curves.
//!
//! The crate converts Cα traces to bond/torsion angle profiles and back,
//! evaluates a gauge-invariant energy on those profiles, relaxes
//! multi-soliton solutions of the discrete nonlinear Schrödinger equation,
//! and samples thermal ensembles with Glauber Monte Carlo.
//!
//! ```
//! use frenetfold::geometry::{compute_angles, reconstruct, rmsd, CalphaChain};
//!
//! let chain = CalphaChain::from_points(&[
//!     [0.0, 0.0, 0.0],
//!     [3.8, 0.0, 0.0],
//!     [4.9, 3.6, 0.0],
//!     [3.1, 5.4, 2.9],
//!     [0.4, 6.6, 4.0],
//! ]);
//! let profile = compute_angles(&chain).unwrap();
//! let rebuilt = reconstruct(&profile).unwrap();
//! assert!(rmsd(&chain, &rebuilt).unwrap() < 1e-9);
//! ```

pub mod energy;
pub mod geometry;
pub mod soliton;
pub mod dynamics;
pub mod io;

pub use energy::{Boundary, Couplings, EnergyParams, SegmentedParams};
pub use geometry::{AngleProfile, CalphaChain, Vec3};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/frames.md")]
    mod frames {}
    #[doc = include_str!("../../../book/src/gauge.md")]
    mod gauge {}
    #[doc = include_str!("../../../book/src/energy.md")]
    mod energy {}
    #[doc = include_str!("../../../book/src/solitons.md")]
    mod solitons {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/collapse.md")]
    mod collapse {}
    #[doc = include_str!("../../../book/src/structures.md")]
    mod structures {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
