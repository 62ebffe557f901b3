//! The gauge-invariant bond/torsion energy
//!
//! ```text
//! H = Σ (κ_{i+1} - κ_i)² + Σ [ λ(κ_i² - m²)² + (d/2) κ_i² τ_i² - b κ_i² τ_i - a τ_i + (c/2) τ_i² ]
//! ```
//!
//! with the coefficient of the nearest-neighbour term fixed to one. Sites
//! without a torsion (site 0 of a chain profile) contribute only the quartic
//! term unless the soliton boundary convention is requested, see [`Boundary`].

use crate::geometry::AngleProfile;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("invalid energy parameters: {0}")]
    InvalidParams(String),
    #[error("c + d·κ² vanishes at κ = {kappa}")]
    DivisionByZero { kappa: f64 },
}

/// Couplings `(λ, m, a, b, c, d)`, all in model units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub lambda: f64,
    pub m: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl EnergyParams {
    /// Checked constructor: `λ > 0`, `c ≥ 0`, `d ≥ 0`, everything finite.
    pub fn new(lambda: f64, m: f64, a: f64, b: f64, c: f64, d: f64) -> Result<Self, EnergyError> {
        let p = Self { lambda, m, a, b, c, d };
        p.validate()?;
        Ok(p)
    }

    /// Pure double well `λ(κ² - m²)²` with torsion decoupled (`c = 1`).
    pub fn double_well(lambda: f64, m: f64) -> Self {
        Self { lambda, m, a: 0.0, b: 0.0, c: 1.0, d: 0.0 }
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        let all = [self.lambda, self.m, self.a, self.b, self.c, self.d];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(EnergyError::InvalidParams("non-finite coupling".into()));
        }
        if self.lambda <= 0.0 {
            return Err(EnergyError::InvalidParams(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if self.c < 0.0 || self.d < 0.0 {
            return Err(EnergyError::InvalidParams(format!(
                "c and d must be >= 0, got c = {}, d = {}",
                self.c, self.d
            )));
        }
        Ok(())
    }

    /// The couplings as an array in `(λ, m, a, b, c, d)` order.
    pub fn to_array(&self) -> [f64; 6] {
        [self.lambda, self.m, self.a, self.b, self.c, self.d]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self { lambda: v[0], m: v[1], a: v[2], b: v[3], c: v[4], d: v[5] }
    }
}

/// Site-dependent couplings.
pub trait Couplings: Sync {
    fn at(&self, site: usize) -> &EnergyParams;
}

impl Couplings for EnergyParams {
    fn at(&self, _site: usize) -> &EnergyParams {
        self
    }
}

/// Couplings for an inclusive range of profile sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSegment {
    pub start: usize,
    pub end: usize,
    #[serde(flatten)]
    pub params: EnergyParams,
}

/// Piecewise-constant couplings. A site outside every segment takes the
/// couplings of the nearest one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedParams {
    #[serde(rename = "segment")]
    pub segments: Vec<ParamSegment>,
}

impl SegmentedParams {
    pub fn new(mut segments: Vec<ParamSegment>) -> Result<Self, EnergyError> {
        if segments.is_empty() {
            return Err(EnergyError::InvalidParams("no segments".into()));
        }
        segments.sort_by_key(|s| s.start);
        for s in &segments {
            if s.end < s.start {
                return Err(EnergyError::InvalidParams(format!("segment {}..={} is empty", s.start, s.end)));
            }
            s.params.validate()?;
        }
        for w in segments.windows(2) {
            if w[1].start <= w[0].end {
                return Err(EnergyError::InvalidParams(format!(
                    "segments {}..={} and {}..={} overlap",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn uniform(params: EnergyParams, sites: usize) -> Self {
        Self { segments: vec![ParamSegment { start: 0, end: sites.saturating_sub(1), params }] }
    }
}

impl Couplings for SegmentedParams {
    fn at(&self, site: usize) -> &EnergyParams {
        let mut best = &self.segments[0];
        let mut best_dist = usize::MAX;
        for s in &self.segments {
            let dist = if site < s.start {
                s.start - site
            } else if site > s.end {
                site - s.end
            } else {
                return &s.params;
            };
            if dist < best_dist {
                best_dist = dist;
                best = s;
            }
        }
        &best.params
    }
}

/// How the ends of a profile are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Exactly the sum above: no terms beyond the stored sites, and no torsion
    /// terms at site 0.
    #[default]
    Open,
    /// The soliton-solver convention: virtual `κ = 0` neighbours at both ends,
    /// and the torsion of site 0, which only rotates the reference frame, is
    /// set to its optimum `τ[κ_0]`.
    Soliton,
}

/// `τ[κ] = (a + bκ²)/(c + dκ²)`, the torsion that makes `∂H/∂τ` vanish.
pub fn torsion_of_kappa(kappa: f64, params: &EnergyParams) -> Result<f64, EnergyError> {
    let q = kappa * kappa;
    let denom = params.c + params.d * q;
    if denom == 0.0 {
        return Err(EnergyError::DivisionByZero { kappa });
    }
    Ok((params.a + params.b * q) / denom)
}

fn positive_denominator(kappa: f64, params: &EnergyParams) -> Result<f64, EnergyError> {
    let denom = params.c + params.d * kappa * kappa;
    if denom <= 0.0 {
        Err(EnergyError::DivisionByZero { kappa })
    } else {
        Ok(denom)
    }
}

/// Per-site potential with the torsion eliminated:
/// `V[κ] = λ(κ² - m²)² - (a + bκ²)² / (2(c + dκ²))`.
pub fn effective_potential(kappa: f64, params: &EnergyParams) -> Result<f64, EnergyError> {
    let q = kappa * kappa;
    let denom = positive_denominator(kappa, params)?;
    let num = params.a + params.b * q;
    Ok(params.lambda * (q - params.m * params.m).powi(2) - num * num / (2.0 * denom))
}

/// The closed form printed alongside the continuum kink,
/// `-((bc - ad)/d)/(c + dκ²) - ((b² + 8λm²)/(2b)) κ² + λκ⁴`.
///
/// It does not coincide with [`effective_potential`] (which follows from
/// substituting `τ[κ]`); it is provided for comparison only.
pub fn effective_potential_reference(kappa: f64, params: &EnergyParams) -> Result<f64, EnergyError> {
    let EnergyParams { lambda, m, a, b, c, d } = *params;
    if d == 0.0 || b == 0.0 {
        return Err(EnergyError::DivisionByZero { kappa });
    }
    let q = kappa * kappa;
    let denom = positive_denominator(kappa, params)?;
    Ok(-((b * c - a * d) / d) / denom - (b * b + 8.0 * lambda * m * m) / (2.0 * b) * q + lambda * q * q)
}

/// `dV/d(κ²)` of [`effective_potential`]: `2λ(κ² - m²) - bτ + (d/2)τ²` at `τ = τ[κ]`.
pub fn potential_slope(kappa: f64, params: &EnergyParams) -> Result<f64, EnergyError> {
    positive_denominator(kappa, params)?;
    let tau = torsion_of_kappa(kappa, params)?;
    let q = kappa * kappa;
    Ok(2.0 * params.lambda * (q - params.m * params.m) - params.b * tau + 0.5 * params.d * tau * tau)
}

#[inline]
fn site_term(kappa: f64, tau: Option<f64>, p: &EnergyParams) -> f64 {
    let q = kappa * kappa;
    let well = p.lambda * (q - p.m * p.m).powi(2);
    match tau {
        None => well,
        Some(t) => well + 0.5 * p.d * q * t * t - p.b * q * t - p.a * t + 0.5 * p.c * t * t,
    }
}

/// Torsion entering the energy at `site`, after the boundary convention.
#[inline]
fn energy_tau(profile: &AngleProfile, site: usize, p: &EnergyParams, boundary: Boundary) -> Option<f64> {
    match profile.tau_at(site) {
        Some(t) => Some(t),
        None if boundary == Boundary::Soliton && site == 0 => torsion_of_kappa(profile.kappa[0], p)
            .ok()
            .filter(|_| p.c + p.d * profile.kappa[0].powi(2) > 0.0),
        None => None,
    }
}

/// The energy of `profile` exactly as written in the module docs.
pub fn total_energy(profile: &AngleProfile, params: &impl Couplings) -> f64 {
    chain_energy(profile, params, Boundary::Open)
}

/// The energy under a chosen end convention.
pub fn chain_energy(profile: &AngleProfile, params: &impl Couplings, boundary: Boundary) -> f64 {
    let k = &profile.kappa;
    let mut h: f64 = k.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    if boundary == Boundary::Soliton && !k.is_empty() {
        h += k[0] * k[0] + k[k.len() - 1].powi(2);
    }
    for (i, &kappa) in k.iter().enumerate() {
        let p = params.at(i);
        h += site_term(kappa, energy_tau(profile, i, p, boundary), p);
    }
    h
}

/// Every term of the energy that involves site `site`. Differences of this
/// quantity give exact energy changes for single-site updates.
pub fn local_energy(profile: &AngleProfile, params: &impl Couplings, boundary: Boundary, site: usize) -> f64 {
    let k = &profile.kappa;
    let n = k.len();
    let mut h = 0.0;
    if site > 0 {
        h += (k[site] - k[site - 1]).powi(2);
    } else if boundary == Boundary::Soliton {
        h += k[0] * k[0];
    }
    if site + 1 < n {
        h += (k[site + 1] - k[site]).powi(2);
    } else if boundary == Boundary::Soliton {
        h += k[site] * k[site];
    }
    let p = params.at(site);
    h + site_term(k[site], energy_tau(profile, site, p, boundary), p)
}

/// Partial derivatives of the energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGradient {
    /// `∂H/∂κ_i`, one per site.
    pub kappa: Vec<f64>,
    /// `∂H/∂τ`, aligned with `AngleProfile::tau`.
    pub tau: Vec<f64>,
}

/// Analytic gradient of [`total_energy`].
pub fn energy_gradient(profile: &AngleProfile, params: &impl Couplings) -> EnergyGradient {
    chain_energy_gradient(profile, params, Boundary::Open)
}

/// Analytic gradient of [`chain_energy`]. Under [`Boundary::Soliton`] the
/// site-0 torsion sits at its optimum, so its `κ` derivative needs no chain
/// rule term.
pub fn chain_energy_gradient(profile: &AngleProfile, params: &impl Couplings, boundary: Boundary) -> EnergyGradient {
    let k = &profile.kappa;
    let n = k.len();
    let mut dk = vec![0.0; n];
    for i in 0..n {
        if i > 0 {
            dk[i] += 2.0 * (k[i] - k[i - 1]);
        }
        if i + 1 < n {
            dk[i] += 2.0 * (k[i] - k[i + 1]);
        }
        let p = params.at(i);
        let q = k[i] * k[i];
        dk[i] += 4.0 * p.lambda * k[i] * (q - p.m * p.m);
        if let Some(t) = energy_tau(profile, i, p, boundary) {
            dk[i] += p.d * k[i] * t * t - 2.0 * p.b * k[i] * t;
        }
    }
    if boundary == Boundary::Soliton && n > 0 {
        dk[0] += 2.0 * k[0];
        dk[n - 1] += 2.0 * k[n - 1];
    }
    let dt = profile
        .tau
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let site = j + 1;
            let p = params.at(site);
            let q = k[site] * k[site];
            p.d * q * t - p.b * q - p.a + p.c * t
        })
        .collect();
    EnergyGradient { kappa: dk, tau: dt }
}

/// The energy minimized by the relaxation solver: virtual `κ = 0` at both
/// ends and the torsion eliminated at every site,
/// `Σ_{i=0}^{N} (κ_{i+1} - κ_i)² + Σ V[κ_i]`.
pub fn soliton_energy(kappa: &[f64], params: &impl Couplings) -> Result<f64, EnergyError> {
    let n = kappa.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut h = kappa[0] * kappa[0] + kappa[n - 1] * kappa[n - 1];
    h += kappa.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
    for (i, &k) in kappa.iter().enumerate() {
        h += effective_potential(k, params.at(i))?;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> EnergyParams {
        EnergyParams::new(1.3, 1.1, 0.4, -0.7, 1.2, 0.6).unwrap()
    }

    #[test]
    fn vacuum_has_zero_energy() {
        let p = EnergyParams::new(2.0, 1.5, 0.0, 0.3, 1.0, 0.5).unwrap();
        let prof = AngleProfile::new(vec![1.5; 6], vec![0.0; 5], vec![3.8; 7]).unwrap();
        assert_eq!(total_energy(&prof, &p), 0.0);
    }

    #[test]
    fn single_site_at_zero() {
        let p = EnergyParams::new(2.0, 1.5, 0.7, 0.3, 1.0, 0.5).unwrap();
        let prof = AngleProfile { kappa: vec![0.0], tau: vec![], bond_lengths: vec![3.8, 3.8], ..Default::default() };
        assert!((total_energy(&prof, &p) - 2.0 * 1.5f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn constructor_rejects_unbounded_couplings() {
        assert!(EnergyParams::new(0.0, 1.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(EnergyParams::new(1.0, 1.0, 0.0, 0.0, -1.0, 0.0).is_err());
        assert!(EnergyParams::new(1.0, 1.0, 0.0, 0.0, 1.0, -0.1).is_err());
        assert!(EnergyParams::new(1.0, f64::NAN, 0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn torsion_of_kappa_values() {
        let p = EnergyParams::new(1.0, 1.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        for k in [-2.0, 0.0, 0.3, 1.7] {
            assert_eq!(torsion_of_kappa(k, &p).unwrap(), 1.0);
        }
        let p = EnergyParams::new(1.0, 1.0, 2.0, 3.0, 1.0, 1.0).unwrap();
        assert_eq!(torsion_of_kappa(1.0, &p).unwrap(), 2.5);
        let far = torsion_of_kappa(1e6, &p).unwrap();
        assert!((far - 3.0).abs() < 1e-9);
        let p = EnergyParams::new(1.0, 1.0, 2.0, 3.0, 0.0, 1.0).unwrap();
        assert_eq!(torsion_of_kappa(0.0, &p), Err(EnergyError::DivisionByZero { kappa: 0.0 }));
        assert!(effective_potential(0.0, &p).is_err());
    }

    #[test]
    fn potential_without_torsion_coupling_is_double_well() {
        let p = EnergyParams::double_well(1.7, 1.2);
        for k in [-2.0, -1.2, 0.0, 0.4, 1.2, 3.0] {
            let expected = 1.7 * (k * k - 1.44f64).powi(2);
            assert!((effective_potential(k, &p).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn potential_large_kappa_asymptotics() {
        let p = params();
        let mut last = f64::INFINITY;
        for k in [1e2, 1e3, 1e4] {
            let ratio = effective_potential(k, &p).unwrap() / k.powi(4);
            let err = (ratio - p.lambda).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn slope_is_derivative_in_kappa_squared() {
        let p = params();
        for k in [0.2f64, 0.9, 1.4, 2.5] {
            let h = 1e-6;
            let q = k * k;
            let fd = (effective_potential((q + h).sqrt(), &p).unwrap() - effective_potential((q - h).sqrt(), &p).unwrap())
                / (2.0 * h);
            assert!((fd - potential_slope(k, &p).unwrap()).abs() < 1e-7);
        }
    }

    #[test]
    fn reference_variant_is_distinct() {
        let p = params();
        let a = effective_potential(0.8, &p).unwrap();
        let b = effective_potential_reference(0.8, &p).unwrap();
        assert!((a - b).abs() > 1e-3);
        assert!(effective_potential_reference(0.8, &EnergyParams::double_well(1.0, 1.0)).is_err());
    }

    #[test]
    fn local_energy_differences_match_total() {
        let p = params();
        let prof = AngleProfile::new(vec![0.3, 1.2, -0.4, 0.9, 1.5], vec![0.2, -1.0, 2.0, 0.7], vec![3.8; 6]).unwrap();
        for boundary in [Boundary::Open, Boundary::Soliton] {
            for site in 0..prof.len() {
                let mut moved = prof.clone();
                moved.kappa[site] += 0.37;
                if site > 0 {
                    moved.set_tau_at(site, prof.tau_at(site).unwrap() - 0.2);
                }
                let d_total = chain_energy(&moved, &p, boundary) - chain_energy(&prof, &p, boundary);
                let d_local = local_energy(&moved, &p, boundary, site) - local_energy(&prof, &p, boundary, site);
                assert!((d_total - d_local).abs() < 1e-12, "{boundary:?} site {site}");
            }
        }
    }

    #[test]
    fn soliton_energy_is_chain_energy_with_eliminated_torsion() {
        let p = params();
        let kappa = vec![0.3, 1.2, -0.4, 0.9, 1.5, -1.1];
        let site_tau: Vec<f64> = kappa.iter().map(|&k| torsion_of_kappa(k, &p).unwrap()).collect();
        let prof = AngleProfile::from_site_angles(kappa.clone(), &site_tau, 3.8).unwrap();
        let a = soliton_energy(&kappa, &p).unwrap();
        let b = chain_energy(&prof, &p, Boundary::Soliton);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn segmented_lookup() {
        let a = EnergyParams::double_well(1.0, 1.0);
        let b = EnergyParams::double_well(2.0, 1.0);
        let seg = SegmentedParams::new(vec![
            ParamSegment { start: 5, end: 9, params: b },
            ParamSegment { start: 0, end: 4, params: a },
        ])
        .unwrap();
        assert_eq!(seg.at(0).lambda, 1.0);
        assert_eq!(seg.at(4).lambda, 1.0);
        assert_eq!(seg.at(5).lambda, 2.0);
        assert_eq!(seg.at(40).lambda, 2.0);
        assert!(SegmentedParams::new(vec![
            ParamSegment { start: 0, end: 4, params: a },
            ParamSegment { start: 4, end: 9, params: b },
        ])
        .is_err());
    }
}
