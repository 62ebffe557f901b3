//! Frame rotations about the tangents: they change `(κ, τ)` but not the chain.

use super::{wrap_angle, AngleProfile, GeometryError};
use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::RangeInclusive;

const PHASE_SNAP: f64 = 1e-12;

/// Rotates frame `k` by `deltas[k]` about its tangent (`deltas` has one entry
/// per frame, i.e. `profile.len() + 1`).
///
/// Torsions shift by `Δ_{k+1} - Δ_k`. Bond-angle generators rotate by
/// `Δ_{k+1}`; rotations by `π` are folded into the sign of `κ`, anything else
/// is kept in [`AngleProfile::bend_phase`] (normalized to `[-π/2, π/2)`).
pub fn so2_gauge(profile: &AngleProfile, deltas: &[f64]) -> Result<AngleProfile, GeometryError> {
    profile.validate()?;
    let n = profile.len();
    if deltas.len() != n + 1 && !(n == 0 && deltas.len() <= 1) {
        return Err(GeometryError::InconsistentLengths(format!(
            "{} frame rotations for {} frames",
            deltas.len(),
            n + 1
        )));
    }
    let mut out = profile.clone();
    let mut phases = profile.bend_phase.clone().unwrap_or_else(|| vec![0.0; n]);
    for k in 0..n {
        if k >= 1 {
            out.tau[k - 1] = wrap_angle(profile.tau[k - 1] + deltas[k + 1] - deltas[k]);
        }
        let mut phase = wrap_angle(phases[k] + deltas[k + 1]);
        let mut kappa = profile.kappa[k];
        if phase >= FRAC_PI_2 {
            phase -= PI;
            kappa = -kappa;
        } else if phase < -FRAC_PI_2 {
            phase += PI;
            kappa = -kappa;
        }
        if phase.abs() < PHASE_SNAP {
            phase = 0.0;
        }
        out.kappa[k] = kappa;
        phases[k] = phase;
    }
    out.bend_phase = if phases.iter().all(|&p| p == 0.0) { None } else { Some(phases) };
    Ok(out)
}

/// The discrete Z₂ gauge move at `site`: `κ_k → -κ_k` for all `k ≥ site` and
/// `τ_site → τ_site - π`.
pub fn z2_gauge(profile: &AngleProfile, site: usize) -> Result<AngleProfile, GeometryError> {
    if site >= profile.len() {
        return Err(GeometryError::SiteOutOfRange { site, len: profile.len() });
    }
    let mut out = profile.clone();
    for k in &mut out.kappa[site..] {
        *k = -*k;
    }
    if let Some(t) = out.tau_at(site) {
        out.set_tau_at(site, wrap_angle(t - PI));
    }
    Ok(out)
}

/// Sites `i` where the torsion changes sign between `i` and `i + 1`, plus
/// sites where it is exactly zero.
pub fn detect_flattening_points(profile: &AngleProfile) -> Vec<usize> {
    let tau = &profile.tau;
    let mut points = Vec::new();
    for (j, &t) in tau.iter().enumerate() {
        let site = j + 1;
        if t == 0.0 {
            points.push(site);
        } else if let Some(&next) = tau.get(j + 1) {
            if t * next < 0.0 {
                points.push(site);
            }
        }
    }
    points
}

/// Flattening points merged into regions: points at most one site apart
/// belong to the same region.
pub fn flattening_regions(profile: &AngleProfile) -> Vec<RangeInclusive<usize>> {
    merge_runs(&detect_flattening_points(profile), 1)
}

fn merge_runs(sorted: &[usize], max_gap: usize) -> Vec<RangeInclusive<usize>> {
    let mut runs: Vec<RangeInclusive<usize>> = Vec::new();
    for &s in sorted {
        match runs.last_mut() {
            Some(r) if s <= r.end() + max_gap => *r = *r.start()..=s,
            _ => runs.push(s..=s),
        }
    }
    runs
}

/// `Σ|κ_{i+1} - κ_i| + Σ|wrap(τ_{i+1} - τ_i)|`.
pub fn total_variation(profile: &AngleProfile) -> f64 {
    let dk: f64 = profile.kappa.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let dt: f64 = profile.tau.windows(2).map(|w| wrap_angle(w[1] - w[0]).abs()).sum();
    dk + dt
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnfoldOptions {
    /// Torsions with magnitude above this are irregular, rad.
    pub tau_threshold: f64,
    /// Two sign changes at most this many sites apart form a cluster.
    pub cluster_span: usize,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        Self { tau_threshold: 2.5, cluster_span: 2 }
    }
}

/// [`unfold_gauge_with`] using the default options.
pub fn unfold_gauge(profile: &AngleProfile) -> (AngleProfile, Vec<usize>) {
    unfold_gauge_with(profile, &UnfoldOptions::default())
}

/// Exposes soliton kinks in `κ` by Z₂ moves inside irregular torsion regions.
///
/// A site is irregular when `|τ| > tau_threshold` or it sits between two
/// torsion sign changes that are at most `cluster_span` sites apart. Each
/// maximal run of irregular sites gets one Z₂ move at its centre, kept only if
/// it lowers [`total_variation`]. Returns the new profile and the sites where
/// moves were applied, in order.
pub fn unfold_gauge_with(profile: &AngleProfile, opts: &UnfoldOptions) -> (AngleProfile, Vec<usize>) {
    let n = profile.len();
    let mut irregular = vec![false; n];
    for site in 1..n {
        if profile.tau_at(site).is_some_and(|t| t.abs() > opts.tau_threshold) {
            irregular[site] = true;
        }
    }
    let points = detect_flattening_points(profile);
    for pair in points.windows(2) {
        if pair[1] - pair[0] <= opts.cluster_span {
            for flag in &mut irregular[pair[0] + 1..=pair[1]] {
                *flag = true;
            }
        }
    }
    let sites: Vec<usize> = (0..n).filter(|&s| irregular[s]).collect();
    let runs = merge_runs(&sites, 0);

    let mut current = profile.clone();
    let mut score = total_variation(&current);
    let mut applied = Vec::new();
    for run in runs {
        let centre = (run.start() + run.end()) / 2;
        let trial = match z2_gauge(&current, centre) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let trial_score = total_variation(&trial);
        if trial_score < score - 1e-12 {
            current = trial;
            score = trial_score;
            applied.push(centre);
        }
    }
    (current, applied)
}
