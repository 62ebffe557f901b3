use super::mc::{mc_step, rng_for, McState};
use super::{DynamicsError, MCConfig, Schedule};
use crate::energy::{effective_potential, Boundary, EnergyParams};
use crate::geometry::{observables::radius_of_gyration_of, AngleProfile, CANONICAL_BOND};
use crate::soliton::soliton_profile;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `Rg ≈ R0 · N^ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub nu: f64,
    /// Å.
    pub r0: f64,
    /// Number of chain lengths in the fit.
    pub lengths: usize,
}

/// Least-squares line through `(ln N, ln Rg)`; needs at least four lengths.
pub fn fit_scaling(lengths: &[usize], rg: &[f64]) -> Result<ScalingFit, DynamicsError> {
    if lengths.len() != rg.len() {
        return Err(DynamicsError::InsufficientData(format!("{} lengths but {} radii", lengths.len(), rg.len())));
    }
    if lengths.len() < 4 {
        return Err(DynamicsError::InsufficientData(format!("need at least 4 chain lengths, got {}", lengths.len())));
    }
    if rg.iter().any(|&r| !(r > 0.0)) || lengths.iter().any(|&n| n == 0) {
        return Err(DynamicsError::InsufficientData("non-positive length or radius".into()));
    }
    let xs: Vec<f64> = lengths.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = rg.iter().map(|r| r.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(DynamicsError::InsufficientData("all chain lengths are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let nu = sxy / sxx;
    Ok(ScalingFit { nu, r0: (my - nu * mx).exp(), lengths: lengths.len() })
}

/// Bond angle of the homogeneous ground state: the minimizer of `V[κ]` on
/// `[0, 2π/3)`, the range allowed by self-avoidance of next-nearest
/// neighbours.
pub fn ground_state_kappa(params: &EnergyParams) -> Result<f64, DynamicsError> {
    let hi = 2.0 * PI / 3.0 - 1e-6;
    let v = |k: f64| effective_potential(k, params);
    let grid = 4000;
    let mut best = (0.0, v(0.0)?);
    for i in 1..=grid {
        let k = hi * i as f64 / grid as f64;
        let e = v(k)?;
        if e < best.1 {
            best = (k, e);
        }
    }
    // Golden-section refinement in the bracketing cell.
    let step = hi / grid as f64;
    let (mut a, mut b) = ((best.0 - step).max(0.0), (best.0 + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if v(c)? < v(d)? {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(0.5 * (a + b))
}

/// Homogeneous ground-state profile for a chain of `vertices` Cα atoms.
pub fn ground_state_profile(params: &EnergyParams, vertices: usize, bond_length: f64) -> Result<AngleProfile, DynamicsError> {
    let k = ground_state_kappa(params)?;
    let sites = vertices.saturating_sub(2);
    soliton_profile(&vec![k; sites], params, bond_length).map_err(|e| DynamicsError::InvalidConfig(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThetaScanConfig {
    pub kts: Vec<f64>,
    /// Steps per `(N, kT)` run.
    pub steps: usize,
    /// Leading fraction of each run discarded before averaging.
    pub burn_in: f64,
    pub measure_every: usize,
    /// Independent runs per `(N, kT)`, each on its own random stream.
    pub replicas: usize,
    pub sigma_kappa: f64,
    pub sigma_tau: f64,
    pub seed: u64,
    pub kappa_only: bool,
    pub boundary: Boundary,
    pub bond_length: f64,
}

impl Default for ThetaScanConfig {
    fn default() -> Self {
        Self {
            kts: vec![0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0],
            steps: 200_000,
            burn_in: 0.2,
            measure_every: 100,
            replicas: 1,
            sigma_kappa: 0.1,
            sigma_tau: 0.1,
            seed: 0,
            kappa_only: false,
            boundary: Boundary::Open,
            bond_length: CANONICAL_BOND,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    /// Number of vertices.
    pub n: usize,
    pub kt: f64,
    pub mean_rg: f64,
    /// Standard error of the mean: from the spread of replica means when
    /// there are several replicas, otherwise from all samples (ignoring
    /// autocorrelation).
    pub sem_rg: f64,
    pub acceptance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaScan {
    pub points: Vec<ScanPoint>,
    /// One scaling fit per temperature, in the order of `kts`.
    pub fits: Vec<(f64, ScalingFit)>,
    /// Fit at the highest temperature.
    pub high: ScalingFit,
    /// Fit at the lowest temperature.
    pub low: ScalingFit,
    /// Temperature of steepest `d ln Rg / d ln kT` for the longest chain.
    pub theta_kt: f64,
}

/// Mean radius of gyration over a grid of chain lengths and temperatures,
/// each run started from the homogeneous ground state, then power-law fits
/// in `N` per temperature.
///
/// The homogeneous profile is an exact minimum only with [`Boundary::Open`],
/// the default here; the soliton boundary pulls the end bond angles towards
/// zero and, for weak couplings, straightens short chains.
pub fn theta_scan(params: &EnergyParams, config: &ThetaScanConfig, chain_lengths: &[usize]) -> Result<ThetaScan, DynamicsError> {
    if chain_lengths.len() < 4 {
        return Err(DynamicsError::InsufficientData(format!("need at least 4 chain lengths, got {}", chain_lengths.len())));
    }
    if config.kts.len() < 2 {
        return Err(DynamicsError::InsufficientData("need at least 2 temperatures".into()));
    }
    if !(0.0..1.0).contains(&config.burn_in) {
        return Err(DynamicsError::InvalidConfig(format!("burn-in fraction {} outside [0, 1)", config.burn_in)));
    }
    let mut kts = config.kts.clone();
    kts.sort_by(f64::total_cmp);
    if config.replicas == 0 {
        return Err(DynamicsError::InvalidConfig("replicas must be at least 1".into()));
    }
    let mc = MCConfig {
        schedule: Schedule::constant(config.steps, 1.0),
        sigma_kappa: config.sigma_kappa,
        sigma_tau: config.sigma_tau,
        seed: config.seed,
        measure_every: config.measure_every.max(1),
        kappa_only: config.kappa_only,
        boundary: config.boundary,
        min_distance: CANONICAL_BOND,
    };
    mc.validate()?;
    let cells: Vec<(usize, f64)> = chain_lengths.iter().flat_map(|&n| kts.iter().map(move |&kt| (n, kt))).collect();
    let replicas = config.replicas;
    let jobs: Vec<(usize, usize, f64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(cell, &(n, kt))| (0..replicas).map(move |r| (cell * replicas + r, n, kt)))
        .collect();
    let burn = (config.steps as f64 * config.burn_in) as usize;
    let runs = jobs
        .par_iter()
        .map(|&(job, n, kt)| -> Result<(Vec<f64>, f64), DynamicsError> {
            let start = ground_state_profile(params, n, config.bond_length)?;
            let mut state = McState::new(start, params, config.boundary, CANONICAL_BOND)?;
            let mut rng = rng_for(config.seed, job as u64);
            let mut rgs = Vec::new();
            for step in 1..=config.steps {
                mc_step(&mut state, params, kt, &mc, &mut rng);
                if step > burn && step % mc.measure_every == 0 {
                    rgs.push(radius_of_gyration_of(state.vertices()));
                }
            }
            if rgs.is_empty() {
                rgs.push(radius_of_gyration_of(state.vertices()));
            }
            Ok((rgs, state.accepted as f64 / state.proposed.max(1) as f64))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sem = |v: &[f64]| {
        let m = mean(v);
        let var = v.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0).max(1.0);
        (var / v.len() as f64).sqrt()
    };
    let points: Vec<ScanPoint> = cells
        .iter()
        .zip(runs.chunks(replicas))
        .map(|(&(n, kt), group)| {
            let all: Vec<f64> = group.iter().flat_map(|g| g.0.iter().copied()).collect();
            let means: Vec<f64> = group.iter().map(|g| mean(&g.0)).collect();
            ScanPoint {
                n,
                kt,
                mean_rg: mean(&all),
                sem_rg: if replicas > 1 { sem(&means) } else { sem(&all) },
                acceptance: mean(&group.iter().map(|g| g.1).collect::<Vec<_>>()),
            }
        })
        .collect();

    let mut fits = Vec::with_capacity(kts.len());
    for &kt in &kts {
        let (ns, rgs): (Vec<usize>, Vec<f64>) = points.iter().filter(|p| p.kt == kt).map(|p| (p.n, p.mean_rg)).unzip();
        fits.push((kt, fit_scaling(&ns, &rgs)?));
    }
    let longest = *chain_lengths.iter().max().unwrap_or(&0);
    let curve: Vec<(f64, f64)> = points.iter().filter(|p| p.n == longest).map(|p| (p.kt, p.mean_rg)).collect();
    let theta_kt = curve
        .windows(2)
        .map(|w| ((w[1].1.ln() - w[0].1.ln()) / (w[1].0.ln() - w[0].0.ln()), (w[0].0 * w[1].0).sqrt()))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map_or(f64::NAN, |(_, kt)| kt);
    Ok(ThetaScan { high: fits[fits.len() - 1].1, low: fits[0].1, points, fits, theta_kt })
}
