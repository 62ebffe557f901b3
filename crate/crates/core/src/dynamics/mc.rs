use super::saw::{cross_avoiding, self_avoiding_with, SpatialGrid};
use super::{glauber_accept, DynamicsError, MCConfig};
use crate::energy::{chain_energy, local_energy, torsion_of_kappa, Boundary, Couplings};
use crate::geometry::{
    kabsch, observables::radius_of_gyration_of, transfer_matrix, wrap_angle, wrap_bond_angle, AngleProfile,
    CalphaChain, FrenetFrame, Vec3,
};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A single-site perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub site: usize,
    pub delta_kappa: f64,
    /// Ignored at site 0, which has no torsion.
    pub delta_tau: f64,
}

fn draw_move(n_sites: usize, sigma_kappa: f64, sigma_tau: f64, rng: &mut impl Rng) -> Move {
    let site = rng.random_range(0..n_sites);
    let zk: f64 = rng.sample(StandardNormal);
    let zt: f64 = rng.sample(StandardNormal);
    Move { site, delta_kappa: sigma_kappa * zk, delta_tau: sigma_tau * zt }
}

fn apply_move(profile: &mut AngleProfile, mv: &Move) {
    let k = &mut profile.kappa[mv.site];
    *k = wrap_bond_angle(*k + mv.delta_kappa);
    if let Some(t) = profile.tau_at(mv.site) {
        profile.set_tau_at(mv.site, wrap_angle(t + mv.delta_tau));
    }
}

/// Gaussian perturbation of one uniformly chosen site. Returns the new
/// profile and the site. Empty profiles are returned unchanged with site 0.
pub fn propose_move(profile: &AngleProfile, config: &MCConfig, rng: &mut impl Rng) -> (AngleProfile, usize) {
    let mut out = profile.clone();
    if profile.is_empty() {
        return (out, 0);
    }
    let mv = draw_move(profile.len(), config.sigma_kappa, config.sigma_tau, rng);
    apply_move(&mut out, &mv);
    (out, mv.site)
}

/// Markov-chain state: the profile together with its energy and geometry.
#[derive(Debug, Clone)]
pub struct McState {
    profile: AngleProfile,
    energy: f64,
    transfers: Vec<Matrix3<f64>>,
    /// `frames[k]` is the frame after transfer `k`.
    frames: Vec<Matrix3<f64>>,
    vertices: Vec<Vec3>,
    scratch_frames: Vec<Matrix3<f64>>,
    scratch_vertices: Vec<Vec3>,
    grid: SpatialGrid,
    pub proposed: u64,
    pub accepted: u64,
}

impl McState {
    /// Fails when the profile is inconsistent, carries bend phases, or its
    /// chain violates self-avoidance at `min_distance`.
    pub fn new(
        profile: AngleProfile,
        params: &impl Couplings,
        boundary: Boundary,
        min_distance: f64,
    ) -> Result<Self, DynamicsError> {
        profile.validate()?;
        if profile.bend_phase.is_some() {
            return Err(DynamicsError::InvalidConfig("profiles with bend phases cannot be sampled".into()));
        }
        let transfers: Vec<_> =
            (0..profile.len()).map(|k| transfer_matrix(profile.kappa[k], profile.tau_at(k).unwrap_or(0.0))).collect();
        let mut state = Self {
            energy: chain_energy(&profile, params, boundary),
            frames: vec![Matrix3::zeros(); profile.len()],
            vertices: Vec::new(),
            scratch_frames: vec![Matrix3::zeros(); profile.len()],
            scratch_vertices: Vec::new(),
            grid: SpatialGrid::new(min_distance),
            transfers,
            profile,
            proposed: 0,
            accepted: 0,
        };
        crate::geometry::frames::reconstruct_into(&state.profile, &mut state.vertices)?;
        let (frames, vertices) = (&mut state.frames, &mut state.vertices);
        state.scratch_vertices = vertices.clone();
        Self::propagate(&state.profile, &state.transfers, 0, frames, vertices);
        if !self_avoiding_with(&state.vertices, min_distance, &mut state.grid) {
            return Err(DynamicsError::NotSelfAvoiding);
        }
        Ok(state)
    }

    /// Recomputes frames from `site` and vertices from `site + 2` on.
    fn propagate(
        profile: &AngleProfile,
        transfers: &[Matrix3<f64>],
        site: usize,
        frames: &mut [Matrix3<f64>],
        vertices: &mut [Vec3],
    ) {
        let mut frame = if site == 0 { FrenetFrame::reference().as_rows() } else { frames[site - 1] };
        for k in site..transfers.len() {
            frame = transfers[k] * frame;
            frames[k] = frame;
            let t = Vec3::new(frame[(2, 0)], frame[(2, 1)], frame[(2, 2)]);
            vertices[k + 2] = vertices[k + 1] + profile.bond_lengths[k + 1] * t;
        }
    }

    pub fn profile(&self) -> &AngleProfile {
        &self.profile
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn chain(&self) -> CalphaChain {
        CalphaChain::new(self.vertices.clone())
    }

    /// Recomputes the cached energy from scratch.
    pub fn refresh_energy(&mut self, params: &impl Couplings, boundary: Boundary) {
        self.energy = chain_energy(&self.profile, params, boundary);
    }
}

/// One Monte Carlo step at temperature `kt`: propose, evaluate the Glauber
/// rule, and for moves that pass it test self-avoidance. Returns whether the
/// move was accepted.
///
/// The random stream is consumed identically whatever the outcome.
pub fn mc_step(state: &mut McState, params: &impl Couplings, kt: f64, config: &MCConfig, rng: &mut impl Rng) -> bool {
    let n = state.profile.len();
    if n == 0 {
        return false;
    }
    let sigma_tau = if config.kappa_only { 0.0 } else { config.sigma_tau };
    let mv = draw_move(n, config.sigma_kappa, sigma_tau, rng);
    let u: f64 = rng.random();
    state.proposed += 1;

    let site = mv.site;
    let old_kappa = state.profile.kappa[site];
    let old_tau = state.profile.tau_at(site);
    let before = local_energy(&state.profile, params, config.boundary, site);
    apply_move(&mut state.profile, &mv);
    if config.kappa_only && site > 0 {
        match torsion_of_kappa(state.profile.kappa[site], params.at(site)) {
            Ok(t) => state.profile.set_tau_at(site, t),
            Err(_) => {
                state.profile.kappa[site] = old_kappa;
                return false;
            }
        }
    }
    let after = local_energy(&state.profile, params, config.boundary, site);
    let delta = after - before;
    let restore = |state: &mut McState| {
        state.profile.kappa[site] = old_kappa;
        if let Some(t) = old_tau {
            state.profile.set_tau_at(site, t);
        }
    };
    if !delta.is_finite() || !glauber_accept(delta, kt, u) {
        restore(state);
        return false;
    }

    // Geometry: every vertex after site + 1 moves rigidly.
    let new_transfer = transfer_matrix(state.profile.kappa[site], state.profile.tau_at(site).unwrap_or(0.0));
    let old_transfer = std::mem::replace(&mut state.transfers[site], new_transfer);
    state.scratch_vertices.copy_from_slice(&state.vertices);
    state.scratch_frames.copy_from_slice(&state.frames);
    McState::propagate(&state.profile, &state.transfers, site, &mut state.scratch_frames, &mut state.scratch_vertices);
    if !cross_avoiding(&state.scratch_vertices, site + 2, config.min_distance, &mut state.grid) {
        state.transfers[site] = old_transfer;
        restore(state);
        return false;
    }
    std::mem::swap(&mut state.vertices, &mut state.scratch_vertices);
    std::mem::swap(&mut state.frames, &mut state.scratch_frames);
    state.energy += delta;
    state.accepted += 1;
    debug_assert!(self_avoiding_with(&state.vertices, config.min_distance, &mut SpatialGrid::default()));
    true
}

/// One row of a [`Trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub step: u64,
    pub kt: f64,
    pub energy: f64,
    /// Radius of gyration, Å.
    pub rg: f64,
    /// RMSD to the reference chain, Å.
    pub rmsd: Option<f64>,
    /// Accepted fraction of the moves since the previous sample.
    pub acceptance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub samples: Vec<Sample>,
    pub final_profile: AngleProfile,
}

fn sample(state: &McState, step: u64, kt: f64, reference: Option<&CalphaChain>, acceptance: f64) -> Sample {
    let rmsd = reference.and_then(|r| kabsch(&state.vertices, &r.vertices).ok()).map(|s| s.rmsd);
    Sample { step, kt, energy: state.energy, rg: radius_of_gyration_of(&state.vertices), rmsd, acceptance }
}

/// The seeded generator used by [`run_schedule`].
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs the temperature schedule of `config` from `initial`, sampling every
/// `measure_every` steps (and at the first and last step). Deterministic for
/// a given configuration.
pub fn run_schedule(
    initial: &AngleProfile,
    params: &impl Couplings,
    config: &MCConfig,
    reference: Option<&CalphaChain>,
) -> Result<Trajectory, DynamicsError> {
    config.validate()?;
    let mut state = McState::new(initial.clone(), params, config.boundary, config.min_distance)?;
    let mut rng = rng_for(config.seed, 0);
    let stages = &config.schedule.stages;
    let first_kt = stages.first().map_or(f64::NAN, |s| s.kt);
    let mut samples = vec![sample(&state, 0, first_kt, reference, 0.0)];
    let mut step = 0u64;
    let mut window_accepted = 0u64;
    let mut window_steps = 0u64;
    let every = config.measure_every as u64;
    for stage in stages {
        for _ in 0..stage.steps {
            window_accepted += u64::from(mc_step(&mut state, params, stage.kt, config, &mut rng));
            window_steps += 1;
            step += 1;
            if step % every == 0 {
                state.refresh_energy(params, config.boundary);
                samples.push(sample(&state, step, stage.kt, reference, window_accepted as f64 / window_steps as f64));
                window_accepted = 0;
                window_steps = 0;
            }
        }
    }
    if window_steps > 0 {
        state.refresh_energy(params, config.boundary);
        let kt = stages.last().map_or(first_kt, |s| s.kt);
        samples.push(sample(&state, step, kt, reference, window_accepted as f64 / window_steps as f64));
    }
    Ok(Trajectory { seed: config.seed, samples, final_profile: state.profile })
}

/// [`run_schedule`] once per seed, in parallel. Results are in seed order.
pub fn run_many(
    initial: &AngleProfile,
    params: &impl Couplings,
    config: &MCConfig,
    reference: Option<&CalphaChain>,
    seeds: &[u64],
) -> Result<Vec<Trajectory>, DynamicsError> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = MCConfig { seed, ..config.clone() };
            run_schedule(initial, params, &cfg, reference)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Schedule;
    use crate::energy::EnergyParams;
    use crate::geometry::reconstruct;

    fn helix(n: usize) -> AngleProfile {
        AngleProfile::from_site_angles(vec![1.55; n], &vec![0.85; n], 3.8).unwrap()
    }

    fn config(steps: usize, kt: f64) -> MCConfig {
        MCConfig { schedule: Schedule::constant(steps, kt), seed: 7, measure_every: 100, ..Default::default() }
    }

    #[test]
    fn zero_sigma_leaves_profile() {
        let p = helix(8);
        let cfg = MCConfig { sigma_kappa: 0.0, sigma_tau: 0.0, ..config(1, 1.0) };
        let (q, site) = propose_move(&p, &cfg, &mut rng_for(1, 0));
        assert_eq!(p, q);
        assert!(site < 8);
    }

    #[test]
    fn reverse_increment_restores_profile() {
        let mut p = helix(8);
        let orig = p.clone();
        let mv = Move { site: 3, delta_kappa: 0.1234, delta_tau: -0.31 };
        apply_move(&mut p, &mv);
        apply_move(&mut p, &Move { site: 3, delta_kappa: -0.1234, delta_tau: 0.31 });
        for (a, b) in p.kappa.iter().zip(&orig.kappa).chain(p.tau.iter().zip(&orig.tau)) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn cached_geometry_matches_reconstruction() {
        let p = EnergyParams::new(1.0, 1.5, 0.5, 0.0, 1.0, 0.0).unwrap();
        let mut cfg = config(3000, 2.0);
        cfg.measure_every = 3000;
        let traj = run_schedule(&helix(20), &p, &cfg, None).unwrap();
        let mut state = McState::new(helix(20), &p, cfg.boundary, cfg.min_distance).unwrap();
        let mut rng = rng_for(cfg.seed, 0);
        for _ in 0..3000 {
            mc_step(&mut state, &p, 2.0, &cfg, &mut rng);
        }
        assert!(state.accepted > 100);
        assert_eq!(state.profile(), &traj.final_profile);
        let rebuilt = reconstruct(state.profile()).unwrap();
        for (a, b) in rebuilt.vertices.iter().zip(state.vertices()) {
            assert!((a - b).norm() < 1e-9);
        }
        let e = chain_energy(state.profile(), &p, cfg.boundary);
        assert!((e - state.energy()).abs() < 1e-9 * e.abs().max(1.0));
        assert!(crate::dynamics::self_avoidance_ok(&rebuilt));
    }

    #[test]
    fn zero_step_schedule_has_one_sample() {
        let p = EnergyParams::double_well(1.0, 1.5);
        let traj = run_schedule(&helix(6), &p, &config(0, 1.0), None).unwrap();
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.samples[0].step, 0);
    }

    #[test]
    fn deterministic_for_seed() {
        let p = EnergyParams::double_well(1.0, 1.5);
        let reference = reconstruct(&helix(12)).unwrap();
        let a = run_schedule(&helix(12), &p, &config(2000, 0.5), Some(&reference)).unwrap();
        let b = run_schedule(&helix(12), &p, &config(2000, 0.5), Some(&reference)).unwrap();
        assert_eq!(a, b);
        assert!(a.samples.windows(2).all(|w| w[0].step < w[1].step));
        let c = run_schedule(&helix(12), &p, &MCConfig { seed: 8, ..config(2000, 0.5) }, None).unwrap();
        assert_ne!(a.final_profile, c.final_profile);
    }

    #[test]
    fn cold_chain_rejects_uphill_moves() {
        let p = EnergyParams::double_well(1.0, 1.55);
        let traj = run_schedule(&helix(10), &p, &config(2000, 1e-12), None).unwrap();
        let e0 = traj.samples[0].energy;
        assert!(traj.samples.iter().all(|s| s.energy <= e0 + 1e-12));
    }

    #[test]
    fn rejects_crossing_start() {
        let p = EnergyParams::double_well(1.0, 1.5);
        let tight = AngleProfile::from_site_angles(vec![2.5; 6], &vec![0.0; 6], 3.8).unwrap();
        assert!(matches!(run_schedule(&tight, &p, &config(10, 1.0), None), Err(DynamicsError::NotSelfAvoiding)));
    }
}
