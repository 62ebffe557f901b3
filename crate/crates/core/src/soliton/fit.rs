use super::relax::{relax_newton, RelaxOptions};
use super::{soliton_profile_with_bonds, SolitonError};
use crate::energy::{EnergyParams, ParamSegment, SegmentedParams};
use crate::geometry::{kabsch, reconstruct, wrap_angle, AngleProfile, CalphaChain};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Inner solver settings. The fixed point is found with
    /// [`relax_newton`](super::relax_newton), warm-started from the target `κ`.
    pub relax: RelaxOptions,
    /// Levenberg–Marquardt iterations.
    pub max_iterations: usize,
    /// Stop as soon as the RMSD is below this, Å.
    pub target_rmsd: f64,
    /// Stop when an accepted step lowers the squared residual by less than
    /// this fraction.
    pub rel_tol: f64,
    /// Match bond and torsion angles before the coordinates.
    pub angle_prefit: bool,
    /// Which of `(λ, m, a, b, c, d)` are adjusted.
    pub free: [bool; 6],
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            relax: RelaxOptions { tol: 1e-11, max_iters: 300, record_energy: false, ..Default::default() },
            max_iterations: 200,
            target_rmsd: 1e-6,
            rel_tol: 1e-9,
            angle_prefit: true,
            free: [true; 6],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub initial_rmsd: f64,
    pub rmsd: f64,
    /// Number of relaxations performed.
    pub evaluations: usize,
    /// Levenberg–Marquardt iterations over all passes.
    pub iterations: usize,
    /// Per-vertex distance between the superposed fitted chain and the target, Å.
    pub deviations: Vec<f64>,
}

struct Evaluation {
    rmsd: f64,
    profile: AngleProfile,
    /// Superposed fitted vertices minus target vertices, flattened.
    coords: DVector<f64>,
    /// Bond-angle differences followed by wrapped torsion differences.
    angles: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Objective {
    Angles,
    Coordinates,
}

impl Evaluation {
    fn residual(&self, objective: Objective) -> &DVector<f64> {
        match objective {
            Objective::Angles => &self.angles,
            Objective::Coordinates => &self.coords,
        }
    }

    fn deviations(&self) -> Vec<f64> {
        self.coords.as_slice().chunks(3).map(|c| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()).collect()
    }
}

struct Problem<'a> {
    target: &'a AngleProfile,
    chain: CalphaChain,
    opts: &'a FitOptions,
}

impl Problem<'_> {
    fn evaluate(&self, params: &SegmentedParams) -> Option<Evaluation> {
        if params.segments.iter().any(|s| s.params.validate().is_err()) {
            return None;
        }
        let target = self.target;
        let (kappa, report) = relax_newton(&target.kappa, params, &self.opts.relax).ok()?;
        if !report.converged {
            return None;
        }
        let mut profile = soliton_profile_with_bonds(&kappa, params, target.bond_lengths.clone()).ok()?;
        profile.index_offset = target.index_offset;
        let fitted = reconstruct(&profile).ok()?;
        let sup = kabsch(&fitted.vertices, &self.chain.vertices).ok()?;
        let coords = DVector::from_iterator(
            3 * self.chain.len(),
            fitted.vertices.iter().zip(&self.chain.vertices).flat_map(|(p, q)| {
                let d = sup.apply(p) - q;
                [d.x, d.y, d.z]
            }),
        );
        let angles = DVector::from_iterator(
            kappa.len() + target.tau.len(),
            kappa
                .iter()
                .zip(&target.kappa)
                .map(|(a, b)| a - b)
                .chain(profile.tau.iter().zip(&target.tau).map(|(a, b)| wrap_angle(a - b))),
        );
        sup.rmsd.is_finite().then_some(Evaluation { rmsd: sup.rmsd, profile, coords, angles })
    }

    /// Levenberg–Marquardt from `params`; returns the final parameters and
    /// evaluation with the iteration and relaxation counts.
    fn minimize(
        &self,
        objective: Objective,
        mut params: SegmentedParams,
        mut best: Evaluation,
    ) -> (SegmentedParams, Evaluation, usize, usize) {
        let opts = self.opts;
        let mut x = pack(&params, &opts.free);
        let mut mu = 1e-3;
        let (mut iterations, mut evaluations) = (0, 0);
        while iterations < opts.max_iterations && best.rmsd > opts.target_rmsd && !x.is_empty() {
            iterations += 1;
            let r0 = best.residual(objective);
            let columns: Vec<(DVector<f64>, usize)> = (0..x.len())
                .into_par_iter()
                .map(|j| {
                    let h = 1e-6 * x[j].abs().max(1.0);
                    let mut evals = 0;
                    for step in [h, -h] {
                        let mut y = x.clone();
                        y[j] += step;
                        evals += 1;
                        if let Some(e) = self.evaluate(&unpack(&params, &opts.free, &y)) {
                            return ((e.residual(objective) - r0) / step, evals);
                        }
                    }
                    (DVector::zeros(r0.len()), evals)
                })
                .collect();
            evaluations += columns.iter().map(|c| c.1).sum::<usize>();
            let jac = DMatrix::from_columns(&columns.iter().map(|c| c.0.clone()).collect::<Vec<_>>());
            let jtj = jac.transpose() * &jac;
            let grad = jac.transpose() * r0;
            let scale = jtj.diagonal().map(|d| d.max(1e-12));
            let cost = r0.norm_squared();
            let mut accepted = false;
            while mu < 1e12 {
                let mut a = jtj.clone();
                for i in 0..x.len() {
                    a[(i, i)] += mu * scale[i];
                }
                let Some(step) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                    mu *= 10.0;
                    continue;
                };
                let mut y: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                project(&mut y, &opts.free);
                let trial_params = unpack(&params, &opts.free, &y);
                evaluations += 1;
                match self.evaluate(&trial_params) {
                    Some(e) if e.residual(objective).norm_squared() < cost => {
                        let gain = 1.0 - e.residual(objective).norm_squared() / cost;
                        best = e;
                        params = trial_params;
                        x = y;
                        mu = (mu / 3.0).max(1e-12);
                        accepted = gain > opts.rel_tol;
                        break;
                    }
                    _ => mu *= 4.0,
                }
            }
            if !accepted {
                break;
            }
        }
        (params, best, iterations, evaluations)
    }
}

/// Free couplings as a flat vector, segment-major.
fn pack(params: &SegmentedParams, free: &[bool; 6]) -> Vec<f64> {
    params
        .segments
        .iter()
        .flat_map(|s| s.params.to_array().into_iter().zip(free).filter(|(_, &f)| f).map(|(v, _)| v))
        .collect()
}

fn unpack(template: &SegmentedParams, free: &[bool; 6], x: &[f64]) -> SegmentedParams {
    let mut out = template.clone();
    let mut it = x.iter();
    for seg in &mut out.segments {
        let mut values = seg.params.to_array();
        for (v, _) in values.iter_mut().zip(free).filter(|(_, &f)| f) {
            *v = *it.next().expect("vector matches the free couplings");
        }
        seg.params = EnergyParams::from_array(values);
    }
    out
}

/// Moves couplings back into the valid region: `λ > 0`, `c, d ≥ 0`, and a
/// denominator `c + dκ²` that cannot vanish.
fn project(x: &mut [f64], free: &[bool; 6]) {
    let kinds: Vec<usize> = (0..6).filter(|&k| free[k]).collect();
    for (i, v) in x.iter_mut().enumerate() {
        match kinds[i % kinds.len()] {
            0 | 4 => *v = v.max(1e-6),
            5 => *v = v.max(0.0),
            _ => {}
        }
    }
}

/// Trains per-segment energy parameters so that the relaxed profile, turned
/// into a chain through `τ[κ]` and reconstruction, superposes onto the chain of
/// `target` with minimal RMSD.
///
/// Levenberg–Marquardt with a forward-difference Jacobian. With
/// `angle_prefit`, a first pass matches the bond and torsion angles site by
/// site; the coordinate RMSD is then minimized from both the prefit and the
/// given parameters and the better result is kept. Parameter sets whose
/// relaxation fails to converge are rejected like uphill steps. `target`
/// should be gauge-unfolded so that its `κ` passes through zero at soliton
/// centres; it is also the starting point of every relaxation.
pub fn fit_multisoliton(
    target: &AngleProfile,
    segments: &SegmentedParams,
    opts: &FitOptions,
) -> Result<(SegmentedParams, AngleProfile, FitReport), SolitonError> {
    target.validate()?;
    if target.bend_phase.is_some() {
        return Err(SolitonError::InvalidOptions("target profile carries bend phases".into()));
    }
    let problem = Problem { target, chain: reconstruct(target)?, opts };
    let params = SegmentedParams::new(segments.segments.clone())?;
    let start = problem
        .evaluate(&params)
        .ok_or_else(|| SolitonError::FitDiverged("initial parameters have no converged fixed point".into()))?;
    let initial_rmsd = start.rmsd;
    let (mut iterations, mut evaluations) = (0, 1);
    let mut starts = vec![];
    if opts.angle_prefit && initial_rmsd > opts.target_rmsd {
        let (p, e, it, ev) = problem.minimize(Objective::Angles, params.clone(), problem.evaluate(&params).expect("evaluated above"));
        iterations += it;
        evaluations += ev;
        starts.push((p, e));
    }
    starts.push((params, start));
    let mut best: Option<(SegmentedParams, Evaluation)> = None;
    for (p, e) in starts {
        let (p, e, it, ev) = problem.minimize(Objective::Coordinates, p, e);
        iterations += it;
        evaluations += ev;
        if best.as_ref().is_none_or(|b| e.rmsd < b.1.rmsd) {
            best = Some((p, e));
        }
    }
    let (params, best) = best.expect("at least one start");
    let report = FitReport { initial_rmsd, rmsd: best.rmsd, iterations, evaluations, deviations: best.deviations() };
    Ok((params, best.profile, report))
}

/// Options for [`seed_segments`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentOptions {
    /// A site starts a new segment when `|κ|` differs from the running
    /// segment mean by more than this, rad.
    pub kappa_tol: f64,
    /// Same for the torsion, compared on the circle, rad.
    pub tau_tol: f64,
    /// `λ` given to every segment.
    pub lambda: f64,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self { kappa_tol: 0.6, tau_tol: 1.2, lambda: 5.0 }
    }
}

/// Splits a profile into runs of similar `(|κ|, τ)` and gives each run
/// starting couplings: `τ[κ] = a + bκ²` from a least-squares line through the
/// run's `(κ², τ)`, and `m` placing the minimum of `V` at the run's mean `κ²`.
pub fn seed_segments(profile: &AngleProfile, opts: &SegmentOptions) -> Result<SegmentedParams, SolitonError> {
    let n = profile.len();
    if n == 0 {
        return Err(SolitonError::InvalidOptions("profile has no bond-angle sites".into()));
    }
    if !(opts.lambda > 0.0) {
        return Err(SolitonError::InvalidOptions(format!("lambda must be positive, got {}", opts.lambda)));
    }
    // Site 0 has no stored torsion; borrow its neighbour's.
    let tau = |i: usize| profile.tau_at(i).or_else(|| profile.tau_at(i + 1)).unwrap_or(0.0);
    // Torsions of a run, unwrapped around its first site.
    let unwrapped = |s: usize, e: usize| -> Vec<f64> {
        let t0 = tau(s);
        (s..e).map(|j| t0 + wrap_angle(tau(j) - t0)).collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut starts = vec![0];
    for i in 1..n {
        let s = *starts.last().unwrap();
        let mk = mean(&profile.kappa[s..i].iter().map(|k| k.abs()).collect::<Vec<_>>());
        let mt = mean(&unwrapped(s, i));
        if (profile.kappa[i].abs() - mk).abs() > opts.kappa_tol || wrap_angle(tau(i) - mt).abs() > opts.tau_tol {
            starts.push(i);
        }
    }
    starts.push(n);
    let segments = starts
        .windows(2)
        .map(|w| {
            let (s, e) = (w[0], w[1]);
            let qs: Vec<f64> = profile.kappa[s..e].iter().map(|k| k * k).collect();
            let ts = unwrapped(s, e);
            let (qm, tm) = (mean(&qs), mean(&ts));
            let sxx: f64 = qs.iter().map(|q| (q - qm).powi(2)).sum();
            let sxy: f64 = qs.iter().zip(&ts).map(|(q, t)| (q - qm) * (t - tm)).sum();
            let b = if sxx > 1e-6 { (sxy / sxx).clamp(-2.0, 2.0) } else { 0.0 };
            let a = tm - b * qm;
            // dV/dκ² = 2λ(κ² - m²) - bτ vanishes at the mean.
            let m2 = (qm - b * tm / (2.0 * opts.lambda)).max(1e-4);
            ParamSegment { start: s, end: e - 1, params: EnergyParams::from_array([opts.lambda, m2.sqrt(), a, b, 1.0, 0.0]) }
        })
        .collect();
    Ok(SegmentedParams::new(segments)?)
}
