use super::SolitonError;
use crate::energy::{effective_potential, potential_slope, torsion_of_kappa, Couplings, EnergyError};

/// Bond angles larger than this abort a relaxation.
const DIVERGENCE_BOUND: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    pub epsilon: f64,
    pub max_iters: usize,
    /// Max-norm residual at which the iteration stops.
    pub tol: f64,
    /// Keep the energy of every iterate in the report.
    pub record_energy: bool,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { epsilon: 0.01, max_iters: 1_000_000, tol: 1e-8, record_energy: true }
    }
}

impl RelaxOptions {
    fn check(&self) -> Result<(), SolitonError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(SolitonError::InvalidOptions(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.tol > 0.0) {
            return Err(SolitonError::InvalidOptions(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelaxationReport {
    pub iterations: usize,
    /// Max-norm of the residual at the returned profile.
    pub final_residual: f64,
    /// Energy of the initial profile followed by one entry per iteration
    /// (empty unless requested).
    pub energy_series: Vec<f64>,
    pub converged: bool,
}

/// Residual `r_i` and soliton energy in one pass. Returns `(energy, max |r|)`.
fn evaluate(kappa: &[f64], params: &impl Couplings, r: &mut [f64]) -> Result<(f64, f64), EnergyError> {
    let n = kappa.len();
    let mut energy = 0.0;
    let mut max_r: f64 = 0.0;
    let mut left = 0.0;
    for i in 0..n {
        let k = kappa[i];
        let right = if i + 1 < n { kappa[i + 1] } else { 0.0 };
        let p = params.at(i);
        let slope = potential_slope(k, p)?;
        r[i] = right - 2.0 * k + left - slope * k;
        max_r = max_r.max(r[i].abs());
        energy += (k - left).powi(2) + effective_potential(k, p)?;
        left = k;
    }
    energy += left * left;
    Ok((energy, max_r))
}

/// Per-site residual of the stationarity condition
/// `r_i = κ_{i+1} - 2κ_i + κ_{i-1} - (dV/dκ²)_i κ_i` with zero virtual ends.
///
/// It equals minus one half of the gradient of
/// [`soliton_energy`](crate::energy::soliton_energy).
pub fn dnls_residual(kappa: &[f64], params: &impl Couplings) -> Result<Vec<f64>, EnergyError> {
    let mut r = vec![0.0; kappa.len()];
    evaluate(kappa, params, &mut r)?;
    Ok(r)
}

fn energy_tolerance(h: f64) -> f64 {
    1e-12 * h.abs().max(1.0)
}

fn check_bounds(kappa: &[f64], iteration: usize) -> Result<(), SolitonError> {
    if let Some(k) = kappa.iter().find(|k| !(k.abs() <= DIVERGENCE_BOUND)) {
        return Err(SolitonError::Diverged { iteration, reason: format!("|κ| reached {k}") });
    }
    Ok(())
}

/// Fixed-point iteration `κ_i ← κ_i + ε r_i`, i.e. gradient descent on the
/// soliton energy. Stops when `max |r| < tol` or after `max_iters` steps.
///
/// An energy increase (beyond rounding) or `|κ| > 10³` aborts with
/// [`SolitonError::Diverged`]; a smaller `ε` fixes the former.
pub fn relax(
    initial_kappa: &[f64],
    params: &impl Couplings,
    opts: &RelaxOptions,
) -> Result<(Vec<f64>, RelaxationReport), SolitonError> {
    opts.check()?;
    check_bounds(initial_kappa, 0)?;
    let mut kappa = initial_kappa.to_vec();
    let mut r = vec![0.0; kappa.len()];
    let (mut energy, mut max_r) = evaluate(&kappa, params, &mut r)?;
    let mut report = RelaxationReport::default();
    if opts.record_energy {
        report.energy_series.push(energy);
    }
    while max_r >= opts.tol && report.iterations < opts.max_iters {
        for (k, ri) in kappa.iter_mut().zip(&r) {
            *k += opts.epsilon * ri;
        }
        report.iterations += 1;
        check_bounds(&kappa, report.iterations)?;
        let (e, m) = evaluate(&kappa, params, &mut r)?;
        if e > energy + energy_tolerance(energy) {
            return Err(SolitonError::Diverged {
                iteration: report.iterations,
                reason: format!("energy rose from {energy} to {e}; reduce epsilon"),
            });
        }
        energy = e;
        max_r = m;
        if opts.record_energy {
            report.energy_series.push(energy);
        }
    }
    report.final_residual = max_r;
    report.converged = max_r < opts.tol;
    Ok((kappa, report))
}

/// Second derivative of `V[κ]` in `κ`.
fn potential_curvature(kappa: f64, params: &crate::energy::EnergyParams) -> Result<f64, EnergyError> {
    let q = kappa * kappa;
    let s = potential_slope(kappa, params)?;
    let tau = torsion_of_kappa(kappa, params)?;
    let denom = params.c + params.d * q;
    let dtau_dq = (params.b * params.c - params.a * params.d) / (denom * denom);
    let s_prime = 2.0 * params.lambda + (params.d * tau - params.b) * dtau_dq;
    Ok(2.0 * s + 4.0 * q * s_prime)
}

/// Solves `H x = g` for the tridiagonal soliton-energy Hessian (off-diagonal
/// `-2`). `None` unless the Hessian is positive definite.
fn solve_tridiagonal_pd(diag: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut l = vec![0.0; n];
    for i in 0..n {
        if i == 0 {
            d[0] = diag[0];
            y[0] = rhs[0];
        } else {
            l[i] = -2.0 / d[i - 1];
            d[i] = diag[i] + 2.0 * l[i];
            y[i] = rhs[i] - l[i] * y[i - 1];
        }
        if !(d[i] > 0.0) {
            return None;
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = y[i] / d[i];
        if i + 1 < n {
            x[i] -= l[i + 1] * x[i + 1];
        }
    }
    Some(x)
}

/// Same fixed points as [`relax`], reached faster: Newton steps on the
/// soliton energy, with the Hessian diagonal shifted where it is indefinite
/// and an energy line search. A step the line search rejects falls back to
/// one fixed-point iteration, so every step lowers the energy.
pub fn relax_newton(
    initial_kappa: &[f64],
    params: &impl Couplings,
    opts: &RelaxOptions,
) -> Result<(Vec<f64>, RelaxationReport), SolitonError> {
    opts.check()?;
    check_bounds(initial_kappa, 0)?;
    let n = initial_kappa.len();
    let mut kappa = initial_kappa.to_vec();
    let mut r = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let (mut energy, mut max_r) = evaluate(&kappa, params, &mut r)?;
    let mut report = RelaxationReport::default();
    if opts.record_energy {
        report.energy_series.push(energy);
    }
    while max_r >= opts.tol && report.iterations < opts.max_iters {
        for i in 0..n {
            diag[i] = 4.0 + potential_curvature(kappa[i], params.at(i))?;
        }
        // The energy gradient is -2r, so the Newton step solves H s = 2r.
        let rhs: Vec<f64> = r.iter().map(|x| 2.0 * x).collect();
        let mut stepped = false;
        // Shift the diagonal until the Hessian is positive definite, so the
        // step is always a descent direction.
        let mut shift = 0.0;
        let mut newton = None;
        while shift < 1e8 {
            let shifted: Vec<f64> = diag.iter().map(|d| d + shift).collect();
            newton = solve_tridiagonal_pd(&shifted, &rhs);
            if newton.is_some() {
                break;
            }
            shift = if shift == 0.0 { 1e-3 } else { shift * 4.0 };
        }
        if let Some(step) = newton {
            let slope: f64 = -step.iter().zip(&rhs).map(|(s, g)| s * g).sum::<f64>();
            let mut t = 1.0;
            for _ in 0..40 {
                for i in 0..n {
                    trial[i] = kappa[i] + t * step[i];
                }
                if let Ok((e, m)) = evaluate(&trial, params, &mut r_trial) {
                    if e <= energy + 1e-4 * t * slope || (e <= energy + energy_tolerance(energy) && m < max_r) {
                        std::mem::swap(&mut kappa, &mut trial);
                        std::mem::swap(&mut r, &mut r_trial);
                        energy = e.min(energy);
                        max_r = m;
                        stepped = true;
                        break;
                    }
                }
                t *= 0.5;
            }
        }
        if !stepped {
            for (k, ri) in kappa.iter_mut().zip(&r) {
                *k += opts.epsilon * ri;
            }
            let (e, m) = evaluate(&kappa, params, &mut r)?;
            if e > energy + energy_tolerance(energy) {
                return Err(SolitonError::Diverged {
                    iteration: report.iterations + 1,
                    reason: format!("energy rose from {energy} to {e}; reduce epsilon"),
                });
            }
            energy = e;
            max_r = m;
        }
        report.iterations += 1;
        check_bounds(&kappa, report.iterations)?;
        if opts.record_energy {
            report.energy_series.push(energy);
        }
    }
    report.final_residual = max_r;
    report.converged = max_r < opts.tol;
    Ok((kappa, report))
}
