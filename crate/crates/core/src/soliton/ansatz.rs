use super::SolitonError;
use nalgebra::{Matrix4, Vector4};
use std::ops::Range;

/// Parameters of the discrete kink
/// `κ(i) = [m1 e^{c1(i-s)} - m2 e^{-c2(i-s)}] / [e^{c1(i-s)} + e^{-c2(i-s)}]`.
///
/// Dividing through by `e^{c1(i-s)}` shows the profile depends on the slopes
/// only through `c1 + c2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolitonAnsatz {
    pub c1: f64,
    pub c2: f64,
    pub m1: f64,
    pub m2: f64,
    pub s: f64,
}

impl SolitonAnsatz {
    pub fn new(c1: f64, c2: f64, m1: f64, m2: f64, s: f64) -> Result<Self, SolitonError> {
        if !(c1 > 0.0 && c2 > 0.0) || ![c1, c2, m1, m2, s].iter().all(|x| x.is_finite()) {
            return Err(SolitonError::InvalidOptions(format!("ansatz slopes must be positive, got c1 = {c1}, c2 = {c2}")));
        }
        Ok(Self { c1, c2, m1, m2, s })
    }

    /// The symmetric kink `m tanh(c (i - s))`.
    pub fn symmetric(c: f64, m: f64, s: f64) -> Self {
        Self { c1: c, c2: c, m1: m, m2: m, s }
    }
}

/// `(w, 1 - w)` for the logistic weight `w = 1/(1 + e^{-u})`, without overflow.
fn logistic_pair(u: f64) -> (f64, f64) {
    if u >= 0.0 {
        let e = (-u).exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    } else {
        let e = u.exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    }
}

/// The kink ansatz at (possibly fractional) site `i`.
pub fn kink_ansatz(i: f64, ansatz: &SolitonAnsatz) -> f64 {
    let (w, wc) = logistic_pair((ansatz.c1 + ansatz.c2) * (i - ansatz.s));
    ansatz.m1 * w - ansatz.m2 * wc
}

/// Continuum kink `m tanh(m √λ (s - s0))`, a solution of
/// `κ'' = 2λ κ (κ² - m²)`.
pub fn continuum_kink(s_val: f64, m: f64, lam: f64, s0: f64) -> f64 {
    m * (m * lam.sqrt() * (s_val - s0)).tanh()
}

/// Least-squares kink through `target_kappa[window]` (site indices are those
/// of the full slice).
///
/// Since the profile fixes only `c1 + c2`, the slopes are returned split
/// evenly. The window must contain a sign change; with several, the one with
/// the largest jump seeds the centre.
pub fn fit_ansatz(target_kappa: &[f64], window: Range<usize>) -> Result<SolitonAnsatz, SolitonError> {
    let window = window.start.min(target_kappa.len())..window.end.min(target_kappa.len());
    let ys = &target_kappa[window.clone()];
    let xs: Vec<f64> = window.clone().map(|i| i as f64).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(SolitonError::FitDiverged("non-finite target".into()));
    }
    let centre = ys
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] * w[1] < 0.0 || (w[0] == 0.0) != (w[1] == 0.0))
        .max_by(|a, b| (a.1[1] - a.1[0]).abs().total_cmp(&(b.1[1] - b.1[0]).abs()))
        .map(|(j, w)| {
            let frac = if w[1] != w[0] { w[0] / (w[0] - w[1]) } else { 0.5 };
            xs[j] + frac
        });
    let Some(s0) = centre else {
        return Err(SolitonError::NoSignChange);
    };
    let n = ys.len();
    let edge = (n / 5).max(1);
    let m1 = ys[n - edge..].iter().sum::<f64>() / edge as f64;
    let m2 = -ys[..edge].iter().sum::<f64>() / edge as f64;
    let amplitude = (m1 + m2).abs().max(1e-3);
    let slope = ys.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let g0 = (4.0 * slope / amplitude).clamp(1e-2, 50.0);

    // Parameters (ln(c1 + c2), m1, m2, s).
    let mut p = Vector4::new(g0.ln(), m1, m2, s0);
    let model = |p: &Vector4<f64>, x: f64| {
        let (w, wc) = logistic_pair(p[0].exp() * (x - p[3]));
        p[1] * w - p[2] * wc
    };
    let cost = |p: &Vector4<f64>| xs.iter().zip(ys).map(|(&x, &y)| (model(p, x) - y).powi(2)).sum::<f64>();
    let mut c = cost(&p);
    let mut mu = 1e-3;
    let mut converged = false;
    for _ in 0..1000 {
        let g = p[0].exp();
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for (&x, &y) in xs.iter().zip(ys) {
            let (w, wc) = logistic_pair(g * (x - p[3]));
            let r = p[1] * w - p[2] * wc - y;
            let dw = w * wc * (p[1] + p[2]);
            let j = Vector4::new(dw * g * (x - p[3]), w, -wc, -dw * g);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut improved = false;
        for _ in 0..60 {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += mu * (jtj[(k, k)] + 1e-12);
            }
            let Some(step) = a.lu().solve(&(-jtr)) else {
                mu *= 10.0;
                continue;
            };
            let trial = p + step;
            let ct = cost(&trial);
            if ct.is_finite() && ct <= c {
                let small = step.iter().zip(p.iter()).all(|(s, v)| s.abs() <= 1e-13 * (1.0 + v.abs()));
                p = trial;
                c = ct;
                mu = (mu * 0.3).max(1e-15);
                improved = true;
                converged = small || c < 1e-28;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged || !p.iter().all(|v| v.is_finite()) {
        return Err(SolitonError::FitDiverged(format!("Levenberg-Marquardt stalled at cost {c}")));
    }
    let half = 0.5 * p[0].exp();
    SolitonAnsatz::new(half, half, p[1], p[2], p[3])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centre_and_limits() {
        let a = SolitonAnsatz::new(0.7, 1.9, 1.5, 0.4, 3.25).unwrap();
        assert_eq!(kink_ansatz(3.25, &a), (1.5 - 0.4) / 2.0);
        assert_eq!(kink_ansatz(1e6, &a), 1.5);
        assert_eq!(kink_ansatz(-1e6, &a), -0.4);
        assert!(kink_ansatz(f64::MAX, &a).is_finite());
    }

    #[test]
    fn symmetric_case_is_tanh() {
        let a = SolitonAnsatz::symmetric(0.8, 1.3, 4.0);
        for i in -10..20 {
            let x = i as f64 * 0.37;
            let t = 1.3 * (0.8 * (x - 4.0)).tanh();
            assert!((kink_ansatz(x, &a) - t).abs() < 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn only_slope_sum_matters() {
        let a = SolitonAnsatz::new(0.3, 1.1, 1.5, 0.4, 7.5).unwrap();
        let b = SolitonAnsatz::new(0.7, 0.7, 1.5, 0.4, 7.5).unwrap();
        for i in 0..16 {
            assert!((kink_ansatz(i as f64, &a) - kink_ansatz(i as f64, &b)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_positive_slopes() {
        assert!(SolitonAnsatz::new(0.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(SolitonAnsatz::new(1.0, -1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn continuum_kink_limits() {
        assert_eq!(continuum_kink(2.0, 1.5, 0.7, 2.0), 0.0);
        assert_eq!(continuum_kink(1e3, 1.5, 0.7, 2.0), 1.5);
        assert_eq!(continuum_kink(-1e3, 1.5, 0.7, 2.0), -1.5);
    }

    #[test]
    fn recovers_noiseless_kink() {
        let truth = SolitonAnsatz::new(0.45, 0.45, 1.52, 1.21, 11.3).unwrap();
        let target: Vec<f64> = (0..30).map(|i| kink_ansatz(i as f64, &truth)).collect();
        let fit = fit_ansatz(&target, 0..30).unwrap();
        for (a, b) in [(fit.c1, truth.c1), (fit.c2, truth.c2), (fit.m1, truth.m1), (fit.m2, truth.m2), (fit.s, truth.s)] {
            assert!((a - b).abs() < 1e-6, "{fit:?}");
        }
    }

    #[test]
    fn recovers_descending_kink() {
        let truth = SolitonAnsatz::new(0.6, 0.6, -1.0, -1.4, 9.7).unwrap();
        let target: Vec<f64> = (0..25).map(|i| kink_ansatz(i as f64, &truth)).collect();
        let fit = fit_ansatz(&target, 0..25).unwrap();
        assert!((fit.m1 - truth.m1).abs() < 1e-6 && (fit.m2 - truth.m2).abs() < 1e-6, "{fit:?}");
        assert!((fit.s - truth.s).abs() < 1e-6);
    }

    #[test]
    fn constant_sign_window() {
        assert_eq!(fit_ansatz(&[0.5, 1.0, 1.2, 1.3], 0..4), Err(SolitonError::NoSignChange));
        assert_eq!(fit_ansatz(&[-1.0, 1.0, 1.2, 1.3], 1..4), Err(SolitonError::NoSignChange));
    }
}
