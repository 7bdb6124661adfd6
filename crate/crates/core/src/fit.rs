//! Weighted nonlinear least-squares fit of the HOM coincidence curve
//! C(τ) = B·(1 ∓ V·exp(−(τ−τ0)²/τc²)) (− dip, + peak), via
//! Levenberg–Marquardt with an analytic Jacobian.
//!
//! When counts are present they are fitted with Poisson weights
//! w = 1/max(count, 1) and the covariance is (JᵀWJ)⁻¹; on noiseless
//! rate data unit weights are used and the covariance is scaled by the
//! residual variance.

use alloc::vec::Vec;

use nalgebra::{SMatrix, SVector};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::hom::HomScan;

type Mat4 = SMatrix<f64, 4, 4>;
type Par4 = SVector<f64, 4>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least 7 delay points, got {0}")]
    TooFewPoints(usize),
    #[error("no convergence after {iterations} iterations; gradient norm {gradient_norm}, cost {cost}")]
    NonConvergence { iterations: usize, gradient_norm: f64, cost: f64 },
    #[error("normal equations are singular at iteration {0}")]
    SingularNormalEquations(usize),
}

/// Dip (coincidence minimum at τ0) or peak (maximum).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DipShape {
    Dip,
    Peak,
}

impl DipShape {
    /// Sign in front of V·exp(...): −1 for a dip, +1 for a peak.
    fn sign(self) -> f64 {
        match self {
            DipShape::Dip => -1.0,
            DipShape::Peak => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DipShape::Dip => "dip",
            DipShape::Peak => "peak",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub shape: DipShape,
    pub visibility: f64,
    /// 1/e half-width of the Gaussian feature (ps).
    pub tau_c_ps: f64,
    /// Coherence length c·τc (mm).
    pub length_c_mm: f64,
    pub baseline: f64,
    pub center_ps: f64,
    /// Standard errors of (baseline, visibility, center, tau_c).
    pub std_errors: [f64; 4],
    pub covariance: [[f64; 4]; 4],
    /// Set when the fitted visibility is outside [−0.05, 1.05] or the
    /// feature is too shallow to determine the shape.
    pub flagged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub cost: f64,
}

fn model(p: &Par4, sign: f64, tau: f64) -> f64 {
    let g = (-((tau - p[2]) / p[3]).powi(2)).exp();
    p[0] * (1.0 + sign * p[1] * g)
}

fn jacobian_row(p: &Par4, sign: f64, tau: f64) -> [f64; 4] {
    let u = (tau - p[2]) / p[3];
    let g = (-u * u).exp();
    [
        1.0 + sign * p[1] * g,
        sign * p[0] * g,
        sign * p[0] * p[1] * g * 2.0 * u / p[3],
        sign * p[0] * p[1] * g * 2.0 * u * u / p[3],
    ]
}

/// Fits the scan (counts when present, else rates) to the dip/peak model.
pub fn fit_scan(scan: &HomScan, shape: DipShape) -> Result<FitResult, FitError> {
    let taus = &scan.delays_ps;
    let n = taus.len();
    if n < 7 {
        return Err(FitError::TooFewPoints(n));
    }
    let (y, weights, poisson): (Vec<f64>, Vec<f64>, bool) = match &scan.counts {
        Some(counts) => (
            counts.iter().map(|&c| c as f64).collect(),
            counts.iter().map(|&c| 1.0 / (c as f64).max(1.0)).collect(),
            true,
        ),
        None => (scan.rates.clone(), alloc::vec![1.0; n], false),
    };
    let sign = shape.sign();

    // Deterministic derivative-free initialization.
    let n_outer = (n / 5).max(2);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| taus[i].partial_cmp(&taus[j]).expect("finite delays"));
    let mut baseline = 0.0;
    for k in 0..n_outer {
        baseline += y[order[k]] + y[order[n - 1 - k]];
    }
    baseline /= (2 * n_outer) as f64;
    let (i_ext, _) = y
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |acc, (i, &v)| {
            let score = sign * (v - baseline);
            if score > acc.1 {
                (i, score)
            } else {
                acc
            }
        });
    let depth = (y[i_ext] - baseline).abs();
    let tau0 = taus[i_ext];
    let v0 = if baseline.abs() > 0.0 { depth / baseline.abs() } else { 0.5 };
    // Half-depth crossing distance d gives τc = d/√(ln 2).
    let mut d_half = (taus[order[n - 1]] - taus[order[0]]).abs() / 4.0;
    for &i in &order {
        if (y[i] - baseline).abs() < 0.5 * depth && (taus[i] - tau0).abs() > 0.0 {
            let d = (taus[i] - tau0).abs();
            if d < d_half {
                d_half = d;
            }
        }
    }
    let tauc0 = (d_half / 2.0_f64.ln().sqrt()).max(1e-6);
    let mut p = Par4::from([baseline.max(1e-12), v0.clamp(1e-4, 1.5), tau0, tauc0]);

    // Levenberg–Marquardt.
    let cost_of = |p: &Par4| -> f64 {
        (0..n).map(|i| {
            let r = model(p, sign, taus[i]) - y[i];
            weights[i] * r * r
        }).sum()
    };
    let mut cost = cost_of(&p);
    let mut lambda = 1e-3;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    let max_iter = 500;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut jtj = Mat4::zeros();
        let mut jtr = Par4::zeros();
        for i in 0..n {
            let jr = jacobian_row(&p, sign, taus[i]);
            let r = model(&p, sign, taus[i]) - y[i];
            for a in 0..4 {
                jtr[a] += weights[i] * jr[a] * r;
                for b in 0..4 {
                    jtj[(a, b)] += weights[i] * jr[a] * jr[b];
                }
            }
        }
        grad_norm = jtr.norm();
        let scale = cost.max(1.0);
        if grad_norm < 1e-10 * scale.sqrt().max(1.0) {
            converged = true;
            break;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for a in 0..4 {
                damped[(a, a)] += lambda * jtj[(a, a)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                return Err(FitError::SingularNormalEquations(iterations));
            };
            let trial = p + step;
            let trial_cost = if trial[3] <= 0.0 || trial[0] <= 0.0 {
                f64::INFINITY
            } else {
                cost_of(&trial)
            };
            if trial_cost < cost {
                let rel = (cost - trial_cost) / cost.max(1e-300);
                p = trial;
                cost = trial_cost;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-14 || step.norm() < 1e-14 * p.norm().max(1.0) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
        if converged {
            break;
        }
        if !improved {
            // Stuck with the damping at its ceiling: accept if the
            // gradient is tiny relative to the curvature and residual
            // scale of the problem (the absolute norm depends on the
            // weighting and count magnitudes).
            let g_scale = (jtj.trace() * cost).sqrt();
            converged = grad_norm <= 1e-6 * g_scale.max(1e-300)
                || grad_norm < 1e-8 * scale.sqrt().max(1.0);
            break;
        }
    }
    if !converged {
        return Err(FitError::NonConvergence { iterations, gradient_norm: grad_norm, cost });
    }

    // Covariance from the (weighted) normal equations at the solution.
    let mut jtj = Mat4::zeros();
    for i in 0..n {
        let jr = jacobian_row(&p, sign, taus[i]);
        for a in 0..4 {
            for b in 0..4 {
                jtj[(a, b)] += weights[i] * jr[a] * jr[b];
            }
        }
    }
    let dof = (n.saturating_sub(4)).max(1) as f64;
    let scale = if poisson { 1.0 } else { cost / dof };
    let cov = jtj.try_inverse().map(|m| m * scale).unwrap_or_else(Mat4::zeros);
    let mut covariance = [[0.0; 4]; 4];
    let mut std_errors = [0.0; 4];
    for a in 0..4 {
        for b in 0..4 {
            covariance[a][b] = cov[(a, b)];
        }
        std_errors[a] = cov[(a, a)].max(0.0).sqrt();
    }
    let visibility = p[1];
    let tau_c = p[3].abs();
    let flagged = !( -0.05..=1.05).contains(&visibility) || visibility.abs() < 0.02;
    Ok(FitResult {
        shape,
        visibility,
        tau_c_ps: tau_c,
        length_c_mm: crate::C_MM_PER_PS * tau_c,
        baseline: p[0],
        center_ps: p[2],
        std_errors,
        covariance,
        flagged,
        iterations,
        gradient_norm: grad_norm,
        cost,
    })
}
