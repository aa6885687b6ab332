//! Conditional-heteroskedasticity model fitting on increment series, plus the
//! closed-form unconditional mean-square fluctuation of each model.
//!
//! The ARCH(1) fit is the least-squares regression of each squared increment
//! on the previous one; its intercept and slope are the model parameters, so
//! the fit is closed-form. The GARCH(1,1) fit maximizes the Gaussian
//! quasi-likelihood of the increments under the variance recursion with a
//! deterministic multi-start simplex search. Gaussian innovations are assumed
//! by the quasi-likelihood regardless of how the data were produced; that is
//! the usual QML caveat and it is deliberate.

use crate::error::{Error, Result};
use crate::generators::{ArchParams, GarchParams};
use crate::optim::{nelder_mead, SimplexResult};
use crate::series::IncrementSeries;
use crate::stats::ols_line_fit_robust;
use serde::{Deserialize, Serialize};

/// Minimum number of non-overlapping increments for the ARCH(1) regression.
pub const MIN_ARCH_SAMPLES: usize = 50;
/// Minimum number of non-overlapping increments for the GARCH(1,1) QML fit.
pub const MIN_GARCH_SAMPLES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family", content = "params")]
pub enum FittedModel {
    Arch1(ArchParams),
    Garch11(GarchParams),
}

/// Outcome of a fit: parameters, per-parameter standard errors (same order as
/// the constructor arguments), the final objective value, and whether the
/// optimizer met its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FittedModel,
    pub stderrs: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Budget and tolerance for the simplex search, per start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub f_tol: f64,
    /// Number of deterministic starting points (capped at the built-in
    /// start table, currently 5).
    pub starts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { max_iters: 2000, f_tol: 1e-8, starts: 5 }
    }
}

fn require_nonoverlapping(incs: &IncrementSeries, what: &str, min: usize) -> Result<()> {
    if incs.overlapping() {
        return Err(Error::Usage(format!(
            "{what} requires non-overlapping increments"
        )));
    }
    if incs.len() < min {
        return Err(Error::Size(format!(
            "{what} needs at least {min} increments, got {}",
            incs.len()
        )));
    }
    Ok(())
}

/// Regression pairs (z²(t−T), z²(t)) from consecutive increments exactly one
/// lag apart; entries separated by a gap contribute no pair.
fn squared_pairs(incs: &IncrementSeries) -> (Vec<f64>, Vec<f64>) {
    let lag = incs.lag_steps();
    let idx = incs.start_indices();
    let z = incs.values();
    let mut x = Vec::with_capacity(z.len().saturating_sub(1));
    let mut y = Vec::with_capacity(z.len().saturating_sub(1));
    for k in 1..z.len() {
        if idx[k] - idx[k - 1] == lag {
            x.push(z[k - 1] * z[k - 1]);
            y.push(z[k] * z[k]);
        }
    }
    (x, y)
}

/// Least-squares fit of z²(t) = α + ω·z²(t−T): intercept α̂, slope ω̂.
///
/// Standard errors are heteroskedasticity-consistent (sandwich form). The
/// residual spread of squared increments scales with the local variance
/// level, and the classic homoskedastic formulas understate slope errors
/// several-fold here, which would wreck the 3·SE coverage this estimator is
/// required to deliver.
pub fn fit_arch1(incs: &IncrementSeries) -> Result<FitResult> {
    require_nonoverlapping(incs, "fit_arch1", MIN_ARCH_SAMPLES)?;
    let (x, y) = squared_pairs(incs);
    if x.len() < MIN_ARCH_SAMPLES - 1 {
        return Err(Error::Size(format!(
            "fit_arch1 needs at least {} consecutive regression pairs, got {}",
            MIN_ARCH_SAMPLES - 1,
            x.len()
        )));
    }
    let fit = ols_line_fit_robust(&x, &y)?;
    let params = ArchParams::new(fit.intercept, fit.slope).map_err(|_| {
        Error::Numerical(format!(
            "least-squares estimates outside the admissible region: \
             alpha={}, omega={}",
            fit.intercept, fit.slope
        ))
    })?;
    let ssr: f64 = x
        .iter()
        .zip(&y)
        .map(|(&xi, &yi)| {
            let r = yi - fit.intercept - fit.slope * xi;
            r * r
        })
        .sum();
    Ok(FitResult {
        model: FittedModel::Arch1(params),
        stderrs: vec![fit.intercept_stderr, fit.slope_stderr],
        loss: ssr,
        iterations: 0,
        converged: true,
    })
}

/// Twice the Gaussian negative log-likelihood (up to an additive constant):
/// Σ_k [ln v_k + z_k²/v_k] with v_0 = mean(z²) and
/// v_k = α + ω·z_{k−1}² + ζ·v_{k−1}. Defined for any α>0, ω≥0, ζ≥0.
fn garch_nll(z: &[f64], alpha: f64, omega: f64, zeta: f64) -> f64 {
    let mean_sq = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
    let mut v = mean_sq;
    let mut acc = 0.0;
    for k in 0..z.len() {
        if !(v > 0.0) {
            return f64::INFINITY;
        }
        let z2 = z[k] * z[k];
        acc += v.ln() + z2 / v;
        v = alpha + omega * z2 + zeta * v;
    }
    acc
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Unconstrained coordinates: θ = (ln α, logit(ω+ζ), logit(ω/(ω+ζ))).
/// Sigmoid outputs are clamped a hair inside the open box so the
/// back-transform always lands on valid parameters.
fn garch_from_unconstrained(theta: &[f64]) -> (f64, f64, f64) {
    const EPS: f64 = 1e-12;
    let alpha = theta[0].exp().max(f64::MIN_POSITIVE);
    let s = sigmoid(theta[1]).clamp(EPS, 1.0 - EPS);
    let u = sigmoid(theta[2]).clamp(EPS, 1.0 - EPS);
    (alpha, s * u, s * (1.0 - u))
}

/// Deterministic start table in (persistence s = ω+ζ, share u = ω/s) space,
/// spanning low and high persistence and ARCH-heavy and GARCH-heavy mixes.
const GARCH_STARTS: [(f64, f64); 5] =
    [(0.5, 0.5), (0.9, 0.22), (0.8, 0.5), (0.3, 0.33), (0.95, 0.1)];

/// Central-difference Hessian of ½·nll at the fitted parameters, inverted by
/// cofactors; returns per-parameter standard errors, or None when the
/// curvature is not positive definite.
fn garch_stderrs(z: &[f64], p: [f64; 3]) -> Option<[f64; 3]> {
    let half = |q: [f64; 3]| 0.5 * garch_nll(z, q[0], q[1], q[2]);
    let h: Vec<f64> = p.iter().map(|&v| (1e-4 * v.abs()).max(1e-6)).collect();
    let mut hess = [[0.0f64; 3]; 3];
    let f0 = half(p);
    for i in 0..3 {
        for j in i..3 {
            let v = if i == j {
                let mut up = p;
                up[i] += h[i];
                let mut dn = p;
                dn[i] -= h[i];
                (half(up) - 2.0 * f0 + half(dn)) / (h[i] * h[i])
            } else {
                let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
                let mut acc = 0.0;
                for &(si, sj) in &signs {
                    let mut q = p;
                    q[i] += si * h[i];
                    q[j] += sj * h[j];
                    acc += si * sj * half(q);
                }
                acc / (4.0 * h[i] * h[j])
            };
            if !v.is_finite() {
                return None;
            }
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    let m = &hess;
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if !(det.abs() > 0.0 && det.is_finite()) {
        return None;
    }
    let cof = |r1: usize, c1: usize, r2: usize, c2: usize| {
        m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
    };
    let inv_diag = [
        cof(1, 1, 2, 2) / det,
        cof(0, 0, 2, 2) / det,
        cof(0, 0, 1, 1) / det,
    ];
    if inv_diag.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    Some([inv_diag[0].sqrt(), inv_diag[1].sqrt(), inv_diag[2].sqrt()])
}

/// Gaussian quasi-maximum-likelihood fit of the GARCH(1,1) recursion.
///
/// The objective is minimized over an unconstrained reparameterization of
/// (α, ω, ζ) from a fixed table of starting points; the reported result is
/// the best final objective, ties broken by the lowest start index, so the
/// fit is bit-reproducible. `converged` is false when the winning start
/// exhausted its iteration budget with the simplex spread still above
/// tolerance, or when the curvature at the optimum cannot certify standard
/// errors (stderrs are zero in that case).
pub fn fit_garch11(incs: &IncrementSeries, config: &OptimizerConfig) -> Result<FitResult> {
    require_nonoverlapping(incs, "fit_garch11", MIN_GARCH_SAMPLES)?;
    if config.starts == 0 {
        return Err(Error::InvalidParameter {
            name: "starts",
            value: 0.0,
            constraint: "at least one start",
        });
    }
    if !(config.f_tol > 0.0 && config.f_tol.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "f_tol",
            value: config.f_tol,
            constraint: "f_tol > 0",
        });
    }
    let z = incs.values();
    let mean_sq = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
    if !(mean_sq > 0.0 && mean_sq.is_finite()) {
        return Err(Error::Numerical(format!(
            "mean squared increment must be positive and finite, got {mean_sq}"
        )));
    }
    let objective = |theta: &[f64]| {
        let (a, w, zt) = garch_from_unconstrained(theta);
        garch_nll(z, a, w, zt)
    };

    let n_starts = config.starts.min(GARCH_STARTS.len());
    let mut best: Option<(SimplexResult, usize)> = None;
    let mut total_iterations = 0;
    for (k, &(s, u)) in GARCH_STARTS.iter().take(n_starts).enumerate() {
        let alpha0 = mean_sq * (1.0 - s);
        let theta0 = [alpha0.ln(), logit(s), logit(u)];
        let r = nelder_mead(&objective, &theta0, 0.5, config.f_tol, config.max_iters);
        total_iterations += r.iterations;
        if r.f.is_finite() && best.as_ref().map_or(true, |(b, _)| r.f < b.f) {
            best = Some((r, k));
        }
    }
    let (winner, _) = best.ok_or_else(|| {
        let fallback = garch_from_unconstrained(&[
            (mean_sq * 0.5).ln(),
            logit(0.5),
            logit(0.5),
        ]);
        Error::Optimization {
            message: "no start produced a finite quasi-likelihood".into(),
            best: vec![fallback.0, fallback.1, fallback.2],
            best_loss: f64::INFINITY,
        }
    })?;

    let (alpha, omega, zeta) = garch_from_unconstrained(&winner.x);
    let params = GarchParams::new(alpha, omega, zeta).map_err(|e| {
        Error::Numerical(format!("back-transformed parameters invalid: {e}"))
    })?;
    let (stderrs, curvature_ok) = match garch_stderrs(z, [alpha, omega, zeta]) {
        Some(se) => (se.to_vec(), true),
        None => (vec![0.0, 0.0, 0.0], false),
    };
    Ok(FitResult {
        model: FittedModel::Garch11(params),
        stderrs,
        loss: winner.f,
        iterations: total_iterations,
        converged: winner.converged && curvature_ok,
    })
}

/// Fixed point α/(1−ω) of the ARCH(1) second-moment recursion. The parameter
/// type already confines ω to (−1, 1), so the value is always positive and
/// finite.
pub fn unconditional_msf_arch1(params: ArchParams) -> f64 {
    params.alpha() / (1.0 - params.omega())
}

/// Fixed point α/(1−ω−ζ) of the GARCH(1,1) second-moment recursion; ω+ζ < 1
/// is guaranteed by the parameter type.
pub fn unconditional_msf_garch11(params: GarchParams) -> f64 {
    params.alpha() / (1.0 - params.omega() - params.zeta())
}
