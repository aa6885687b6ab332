//! Scalar statistics shared by the estimators: moments, line fits, KS tests.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n−1 denominator); 0 when fewer than two points.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Sample standard deviation.
pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Mean together with the standard error of the mean (sd/√n, 0 when n < 2).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let n = xs.len();
    if n < 2 {
        return (m, 0.0);
    }
    (m, (sample_variance(xs) / n as f64).sqrt())
}

/// Straight-line fit y ≈ intercept + slope·x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_stderr: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

fn line_solve(x: &[f64], y: &[f64], w: &[f64]) -> Result<(f64, f64, f64, f64, f64)> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::Size(format!(
            "line fit needs equal-length inputs, got {}/{}/{}",
            x.len(),
            y.len(),
            w.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Size(format!(
            "line fit needs at least 2 points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).chain(w).any(|v| !v.is_finite()) || w.iter().any(|&v| v < 0.0) {
        return Err(Error::Numerical(
            "line fit inputs must be finite with nonnegative weights".into(),
        ));
    }
    let sw: f64 = w.iter().sum();
    let swx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let swy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let swxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let swxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();
    let det = sw * swxx - swx * swx;
    if !(det.is_finite() && sw > 0.0) || det <= f64::EPSILON * sw * swxx.abs() {
        return Err(Error::Singular(
            "degenerate regressor in line fit (zero weighted variance)".into(),
        ));
    }
    let slope = (sw * swxy - swx * swy) / det;
    let intercept = (swy - slope * swx) / sw;
    Ok((intercept, slope, sw, swxx, det))
}

fn r_squared(x: &[f64], y: &[f64], w: &[f64], intercept: f64, slope: f64) -> f64 {
    let sw: f64 = w.iter().sum();
    let ybar = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let mut ssr = 0.0;
    let mut sst = 0.0;
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        let r = yi - intercept - slope * xi;
        ssr += wi * r * r;
        sst += wi * (yi - ybar) * (yi - ybar);
    }
    if sst > 0.0 {
        1.0 - ssr / sst
    } else {
        // constant response fitted exactly by a horizontal line
        1.0
    }
}

/// Ordinary least squares with the classic residual-variance standard errors.
pub fn ols_line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let w = vec![1.0; x.len()];
    let (intercept, slope, sw, swxx, det) = line_solve(x, y, &w)?;
    let n = x.len() as f64;
    let dof = (n - 2.0).max(1.0);
    let s2 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - intercept - slope * xi;
            r * r
        })
        .sum::<f64>()
        / dof;
    Ok(LineFit {
        intercept,
        slope,
        intercept_stderr: (s2 * swxx / det).sqrt(),
        slope_stderr: (s2 * sw / det).sqrt(),
        r_squared: r_squared(x, y, &w, intercept, slope),
    })
}

/// Ordinary least squares with heteroskedasticity-consistent (sandwich)
/// standard errors. Squared-increment regressions have residual variance that
/// grows with the regressor, and the classic formulas understate the
/// uncertainty there by an order of magnitude; the sandwich form keeps 3·SE
/// intervals honest.
pub fn ols_line_fit_robust(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let w = vec![1.0; x.len()];
    let (intercept, slope, _sw, swxx, det) = line_solve(x, y, &w)?;
    let (mut m11, mut m12, mut m22) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - intercept - slope * xi;
        let r2 = r * r;
        m11 += r2;
        m12 += xi * r2;
        m22 += xi * xi * r2;
    }
    let sx: f64 = x.iter().sum();
    // V = (X'X)⁻¹ X' diag(r²) X (X'X)⁻¹ with X = [1 x]
    let var_a = (swxx * swxx * m11 - 2.0 * swxx * sx * m12 + sx * sx * m22) / (det * det);
    let var_b = (sx * sx * m11 - 2.0 * (x.len() as f64) * sx * m12
        + (x.len() as f64) * (x.len() as f64) * m22)
        / (det * det);
    Ok(LineFit {
        intercept,
        slope,
        intercept_stderr: var_a.max(0.0).sqrt(),
        slope_stderr: var_b.max(0.0).sqrt(),
        r_squared: r_squared(x, y, &w, intercept, slope),
    })
}

/// Weighted least squares with weights interpreted as inverse variances
/// (w_i = 1/σ_i²), so parameter covariance comes straight from the normal
/// equations without a residual-variance rescale.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    let (intercept, slope, sw, swxx, det) = line_solve(x, y, w)?;
    Ok(LineFit {
        intercept,
        slope,
        intercept_stderr: (swxx / det).sqrt(),
        slope_stderr: (sw / det).sqrt(),
        r_squared: r_squared(x, y, w, intercept, slope),
    })
}

fn validate_sample(tag: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Size(format!("{tag}: empty sample")));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("{tag}: non-finite sample value")));
    }
    Ok(())
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov-Smirnov statistic sup|F̂_a − F̂_b|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    validate_sample("ks_two_sample a", a)?;
    validate_sample("ks_two_sample b", b)?;
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        // advance through the whole tie group on both sides before comparing
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

fn ks_scale(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            constraint: "0 < alpha < 1",
        });
    }
    Ok((-(alpha / 2.0).ln() / 2.0).sqrt())
}

/// Asymptotic two-sample KS critical value c(α)·√((n+m)/(n·m)).
pub fn ks_two_sample_critical(alpha: f64, n: usize, m: usize) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::Size("KS critical value needs nonempty samples".into()));
    }
    let (nf, mf) = (n as f64, m as f64);
    Ok(ks_scale(alpha)? * ((nf + mf) / (nf * mf)).sqrt())
}

/// One-sample KS statistic of `xs` against a normal CDF with the given
/// mean and standard deviation.
pub fn ks_one_sample_normal(xs: &[f64], mu: f64, sd: f64) -> Result<f64> {
    validate_sample("ks_one_sample_normal", xs)?;
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sd",
            value: sd,
            constraint: "sd > 0",
        });
    }
    let normal = statrs::distribution::Normal::new(mu, sd)
        .map_err(|e| Error::Numerical(format!("normal reference: {e}")))?;
    let xs = sorted(xs);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = normal.cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Asymptotic one-sample KS critical value c(α)/√n.
pub fn ks_one_sample_critical(alpha: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Size("KS critical value needs a nonempty sample".into()));
    }
    Ok(ks_scale(alpha)? / (n as f64).sqrt())
}
