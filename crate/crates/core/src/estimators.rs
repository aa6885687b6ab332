//! Ensemble statistics: moments of increments, their autocorrelation by two
//! algebraically equivalent routes, distribution stationarity, conditional
//! mean-square fluctuation tables, and the variance-linearity test.
//!
//! Every estimate is a cross-member mean with a standard error computed from
//! the cross-member sample standard deviation. Members are treated as
//! independent realizations; for ensembles built by splitting one long series
//! that independence is an assumption, recorded by report metadata downstream.

use crate::error::{Error, Result};
use crate::exec;
use crate::series::Ensemble;
use crate::stats::{
    ks_two_sample, ks_two_sample_critical, mean_and_stderr, ols_line_fit, sample_sd,
    weighted_line_fit, LineFit,
};
use serde::{Deserialize, Serialize};

/// Default bin count for histograms and conditional tables.
pub const DEFAULT_BIN_COUNT: usize = 32;
/// Default histogram span in sample standard deviations around the mean.
pub const DEFAULT_BIN_SPAN_SDS: f64 = 4.0;
/// Minimum cross-member sample size per probe for a stationarity verdict.
pub const DEFAULT_MIN_STATIONARITY_SAMPLES: usize = 200;
/// Minimum per-bin occupancy for a reported conditional MSF value.
pub const DEFAULT_MIN_BIN_COUNT: usize = 50;
/// Default ceiling on the max relative residual of a linear variance curve.
pub const DEFAULT_LINEARITY_TOLERANCE: f64 = 0.05;

/// Histogram layout: either a fixed count of equal-width bins spanning
/// mean ± span_sds·sd of the sample, or explicit edges. Samples outside the
/// span are clamped into the edge bins so masses always sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub enum BinSpec {
    Auto { count: usize, span_sds: f64 },
    Edges(Vec<f64>),
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::Auto { count: DEFAULT_BIN_COUNT, span_sds: DEFAULT_BIN_SPAN_SDS }
    }
}

impl BinSpec {
    fn edges_for(&self, sample: &[f64]) -> Result<Vec<f64>> {
        match self {
            BinSpec::Auto { count, span_sds } => {
                if *count == 0 {
                    return Err(Error::InvalidParameter {
                        name: "bin_count",
                        value: 0.0,
                        constraint: "at least one bin",
                    });
                }
                if !(*span_sds > 0.0 && span_sds.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "span_sds",
                        value: *span_sds,
                        constraint: "span_sds > 0",
                    });
                }
                let (m, _) = mean_and_stderr(sample);
                let sd = sample_sd(sample);
                // a constant sample still needs a nonzero span
                let half = if sd > 0.0 { span_sds * sd } else { 0.5 };
                let (lo, hi) = (m - half, m + half);
                let width = (hi - lo) / *count as f64;
                Ok((0..=*count).map(|i| lo + i as f64 * width).collect())
            }
            BinSpec::Edges(edges) => {
                if edges.len() < 2 {
                    return Err(Error::Size("need at least 2 bin edges".into()));
                }
                if edges.iter().any(|e| !e.is_finite())
                    || edges.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(Error::Numerical(
                        "bin edges must be finite and strictly increasing".into(),
                    ));
                }
                Ok(edges.clone())
            }
        }
    }
}

/// Bin index with outliers clamped into the first/last bin.
fn bin_index(edges: &[f64], v: f64) -> usize {
    let count = edges.len() - 1;
    let pp = edges.partition_point(|&e| e <= v);
    pp.max(1).min(count) - 1
}

/// σ²(t) = ⟨x²(t)⟩ over probe times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCurve {
    pub times: Vec<f64>,
    pub variances: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub member_count: usize,
}

/// ⟨x²(t,−T)⟩ at one (t, T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsfEstimate {
    pub t: usize,
    pub lag_steps: usize,
    pub value: f64,
    pub stderr: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutocorrMethod {
    Direct,
    Identity,
}

/// ⟨x(t,−T)·x(t,T)⟩ at one (t, T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutocorrEstimate {
    pub t: usize,
    pub lag_steps: usize,
    pub value: f64,
    pub stderr: f64,
    pub sample_count: usize,
    pub method: AutocorrMethod,
}

/// Normalized histogram of forward increments x(t+T) − x(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    pub t: usize,
    pub lag_steps: usize,
    pub bin_edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub sample_count: usize,
}

/// What the conditional MSF conditions on at time t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// The level x(t) itself.
    LevelX,
    /// The previous squared increment (x(t) − x(t−T))².
    PreviousSquaredIncrement,
}

/// Binned ⟨(x(t+T)−x(t))² | conditioning⟩. Bins with fewer than `min_count`
/// samples are not reported: their value and stderr are 0 and they are
/// skipped by [`ConditionalMsfTable::memory_slope`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMsfTable {
    pub conditioning: Conditioning,
    pub t: usize,
    pub lag_steps: usize,
    pub bin_edges: Vec<f64>,
    /// Mean conditioning value inside each bin (the unbiased abscissa for
    /// slope estimates; midpoints bias the slope on skewed samples).
    pub bin_means: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub counts: Vec<usize>,
    pub min_count: usize,
}

impl ConditionalMsfTable {
    pub fn is_reported(&self, bin: usize) -> bool {
        self.counts[bin] >= self.min_count.max(1)
    }

    /// (bin mean, value, stderr, count) over reported bins.
    pub fn reported(&self) -> impl Iterator<Item = (f64, f64, f64, usize)> + '_ {
        (0..self.counts.len())
            .filter(|&b| self.is_reported(b))
            .map(|b| (self.bin_means[b], self.values[b], self.stderrs[b], self.counts[b]))
    }

    /// Weighted line fit of conditional MSF against the conditioning value
    /// over reported bins; the slope is the memory coefficient.
    pub fn memory_slope(&self) -> Result<LineFit> {
        let pts: Vec<(f64, f64, f64)> =
            self.reported().map(|(x, y, se, _)| (x, y, se)).collect();
        if pts.len() < 2 {
            return Err(Error::Size(format!(
                "memory slope needs at least 2 reported bins, got {}",
                pts.len()
            )));
        }
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        if pts.iter().any(|p| p.2 <= 0.0) {
            // zero-stderr bins carry no usable weight information
            return ols_line_fit(&x, &y);
        }
        let w: Vec<f64> = pts.iter().map(|p| 1.0 / (p.2 * p.2)).collect();
        weighted_line_fit(&x, &y, &w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationarityVerdict {
    Stationary,
    Nonstationary,
    Inconclusive,
}

/// Two-sample KS comparison of increment distributions across probe times,
/// each against the earliest probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub lag_steps: usize,
    pub probe_times: Vec<usize>,
    pub ks_statistics: Vec<f64>,
    /// Bonferroni-corrected KS critical value at the requested significance.
    pub threshold: f64,
    pub sample_count: usize,
    pub verdict: StationarityVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearityVerdict {
    Linear,
    Nonlinear,
    Inconclusive,
}

/// Weighted straight-line fit of the variance curve with a relative-residual
/// gate: linear means every probe sits within `tolerance` of the line and the
/// intercept is compatible with 0 at 3·SE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearityReport {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_stderr: f64,
    pub slope_stderr: f64,
    pub max_relative_residual: f64,
    pub r_squared: f64,
    pub verdict: LinearityVerdict,
}

fn check_probe(ens: &Ensemble, t: usize) -> Result<()> {
    if t >= ens.path_len() {
        return Err(Error::Size(format!(
            "probe time {t} outside member length {}",
            ens.path_len()
        )));
    }
    Ok(())
}

fn check_lag(ens: &Ensemble, lag_steps: usize) -> Result<()> {
    if lag_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "lag_steps",
            value: 0.0,
            constraint: "lag_steps >= 1",
        });
    }
    if lag_steps >= ens.path_len() {
        return Err(Error::Size(format!(
            "lag {lag_steps} does not fit member length {}",
            ens.path_len()
        )));
    }
    Ok(())
}

/// Cross-member second moment of the levels at each probe time.
pub fn variance_curve(ens: &Ensemble, probe_times: &[usize]) -> Result<VarianceCurve> {
    if probe_times.is_empty() {
        return Err(Error::Size("variance curve needs at least one probe time".into()));
    }
    for &t in probe_times {
        check_probe(ens, t)?;
    }
    let stats = exec::map_range(probe_times.len(), |i| {
        let t = probe_times[i];
        let sq: Vec<f64> = ens.members().iter().map(|m| {
            let x = m.values()[t];
            x * x
        }).collect();
        mean_and_stderr(&sq)
    });
    Ok(VarianceCurve {
        times: probe_times.iter().map(|&t| t as f64).collect(),
        variances: stats.iter().map(|s| s.0).collect(),
        stderrs: stats.iter().map(|s| s.1).collect(),
        member_count: ens.member_count(),
    })
}

/// ⟨x²(t,−T)⟩: cross-member mean of the squared backward increment at t.
pub fn msf(ens: &Ensemble, t: usize, lag_steps: usize) -> Result<MsfEstimate> {
    check_lag(ens, lag_steps)?;
    check_probe(ens, t)?;
    if t < lag_steps {
        return Err(Error::Size(format!(
            "backward increment at t={t} needs t >= lag {lag_steps}"
        )));
    }
    let sq: Vec<f64> = ens
        .members()
        .iter()
        .map(|m| {
            let z = m.values()[t] - m.values()[t - lag_steps];
            z * z
        })
        .collect();
    let (value, stderr) = mean_and_stderr(&sq);
    Ok(MsfEstimate { t, lag_steps, value, stderr, sample_count: sq.len() })
}

fn check_autocorr_bounds(ens: &Ensemble, t: usize, lag_steps: usize) -> Result<()> {
    check_lag(ens, lag_steps)?;
    if t < lag_steps {
        return Err(Error::Size(format!(
            "adjacent increments at t={t} need t >= lag {lag_steps}"
        )));
    }
    if t + lag_steps >= ens.path_len() {
        return Err(Error::Size(format!(
            "adjacent increments at t={t} need t+lag < member length {}",
            ens.path_len()
        )));
    }
    Ok(())
}

/// ⟨x(t,−T)·x(t,T)⟩ as the mean of per-member products of the two adjacent
/// increments around t.
pub fn increment_autocorr_direct(
    ens: &Ensemble,
    t: usize,
    lag_steps: usize,
) -> Result<AutocorrEstimate> {
    check_autocorr_bounds(ens, t, lag_steps)?;
    let prods: Vec<f64> = ens
        .members()
        .iter()
        .map(|m| {
            let v = m.values();
            (v[t] - v[t - lag_steps]) * (v[t + lag_steps] - v[t])
        })
        .collect();
    let (value, stderr) = mean_and_stderr(&prods);
    Ok(AutocorrEstimate {
        t,
        lag_steps,
        value,
        stderr,
        sample_count: prods.len(),
        method: AutocorrMethod::Direct,
    })
}

/// Same quantity via the second-moment identity
/// 2⟨x(t,−T)x(t,T)⟩ = ⟨(x(t+T)−x(t−T))²⟩ − ⟨x²(t,−T)⟩ − ⟨x²(t,T)⟩,
/// evaluated from three mean-square fluctuations on the same members.
pub fn increment_autocorr_identity(
    ens: &Ensemble,
    t: usize,
    lag_steps: usize,
) -> Result<AutocorrEstimate> {
    check_autocorr_bounds(ens, t, lag_steps)?;
    let span = msf(ens, t + lag_steps, 2 * lag_steps)?;
    let back = msf(ens, t, lag_steps)?;
    let fwd = msf(ens, t + lag_steps, lag_steps)?;
    let value = 0.5 * (span.value - back.value - fwd.value);
    // spread of the same combination member by member
    let combo: Vec<f64> = ens
        .members()
        .iter()
        .map(|m| {
            let v = m.values();
            let a = v[t] - v[t - lag_steps];
            let b = v[t + lag_steps] - v[t];
            let s = v[t + lag_steps] - v[t - lag_steps];
            0.5 * (s * s - a * a - b * b)
        })
        .collect();
    let (_, stderr) = mean_and_stderr(&combo);
    Ok(AutocorrEstimate {
        t,
        lag_steps,
        value,
        stderr,
        sample_count: combo.len(),
        method: AutocorrMethod::Identity,
    })
}

/// Normalized histogram of the forward increment x(t+T) − x(t).
pub fn increment_density(
    ens: &Ensemble,
    t: usize,
    lag_steps: usize,
    bins: &BinSpec,
) -> Result<DensityHistogram> {
    check_lag(ens, lag_steps)?;
    if t + lag_steps >= ens.path_len() {
        return Err(Error::Size(format!(
            "forward increment at t={t} needs t+lag < member length {}",
            ens.path_len()
        )));
    }
    let sample: Vec<f64> = ens
        .members()
        .iter()
        .map(|m| m.values()[t + lag_steps] - m.values()[t])
        .collect();
    let edges = bins.edges_for(&sample)?;
    let mut counts = vec![0usize; edges.len() - 1];
    for &z in &sample {
        counts[bin_index(&edges, z)] += 1;
    }
    let total = sample.len() as f64;
    Ok(DensityHistogram {
        t,
        lag_steps,
        bin_edges: edges,
        masses: counts.iter().map(|&c| c as f64 / total).collect(),
        sample_count: sample.len(),
    })
}

/// [`stationarity_test`] with an explicit minimum sample size.
pub fn stationarity_test_with_min(
    ens: &Ensemble,
    lag_steps: usize,
    probe_times: &[usize],
    significance: f64,
    min_samples: usize,
) -> Result<StationarityReport> {
    check_lag(ens, lag_steps)?;
    if probe_times.is_empty() {
        return Err(Error::Size("stationarity test needs at least one probe time".into()));
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::InvalidParameter {
            name: "significance",
            value: significance,
            constraint: "0 < significance < 1",
        });
    }
    let mut probes = probe_times.to_vec();
    probes.sort_unstable();
    probes.dedup();
    for &t in &probes {
        check_probe(ens, t)?;
        if t < lag_steps {
            return Err(Error::Size(format!(
                "stationarity probe t={t} needs t >= lag {lag_steps}"
            )));
        }
    }
    let increment_sample = |t: usize| -> Vec<f64> {
        ens.members()
            .iter()
            .map(|m| m.values()[t] - m.values()[t - lag_steps])
            .collect()
    };
    let reference = increment_sample(probes[0]);
    let n = reference.len();
    let stats = exec::try_map_range(probes.len(), |i| {
        if i == 0 {
            Ok(0.0)
        } else {
            ks_two_sample(&reference, &increment_sample(probes[i]))
        }
    })?;
    let comparisons = probes.len().saturating_sub(1).max(1);
    let threshold = ks_two_sample_critical(significance / comparisons as f64, n, n)?;
    let verdict = if probes.len() < 2 || n < min_samples {
        StationarityVerdict::Inconclusive
    } else if stats.iter().all(|&d| d < threshold) {
        StationarityVerdict::Stationary
    } else {
        StationarityVerdict::Nonstationary
    };
    Ok(StationarityReport {
        lag_steps,
        probe_times: probes,
        ks_statistics: stats,
        threshold,
        sample_count: n,
        verdict,
    })
}

/// Compares the increment distribution at every probe time against the
/// earliest probe with two-sample KS tests (Bonferroni-corrected).
/// Fewer than 2 distinct probes or fewer than 200 members per sample gives an
/// inconclusive verdict rather than an error.
pub fn stationarity_test(
    ens: &Ensemble,
    lag_steps: usize,
    probe_times: &[usize],
    significance: f64,
) -> Result<StationarityReport> {
    stationarity_test_with_min(
        ens,
        lag_steps,
        probe_times,
        significance,
        DEFAULT_MIN_STATIONARITY_SAMPLES,
    )
}

/// Bins the members by a state variable at time t and reports the mean
/// squared forward increment (x(t+T)−x(t))² inside each bin.
pub fn conditional_msf(
    ens: &Ensemble,
    t: usize,
    lag_steps: usize,
    conditioning: Conditioning,
    bins: &BinSpec,
) -> Result<ConditionalMsfTable> {
    conditional_msf_with_min(ens, t, lag_steps, conditioning, bins, DEFAULT_MIN_BIN_COUNT)
}

/// [`conditional_msf`] with an explicit per-bin reporting threshold.
pub fn conditional_msf_with_min(
    ens: &Ensemble,
    t: usize,
    lag_steps: usize,
    conditioning: Conditioning,
    bins: &BinSpec,
    min_count: usize,
) -> Result<ConditionalMsfTable> {
    check_lag(ens, lag_steps)?;
    if t + lag_steps >= ens.path_len() {
        return Err(Error::Size(format!(
            "forward increment at t={t} needs t+lag < member length {}",
            ens.path_len()
        )));
    }
    if conditioning == Conditioning::PreviousSquaredIncrement && t < lag_steps {
        return Err(Error::Size(format!(
            "previous-increment conditioning at t={t} needs t >= lag {lag_steps}"
        )));
    }
    let pairs: Vec<(f64, f64)> = ens
        .members()
        .iter()
        .map(|m| {
            let v = m.values();
            let cond = match conditioning {
                Conditioning::LevelX => v[t],
                Conditioning::PreviousSquaredIncrement => {
                    let z = v[t] - v[t - lag_steps];
                    z * z
                }
            };
            let f = v[t + lag_steps] - v[t];
            (cond, f * f)
        })
        .collect();
    let cond_sample: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let edges = bins.edges_for(&cond_sample)?;
    let nbins = edges.len() - 1;
    let mut grouped: Vec<Vec<f64>> = vec![Vec::new(); nbins];
    let mut cond_sums = vec![0.0f64; nbins];
    for &(c, f2) in &pairs {
        let b = bin_index(&edges, c);
        grouped[b].push(f2);
        cond_sums[b] += c;
    }
    let mut bin_means = vec![0.0; nbins];
    let mut values = vec![0.0; nbins];
    let mut stderrs = vec![0.0; nbins];
    let mut counts = vec![0usize; nbins];
    let mut any_reported = false;
    for b in 0..nbins {
        counts[b] = grouped[b].len();
        if counts[b] == 0 {
            continue;
        }
        bin_means[b] = cond_sums[b] / counts[b] as f64;
        if counts[b] >= min_count.max(1) {
            let (v, se) = mean_and_stderr(&grouped[b]);
            values[b] = v;
            stderrs[b] = se;
            any_reported = true;
        }
    }
    if !any_reported {
        return Err(Error::Size(format!(
            "no bin reaches the minimum occupancy {min_count} \
             ({} samples over {nbins} bins)",
            pairs.len()
        )));
    }
    Ok(ConditionalMsfTable {
        conditioning,
        t,
        lag_steps,
        bin_edges: edges,
        bin_means,
        values,
        stderrs,
        counts,
        min_count,
    })
}

/// Weighted line fit through (t, σ²(t)) with a relative-residual verdict.
/// Points are weighted by 1/stderr² when every probe has a positive stderr,
/// otherwise unweighted.
pub fn linearity_test(curve: &VarianceCurve, tolerance: f64) -> Result<LinearityReport> {
    if curve.times.len() < 3 {
        return Err(Error::Size(format!(
            "linearity test needs at least 3 probe times, got {}",
            curve.times.len()
        )));
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "tolerance",
            value: tolerance,
            constraint: "tolerance > 0",
        });
    }
    let fit = if curve.stderrs.iter().all(|&se| se > 0.0) {
        let w: Vec<f64> = curve.stderrs.iter().map(|se| 1.0 / (se * se)).collect();
        weighted_line_fit(&curve.times, &curve.variances, &w)
    } else {
        ols_line_fit(&curve.times, &curve.variances)
    };
    let fit = match fit {
        Ok(f) => f,
        Err(Error::Singular(_)) => {
            return Ok(LinearityReport {
                intercept: 0.0,
                slope: 0.0,
                intercept_stderr: 0.0,
                slope_stderr: 0.0,
                max_relative_residual: 0.0,
                r_squared: 0.0,
                verdict: LinearityVerdict::Inconclusive,
            })
        }
        Err(e) => return Err(e),
    };
    let mut max_rel = 0.0f64;
    for (&t, &v) in curve.times.iter().zip(&curve.variances) {
        let resid = v - fit.intercept - fit.slope * t;
        let rel = if v != 0.0 {
            (resid / v).abs()
        } else if resid == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_rel = max_rel.max(rel);
    }
    let intercept_ok = fit.intercept.abs() <= 3.0 * fit.intercept_stderr;
    let verdict = if max_rel.is_finite() && max_rel <= tolerance && intercept_ok {
        LinearityVerdict::Linear
    } else {
        LinearityVerdict::Nonlinear
    };
    Ok(LinearityReport {
        intercept: fit.intercept,
        slope: fit.slope,
        intercept_stderr: fit.intercept_stderr,
        slope_stderr: fit.slope_stderr,
        max_relative_residual: if max_rel.is_finite() { max_rel } else { f64::MAX },
        r_squared: fit.r_squared,
        verdict,
    })
}
