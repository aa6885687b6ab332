//! Level/increment containers and the ensemble construction.
//!
//! A `LevelSeries` is an evenly sampled path x(k·step) rebased so x(0)=0.
//! Increments z(t) = x(t) − x(t−T) at integer lag T are the basic objects all
//! diagnostics run on; an `Ensemble` is a set of equal-length rebased paths
//! over which expectations ⟨·⟩ are estimated as cross-member means.

use crate::error::{Error, Result};

/// Strictly positive prices on an (approximately) regular time grid.
#[derive(Debug, Clone)]
pub struct PriceSeries {
    times: Vec<f64>,
    prices: Vec<f64>,
    step: f64,
}

/// Reference price p_c used to form log levels ln(p/p_c).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Use the first price of the series.
    First,
    /// Use an explicit positive price.
    Price(f64),
}

/// Timestamps may deviate from the nominal grid t[0] + k·step by at most
/// this fraction of a step; worse than that is treated as malformed input
/// rather than silently resampled.
pub const GRID_TOLERANCE: f64 = 0.1;

impl PriceSeries {
    pub fn new(times: Vec<f64>, prices: Vec<f64>, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "step",
                value: step,
                constraint: "step > 0 and finite",
            });
        }
        if times.len() != prices.len() {
            return Err(Error::Format(format!(
                "times/prices length mismatch: {} vs {}",
                times.len(),
                prices.len()
            )));
        }
        if prices.len() < 2 {
            return Err(Error::Size(format!(
                "price series needs at least 2 samples, got {}",
                prices.len()
            )));
        }
        for (i, &p) in prices.iter().enumerate() {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::Domain(format!(
                    "price at index {i} is not a positive finite number: {p}"
                )));
            }
        }
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::Format(format!(
                    "timestamps not strictly increasing at row {}",
                    i + 1
                )));
            }
        }
        for (k, &t) in times.iter().enumerate() {
            let nominal = times[0] + k as f64 * step;
            if (t - nominal).abs() > GRID_TOLERANCE * step {
                return Err(Error::Format(format!(
                    "timestamp at row {k} is {t}, more than {GRID_TOLERANCE} steps away \
                     from the nominal grid point {nominal}"
                )));
            }
        }
        Ok(Self { times, prices, step })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 2 by construction
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Log levels x(k) = ln(p[k]/p_c) − ln(p[0]/p_c), so x(0) = 0 regardless
    /// of the reference price.
    pub fn log_returns(&self, reference: Reference) -> Result<LevelSeries> {
        let p_c = match reference {
            Reference::First => self.prices[0],
            Reference::Price(p) => {
                if !(p > 0.0 && p.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "reference",
                        value: p,
                        constraint: "reference price > 0",
                    });
                }
                p
            }
        };
        let head = (self.prices[0] / p_c).ln();
        let values = self.prices.iter().map(|p| (p / p_c).ln() - head).collect();
        LevelSeries::new(self.times[0], self.step, values, false)
    }
}

/// Evenly sampled levels x(k·step), optionally detrended.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSeries {
    origin_time: f64,
    step: f64,
    values: Vec<f64>,
    detrended: bool,
}

impl LevelSeries {
    pub fn new(origin_time: f64, step: f64, values: Vec<f64>, detrended: bool) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "step",
                value: step,
                constraint: "step > 0 and finite",
            });
        }
        if !origin_time.is_finite() {
            return Err(Error::Domain(format!("non-finite origin time {origin_time}")));
        }
        if values.len() < 2 {
            return Err(Error::Size(format!(
                "level series needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "level at index {i} is not finite: {}",
                values[i]
            )));
        }
        Ok(Self { origin_time, step, values, detrended })
    }

    /// Levels starting at time 0 with the given step, not yet detrended.
    pub fn from_values(step: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(0.0, step, values, false)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 2 by construction
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin_time(&self) -> f64 {
        self.origin_time
    }

    pub fn is_detrended(&self) -> bool {
        self.detrended
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.origin_time + k as f64 * self.step
    }

    /// Shifts the whole path so values[0] becomes exactly 0.
    pub fn rebase(&self) -> LevelSeries {
        let head = self.values[0];
        LevelSeries {
            origin_time: self.origin_time,
            step: self.step,
            values: self.values.iter().map(|v| v - head).collect(),
            detrended: self.detrended,
        }
    }

    /// Removes the straight line through the endpoints, i.e. subtracts the
    /// mean one-step increment μ̂ = (x[n−1]−x[0])/(n−1) times k from x[k].
    ///
    /// The multiplier k/(n−1) evaluates to exactly 1.0 at k = n−1, so both
    /// endpoints of the output are exactly 0, the output's one-step increments
    /// sum to exactly 0, and running detrend twice is a bitwise no-op.
    pub fn detrend(&self) -> LevelSeries {
        let n = self.values.len();
        let head = self.values[0];
        let total_drift = self.values[n - 1] - head;
        let denom = (n - 1) as f64;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| (v - head) - (k as f64 / denom) * total_drift)
            .collect();
        LevelSeries {
            origin_time: self.origin_time,
            step: self.step,
            values,
            detrended: true,
        }
    }

    /// Lagged differences z(t) = x(t) − x(t−T). Overlapping increments start
    /// at every admissible index T..n−1; non-overlapping ones at T, 2T, ….
    pub fn increments(&self, lag_steps: usize, overlapping: bool) -> Result<IncrementSeries> {
        if lag_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "lag_steps",
                value: 0.0,
                constraint: "lag_steps >= 1",
            });
        }
        if lag_steps >= self.values.len() {
            return Err(Error::Size(format!(
                "lag {} does not fit a series of length {}",
                lag_steps,
                self.values.len()
            )));
        }
        let start_indices: Vec<usize> = if overlapping {
            (lag_steps..self.values.len()).collect()
        } else {
            (lag_steps..self.values.len()).step_by(lag_steps).collect()
        };
        let values = start_indices
            .iter()
            .map(|&t| self.values[t] - self.values[t - lag_steps])
            .collect();
        IncrementSeries::new(lag_steps, start_indices, values, overlapping)
    }

    /// Splits the series into ⌊n/window⌋ rebased non-overlapping windows;
    /// leftover tail samples are dropped and counted.
    pub fn ensemble_split(&self, window_steps: usize) -> Result<SplitEnsemble> {
        let n = self.values.len();
        if window_steps < 2 || window_steps > n {
            return Err(Error::Size(format!(
                "window of {window_steps} steps does not fit a series of length {n} \
                 (need 2 <= window <= length)"
            )));
        }
        let member_count = n / window_steps;
        let members = (0..member_count)
            .map(|i| {
                let w = &self.values[i * window_steps..(i + 1) * window_steps];
                let head = w[0];
                LevelSeries {
                    origin_time: self.time_at(i * window_steps),
                    step: self.step,
                    values: w.iter().map(|v| v - head).collect(),
                    detrended: self.detrended,
                }
            })
            .collect();
        Ok(SplitEnsemble {
            ensemble: Ensemble::new(members)?,
            discarded: n - member_count * window_steps,
        })
    }
}

/// Result of [`LevelSeries::ensemble_split`].
#[derive(Debug, Clone)]
pub struct SplitEnsemble {
    pub ensemble: Ensemble,
    /// Tail samples that did not fill a complete window.
    pub discarded: usize,
}

/// Lagged differences of a level series, with start-index bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSeries {
    lag_steps: usize,
    start_indices: Vec<usize>,
    values: Vec<f64>,
    overlapping: bool,
}

impl IncrementSeries {
    pub fn new(
        lag_steps: usize,
        start_indices: Vec<usize>,
        values: Vec<f64>,
        overlapping: bool,
    ) -> Result<Self> {
        if lag_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "lag_steps",
                value: 0.0,
                constraint: "lag_steps >= 1",
            });
        }
        if start_indices.len() != values.len() {
            return Err(Error::Size(format!(
                "start index / value length mismatch: {} vs {}",
                start_indices.len(),
                values.len()
            )));
        }
        if start_indices.iter().any(|&t| t < lag_steps) {
            return Err(Error::Size(format!(
                "every start index must be >= lag {lag_steps}"
            )));
        }
        if !overlapping
            && start_indices.windows(2).any(|w| w[1] - w[0] < lag_steps)
        {
            return Err(Error::Size(
                "non-overlapping increments need start indices spaced by at least the lag".into(),
            ));
        }
        Ok(Self { lag_steps, start_indices, values, overlapping })
    }

    pub fn lag_steps(&self) -> usize {
        self.lag_steps
    }

    pub fn start_indices(&self) -> &[usize] {
        &self.start_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn overlapping(&self) -> bool {
        self.overlapping
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Equal-length rebased level paths; the population behind every ⟨·⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<LevelSeries>,
}

impl Ensemble {
    pub fn new(members: Vec<LevelSeries>) -> Result<Self> {
        let first = members.first().ok_or_else(|| {
            Error::Size("ensemble needs at least one member".into())
        })?;
        let (len, step) = (first.len(), first.step());
        for (i, m) in members.iter().enumerate() {
            if m.len() != len || m.step() != step {
                return Err(Error::Size(format!(
                    "member {i} has length {} and step {}, expected {len} and {step}",
                    m.len(),
                    m.step()
                )));
            }
            if m.values()[0] != 0.0 {
                return Err(Error::Domain(format!(
                    "member {i} is not rebased: first value {}",
                    m.values()[0]
                )));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[LevelSeries] {
        &self.members
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    /// Length of every member path.
    pub fn path_len(&self) -> usize {
        self.members[0].len()
    }

    pub fn step(&self) -> f64 {
        self.members[0].step()
    }
}
