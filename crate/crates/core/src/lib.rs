//! Diagnostics for the increment structure of noisy time series.
//!
//! The crate answers one question about a detrended log-price history: are its
//! increments consistent with uncorrelated, stationary noise, or do they carry
//! conditional memory of the kind ARCH/GARCH recursions encode? The toolkit is
//! built around ensemble averages: a single long series is split into many
//! rebased windows and every statistic is a cross-member mean with a standard
//! error, so each verdict comes with an uncertainty and a threshold.
//!
//! Pipeline pieces:
//!
//! * [`series`]: validated level/increment containers, detrending, ensemble
//!   splitting.
//! * [`generators`]: seeded reference processes (Wiener, ARCH(1), GARCH(1,1),
//!   fractional Brownian motion, power-law-scaled Wiener) used as null and
//!   alternative models.
//! * [`estimators`]: mean-square fluctuation, increment autocorrelation (two
//!   algebraically equivalent routes), distribution stationarity tests,
//!   conditional mean-square fluctuation tables, variance-curve linearity.
//! * [`fit`]: ARCH(1) least-squares and GARCH(1,1) quasi-likelihood fits with
//!   the closed-form unconditional fixed points.
//! * [`falsify`]: the full decision pipeline producing a deterministic,
//!   versioned report.
//!
//! Everything is deterministic given a master seed: ensemble members draw from
//! counter-based substreams, and all reductions run in a fixed order, so
//! results are bit-identical across runs and thread counts. Data-parallel
//! execution uses rayon behind the default `parallel` feature; disable the
//! feature (or call [`exec::set_parallel`]`(false)` at runtime) to force the
//! sequential fallback.

pub mod error;
pub mod estimators;
pub mod exec;
pub mod falsify;
pub mod fit;
pub mod generators;
pub mod report;
pub mod series;
pub mod stats;

mod optim;
mod rng;

pub use error::{Error, Result};
