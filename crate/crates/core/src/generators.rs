//! Seeded simulators for the reference process families.
//!
//! All generators return levels (cumulative sums of increments) rebased to
//! x(0)=0 and are bit-reproducible given (params, n, step, seed). Ensemble
//! member m draws from the substream (seed, m), so parallel generation is
//! order-independent and a single path equals member 0 of its ensemble.

use crate::error::{Error, Result};
use crate::exec;
use crate::rng::member_rng;
use crate::series::{Ensemble, LevelSeries};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Driving noise menu: standardized to mean 0, variance 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSpec {
    #[default]
    Gaussian,
    /// Uniform on (−√3, √3).
    UniformRescaled,
    /// ±1 with equal probability.
    Rademacher,
}

impl NoiseSpec {
    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            NoiseSpec::Gaussian => rng.sample(StandardNormal),
            NoiseSpec::UniformRescaled => {
                (rng.random::<f64>() * 2.0 - 1.0) * 1.7320508075688772
            }
            NoiseSpec::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseSpec::Gaussian => "gaussian",
            NoiseSpec::UniformRescaled => "uniform-rescaled",
            NoiseSpec::Rademacher => "rademacher",
        })
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseSpec::Gaussian),
            "uniform-rescaled" => Ok(NoiseSpec::UniformRescaled),
            "rademacher" => Ok(NoiseSpec::Rademacher),
            other => Err(Error::Usage(format!(
                "unknown noise `{other}` (expected gaussian, uniform-rescaled or rademacher)"
            ))),
        }
    }
}

/// Constant variance rate: increments have variance sigma1_sq per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WienerParams {
    sigma1_sq: f64,
}

impl WienerParams {
    pub fn new(sigma1_sq: f64) -> Result<Self> {
        if !(sigma1_sq > 0.0 && sigma1_sq.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma1_sq",
                value: sigma1_sq,
                constraint: "sigma1_sq > 0",
            });
        }
        Ok(Self { sigma1_sq })
    }

    pub fn sigma1_sq(&self) -> f64 {
        self.sigma1_sq
    }
}

/// Conditional mean-square recursion m(e) = alpha + omega·e² driving
/// unit-variance noise. omega may be negative as long as the recursion stays
/// positive on the realized path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchParams {
    alpha: f64,
    omega: f64,
}

impl ArchParams {
    pub fn new(alpha: f64, omega: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                constraint: "alpha > 0",
            });
        }
        if !(omega.abs() < 1.0) {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: omega,
                constraint: "|omega| < 1",
            });
        }
        Ok(Self { alpha, omega })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

/// Recursion v(k) = alpha + omega·e(k−1)² + zeta·v(k−1); e(k) = z·√v(k).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    alpha: f64,
    omega: f64,
    zeta: f64,
}

impl GarchParams {
    pub fn new(alpha: f64, omega: f64, zeta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                constraint: "alpha > 0",
            });
        }
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: omega,
                constraint: "omega >= 0",
            });
        }
        if !(zeta >= 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "zeta",
                value: zeta,
                constraint: "zeta >= 0",
            });
        }
        if omega + zeta >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "omega_plus_zeta",
                value: omega + zeta,
                constraint: "omega + zeta < 1",
            });
        }
        Ok(Self { alpha, omega, zeta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }
}

fn validate_hurst_family(hurst: f64, sigma_sq: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::InvalidParameter {
            name: "hurst",
            value: hurst,
            constraint: "0 < hurst < 1",
        });
    }
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sigma_sq",
            value: sigma_sq,
            constraint: "sigma_sq > 0",
        });
    }
    Ok(())
}

/// Gaussian path with ⟨x(s)x(t)⟩ = (sigma_sq/2)(s^{2H} + t^{2H} − |t−s|^{2H});
/// increments are stationary and, for H ≠ 1/2, correlated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbmParams {
    hurst: f64,
    sigma_sq: f64,
}

impl FbmParams {
    pub fn new(hurst: f64, sigma_sq: f64) -> Result<Self> {
        validate_hurst_family(hurst, sigma_sq)?;
        Ok(Self { hurst, sigma_sq })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }
}

/// Independent Gaussian increments with variance sigma_sq·(t_k^{2H} − t_{k−1}^{2H}):
/// the same power-law variance curve as fBm but with no increment correlation,
/// which makes the increments nonstationary instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledWienerParams {
    hurst: f64,
    sigma_sq: f64,
}

impl ScaledWienerParams {
    pub fn new(hurst: f64, sigma_sq: f64) -> Result<Self> {
        validate_hurst_family(hurst, sigma_sq)?;
        Ok(Self { hurst, sigma_sq })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }
}

/// Path generation above this many steps is refused: the exact covariance
/// factorization is O(n²) and the cost stops being desk-scale.
pub const FBM_DEFAULT_MAX_STEPS: usize = 1 << 16;

fn check_path_len(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Size(format!("path needs at least 2 samples, got {n}")));
    }
    Ok(())
}

fn check_step(step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "step",
            value: step,
            constraint: "step > 0 and finite",
        });
    }
    Ok(())
}

fn levels_from_increments(
    n: usize,
    mut next: impl FnMut() -> Result<f64>,
) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(n);
    values.push(0.0);
    let mut x = 0.0;
    for _ in 1..n {
        x += next()?;
        values.push(x);
    }
    Ok(values)
}

fn wiener_values(params: &WienerParams, n: usize, step: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let scale = (params.sigma1_sq * step).sqrt();
    levels_from_increments(n, || Ok(scale * rng.sample::<f64, _>(StandardNormal)))
        .expect("infallible increments")
}

fn arch1_values(
    params: &ArchParams,
    n: usize,
    noise: NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut msf = params.alpha / (1.0 - params.omega);
    let mut prev = f64::NAN;
    let mut k = 0usize;
    levels_from_increments(n, || {
        if k > 0 {
            msf = params.alpha + params.omega * prev * prev;
            if !(msf > 0.0) {
                return Err(Error::Domain(format!(
                    "conditional mean square fluctuation became non-positive ({msf}) at \
                     increment {k}; omega = {} is too negative for this path",
                    params.omega
                )));
            }
        }
        prev = noise.sample(rng) * msf.sqrt();
        k += 1;
        Ok(prev)
    })
}

fn garch11_values(
    params: &GarchParams,
    n: usize,
    noise: NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mut v = params.alpha / (1.0 - params.omega - params.zeta);
    let mut prev = f64::NAN;
    let mut k = 0usize;
    levels_from_increments(n, || {
        if k > 0 {
            // with zeta = 0 this adds an exact +0.0, so the path is
            // bit-identical to the arch1 recursion under a shared seed
            v = params.alpha + params.omega * prev * prev + params.zeta * v;
        }
        prev = noise.sample(rng) * v.sqrt();
        k += 1;
        Ok(prev)
    })
    .expect("infallible increments")
}

fn scaled_wiener_values(
    params: &ScaledWienerParams,
    n: usize,
    step: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let two_h = 2.0 * params.hurst;
    let mut prev_pow = 0.0;
    let mut k = 0usize;
    levels_from_increments(n, || {
        k += 1;
        let pow = (k as f64 * step).powf(two_h);
        let var = params.sigma_sq * (pow - prev_pow);
        prev_pow = pow;
        Ok(var.sqrt() * rng.sample::<f64, _>(StandardNormal))
    })
    .expect("infallible increments")
}

/// Autocovariance of the unit-lag fractional Gaussian noise at lags 0..m−1,
/// for increments over `step`-sized intervals.
fn fgn_autocovariance(params: &FbmParams, step: f64, m: usize) -> Vec<f64> {
    let two_h = 2.0 * params.hurst;
    let scale = params.sigma_sq * step.powf(two_h);
    (0..m)
        .map(|k| {
            if k == 0 {
                scale
            } else {
                let kf = k as f64;
                0.5 * scale
                    * ((kf + 1.0).powf(two_h) - 2.0 * kf.powf(two_h) + (kf - 1.0).powf(two_h))
            }
        })
        .collect()
}

/// Exact stationary-Gaussian sampling by the innovations (Levinson-type)
/// recursion: O(m²) time, O(m) memory. The linear map z ↦ fgn is the unique
/// lower-triangular factor of the Toeplitz covariance, i.e. the same matrix a
/// dense Cholesky factorization would produce.
fn fgn_from_autocovariance(gamma: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let m = gamma.len();
    let mut fgn = vec![0.0; m];
    if m == 0 {
        return Ok(fgn);
    }
    if gamma[0] <= 0.0 {
        return Err(Error::Numerical(format!(
            "increment variance must be positive, got {}",
            gamma[0]
        )));
    }
    let mut var = gamma[0];
    fgn[0] = var.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let mut phi = vec![0.0; m];
    let mut phi_prev = vec![0.0; m];
    for k in 1..m {
        let mut num = gamma[k];
        for j in 1..k {
            num -= phi_prev[j - 1] * gamma[k - j];
        }
        let reflect = num / var;
        if !reflect.is_finite() || reflect.abs() >= 1.0 {
            return Err(Error::Numerical(format!(
                "stationary recursion left the valid region at lag {k} \
                 (partial correlation {reflect})"
            )));
        }
        phi[k - 1] = reflect;
        for j in 1..k {
            phi[j - 1] = phi_prev[j - 1] - reflect * phi_prev[k - 1 - j];
        }
        var *= 1.0 - reflect * reflect;
        let mut pred = 0.0;
        for j in 1..=k {
            pred += phi[j - 1] * fgn[k - j];
        }
        fgn[k] = pred + var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        phi_prev[..k].copy_from_slice(&phi[..k]);
    }
    Ok(fgn)
}

fn fbm_values(gamma: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let fgn = fgn_from_autocovariance(gamma, rng)?;
    let mut it = fgn.into_iter();
    levels_from_increments(gamma.len() + 1, || Ok(it.next().expect("fgn length")))
}

/// Gaussian martingale: independent increments of variance sigma1_sq·step.
pub fn gen_wiener(params: &WienerParams, n: usize, step: f64, seed: u64) -> Result<LevelSeries> {
    check_path_len(n)?;
    check_step(step)?;
    LevelSeries::new(0.0, step, wiener_values(params, n, step, &mut member_rng(seed, 0)), true)
}

/// ARCH(1) increments on a unit-period grid, started at the stationary scale.
pub fn gen_arch1(params: &ArchParams, n: usize, seed: u64, noise: NoiseSpec) -> Result<LevelSeries> {
    check_path_len(n)?;
    LevelSeries::new(0.0, 1.0, arch1_values(params, n, noise, &mut member_rng(seed, 0))?, true)
}

/// GARCH(1,1) increments on a unit-period grid, v(0) at the stationary level.
pub fn gen_garch11(
    params: &GarchParams,
    n: usize,
    seed: u64,
    noise: NoiseSpec,
) -> Result<LevelSeries> {
    check_path_len(n)?;
    LevelSeries::new(0.0, 1.0, garch11_values(params, n, noise, &mut member_rng(seed, 0)), true)
}

/// Fractional Brownian motion by exact covariance factorization, capped at
/// [`FBM_DEFAULT_MAX_STEPS`] steps.
pub fn gen_fbm(params: &FbmParams, n: usize, step: f64, seed: u64) -> Result<LevelSeries> {
    gen_fbm_with_max(params, n, step, seed, FBM_DEFAULT_MAX_STEPS)
}

/// [`gen_fbm`] with an explicit step ceiling.
pub fn gen_fbm_with_max(
    params: &FbmParams,
    n: usize,
    step: f64,
    seed: u64,
    max_steps: usize,
) -> Result<LevelSeries> {
    check_path_len(n)?;
    check_step(step)?;
    if n > max_steps {
        return Err(Error::Resource(format!(
            "fbm path of {n} steps exceeds the configured maximum {max_steps} \
             (exact generation is O(n²))"
        )));
    }
    let gamma = fgn_autocovariance(params, step, n - 1);
    LevelSeries::new(0.0, step, fbm_values(&gamma, &mut member_rng(seed, 0))?, true)
}

/// Independent-increment process with the fBm variance curve sigma_sq·t^{2H}.
pub fn gen_scaled_wiener(
    params: &ScaledWienerParams,
    n: usize,
    step: f64,
    seed: u64,
) -> Result<LevelSeries> {
    check_path_len(n)?;
    check_step(step)?;
    LevelSeries::new(
        0.0,
        step,
        scaled_wiener_values(params, n, step, &mut member_rng(seed, 0)),
        true,
    )
}

/// A process family plus its parameters; the unit the CLI and the ensemble
/// builder dispatch on.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Wiener(WienerParams),
    Arch1(ArchParams, NoiseSpec),
    Garch11(GarchParams, NoiseSpec),
    Fbm(FbmParams),
    ScaledWiener(ScaledWienerParams),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Wiener(_) => "wiener",
            Model::Arch1(..) => "arch1",
            Model::Garch11(..) => "garch11",
            Model::Fbm(_) => "fbm",
            Model::ScaledWiener(_) => "scaled-wiener",
        }
    }

    fn check_step_for_family(&self, step: f64) -> Result<()> {
        check_step(step)?;
        if matches!(self, Model::Arch1(..) | Model::Garch11(..)) && step != 1.0 {
            return Err(Error::InvalidParameter {
                name: "step",
                value: step,
                constraint: "arch1/garch11 increments are per unit period; step must be 1",
            });
        }
        Ok(())
    }

    /// One path, deterministic in the seed; equals member 0 of the ensemble.
    pub fn sample_path(&self, n: usize, step: f64, seed: u64) -> Result<LevelSeries> {
        self.check_step_for_family(step)?;
        match self {
            Model::Wiener(p) => gen_wiener(p, n, step, seed),
            Model::Arch1(p, noise) => gen_arch1(p, n, seed, *noise),
            Model::Garch11(p, noise) => gen_garch11(p, n, seed, *noise),
            Model::Fbm(p) => gen_fbm(p, n, step, seed),
            Model::ScaledWiener(p) => gen_scaled_wiener(p, n, step, seed),
        }
    }

    /// `member_count` independent paths from per-member substreams. Results
    /// are identical whichever thread pool (or none) runs the map.
    pub fn sample_ensemble(
        &self,
        member_count: usize,
        n: usize,
        step: f64,
        seed: u64,
    ) -> Result<Ensemble> {
        if member_count == 0 {
            return Err(Error::Size("ensemble needs at least one member".into()));
        }
        check_path_len(n)?;
        self.check_step_for_family(step)?;
        let members = match self {
            Model::Wiener(p) => exec::try_map_range(member_count, |m| {
                let values = wiener_values(p, n, step, &mut member_rng(seed, m as u64));
                LevelSeries::new(0.0, step, values, true)
            })?,
            Model::Arch1(p, noise) => exec::try_map_range(member_count, |m| {
                let values = arch1_values(p, n, *noise, &mut member_rng(seed, m as u64))?;
                LevelSeries::new(0.0, step, values, true)
            })?,
            Model::Garch11(p, noise) => exec::try_map_range(member_count, |m| {
                let values = garch11_values(p, n, *noise, &mut member_rng(seed, m as u64));
                LevelSeries::new(0.0, step, values, true)
            })?,
            Model::Fbm(p) => {
                if n > FBM_DEFAULT_MAX_STEPS {
                    return Err(Error::Resource(format!(
                        "fbm member of {n} steps exceeds the configured maximum \
                         {FBM_DEFAULT_MAX_STEPS}"
                    )));
                }
                // the autocovariance is shared by every member
                let gamma = fgn_autocovariance(p, step, n - 1);
                exec::try_map_range(member_count, |m| {
                    let values = fbm_values(&gamma, &mut member_rng(seed, m as u64))?;
                    LevelSeries::new(0.0, step, values, true)
                })?
            }
            Model::ScaledWiener(p) => exec::try_map_range(member_count, |m| {
                let values = scaled_wiener_values(p, n, step, &mut member_rng(seed, m as u64));
                LevelSeries::new(0.0, step, values, true)
            })?,
        };
        Ensemble::new(members)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Wiener(p) => write!(f, "wiener(sigma1_sq={})", p.sigma1_sq),
            Model::Arch1(p, noise) => {
                write!(f, "arch1(alpha={}, omega={}, noise={noise})", p.alpha, p.omega)
            }
            Model::Garch11(p, noise) => write!(
                f,
                "garch11(alpha={}, omega={}, zeta={}, noise={noise})",
                p.alpha, p.omega, p.zeta
            ),
            Model::Fbm(p) => write!(f, "fbm(hurst={}, sigma_sq={})", p.hurst, p.sigma_sq),
            Model::ScaledWiener(p) => {
                write!(f, "scaled-wiener(hurst={}, sigma_sq={})", p.hurst, p.sigma_sq)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_one_sample_critical, ks_one_sample_normal, mean, mean_and_stderr, sample_variance};
    use approx::assert_relative_eq;

    fn bits(series: &LevelSeries) -> Vec<u64> {
        series.values().iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn parameter_validation() {
        assert!(WienerParams::new(0.0).is_err());
        assert!(ArchParams::new(0.2, 1.0).is_err());
        assert!(ArchParams::new(0.2, -0.9).is_ok());
        assert!(ArchParams::new(-0.1, 0.5).is_err());
        assert!(GarchParams::new(0.1, 0.5, 0.5).is_err());
        assert!(GarchParams::new(0.1, -0.1, 0.5).is_err());
        assert!(GarchParams::new(0.1, 0.2, 0.7).is_ok());
        assert!(FbmParams::new(1.0, 1.0).is_err());
        assert!(FbmParams::new(0.7, 0.0).is_err());
        assert!(ScaledWienerParams::new(0.5, 2.0).is_ok());
    }

    #[test]
    fn all_generators_are_deterministic_and_rebased() {
        let w = WienerParams::new(1.0).unwrap();
        let a = ArchParams::new(0.2, 0.5).unwrap();
        let g = GarchParams::new(0.1, 0.2, 0.7).unwrap();
        let fb = FbmParams::new(0.7, 1.0).unwrap();
        let sw = ScaledWienerParams::new(0.7, 1.0).unwrap();
        let paths: Vec<LevelSeries> = vec![
            gen_wiener(&w, 257, 0.5, 7).unwrap(),
            gen_arch1(&a, 257, 7, NoiseSpec::Gaussian).unwrap(),
            gen_garch11(&g, 257, 7, NoiseSpec::Rademacher).unwrap(),
            gen_fbm(&fb, 257, 0.5, 7).unwrap(),
            gen_scaled_wiener(&sw, 257, 0.5, 7).unwrap(),
        ];
        let again: Vec<LevelSeries> = vec![
            gen_wiener(&w, 257, 0.5, 7).unwrap(),
            gen_arch1(&a, 257, 7, NoiseSpec::Gaussian).unwrap(),
            gen_garch11(&g, 257, 7, NoiseSpec::Rademacher).unwrap(),
            gen_fbm(&fb, 257, 0.5, 7).unwrap(),
            gen_scaled_wiener(&sw, 257, 0.5, 7).unwrap(),
        ];
        for (p, q) in paths.iter().zip(&again) {
            assert_eq!(p.values()[0], 0.0);
            assert_eq!(bits(p), bits(q));
            assert_eq!(p.len(), 257);
        }
        // a different seed must change every family's output
        assert_ne!(bits(&paths[0]), bits(&gen_wiener(&w, 257, 0.5, 8).unwrap()));
    }

    #[test]
    fn wiener_increment_variance_matches_rate() {
        let p = WienerParams::new(1.0).unwrap();
        let x = gen_wiener(&p, 1_000_001, 1.0, 42).unwrap();
        let inc = x.increments(1, true).unwrap();
        let var = sample_variance(inc.values());
        assert!((0.99..=1.01).contains(&var), "one-step variance {var}");
        // scaling in step: variance rate 2.0 over step 0.25
        let p2 = WienerParams::new(2.0).unwrap();
        let y = gen_wiener(&p2, 100_001, 0.25, 42).unwrap();
        let var2 = sample_variance(y.increments(1, true).unwrap().values());
        assert_relative_eq!(var2, 0.5, max_relative = 0.03);
    }

    #[test]
    fn wiener_level_variance_grows_linearly() {
        let p = WienerParams::new(1.0).unwrap();
        let ens = Model::Wiener(p).sample_ensemble(10_000, 101, 1.0, 9).unwrap();
        let sq: Vec<f64> = ens.members().iter().map(|m| m.values()[100].powi(2)).collect();
        let (v, se) = mean_and_stderr(&sq);
        assert!((v - 100.0).abs() <= 3.0 * se, "var {v} se {se}");
    }

    #[test]
    fn arch_fixed_point_two_percent() {
        let p = ArchParams::new(0.2, 0.5).unwrap();
        let x = gen_arch1(&p, 1_000_000, 42, NoiseSpec::Gaussian).unwrap();
        let inc = x.increments(1, true).unwrap();
        let msq = mean(&inc.values().iter().map(|z| z * z).collect::<Vec<_>>());
        assert_relative_eq!(msq, 0.4, max_relative = 0.02);
    }

    #[test]
    fn arch_omega_zero_is_iid_noise_at_variance_alpha() {
        let p = ArchParams::new(0.25, 0.0).unwrap();
        let x = gen_arch1(&p, 5001, 11, NoiseSpec::Gaussian).unwrap();
        let inc = x.increments(1, true).unwrap();
        let d = ks_one_sample_normal(inc.values(), 0.0, 0.25f64.sqrt()).unwrap();
        let crit = ks_one_sample_critical(0.01, inc.len()).unwrap();
        assert!(d < crit, "ks {d} vs critical {crit}");
    }

    #[test]
    fn arch_conditional_msf_tracks_recursion_in_a_bin() {
        let p = ArchParams::new(0.2, 0.5).unwrap();
        let x = gen_arch1(&p, 200_001, 5, NoiseSpec::Gaussian).unwrap();
        let e = x.increments(1, true).unwrap();
        let v = e.values();
        let (mut num, mut cond_sum, mut count) = (0.0, 0.0, 0usize);
        for k in 1..v.len() {
            let prev_sq = v[k - 1] * v[k - 1];
            if (0.35..=0.45).contains(&prev_sq) {
                num += v[k] * v[k];
                cond_sum += prev_sq;
                count += 1;
            }
        }
        assert!(count > 2000, "bin occupancy {count}");
        let measured = num / count as f64;
        let predicted = 0.2 + 0.5 * (cond_sum / count as f64);
        assert_relative_eq!(measured, predicted, max_relative = 0.05);
    }

    #[test]
    fn arch_mildly_negative_omega_keeps_fixed_point() {
        let p = ArchParams::new(1.0, -0.01).unwrap();
        let x = gen_arch1(&p, 100_001, 3, NoiseSpec::Gaussian).unwrap();
        let inc = x.increments(1, true).unwrap();
        let msq = mean(&inc.values().iter().map(|z| z * z).collect::<Vec<_>>());
        assert_relative_eq!(msq, 1.0 / 1.01, max_relative = 0.03);
    }

    #[test]
    fn arch_strongly_negative_omega_fails_at_runtime() {
        let p = ArchParams::new(0.1, -0.9).unwrap();
        match gen_arch1(&p, 1000, 3, NoiseSpec::Gaussian) {
            Err(Error::Domain(msg)) => assert!(msg.contains("non-positive"), "{msg}"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn garch_fixed_point_three_percent() {
        let p = GarchParams::new(0.1, 0.2, 0.7).unwrap();
        let x = gen_garch11(&p, 1_000_000, 42, NoiseSpec::Gaussian).unwrap();
        let inc = x.increments(1, true).unwrap();
        let msq = mean(&inc.values().iter().map(|z| z * z).collect::<Vec<_>>());
        assert_relative_eq!(msq, 1.0, max_relative = 0.03);
    }

    #[test]
    fn garch_with_zero_zeta_is_bitwise_arch() {
        for noise in [NoiseSpec::Gaussian, NoiseSpec::UniformRescaled, NoiseSpec::Rademacher] {
            let a = ArchParams::new(0.2, 0.5).unwrap();
            let g = GarchParams::new(0.2, 0.5, 0.0).unwrap();
            let xa = gen_arch1(&a, 4096, 1234, noise).unwrap();
            let xg = gen_garch11(&g, 4096, 1234, noise).unwrap();
            assert_eq!(bits(&xa), bits(&xg), "noise {noise}");
        }
    }

    #[test]
    fn fbm_h05_has_uncorrelated_increments() {
        let p = FbmParams::new(0.5, 1.0).unwrap();
        let x = gen_fbm(&p, 1 << 14, 1.0, 21).unwrap();
        let v = x.increments(1, true).unwrap();
        let z = v.values();
        let prods: Vec<f64> = z.windows(2).map(|w| w[0] * w[1]).collect();
        let (corr, se) = mean_and_stderr(&prods);
        assert!(corr.abs() <= 3.0 * se, "lag-1 product mean {corr}, se {se}");
    }

    #[test]
    fn fbm_lag_one_autocovariance_h07_and_h03() {
        // (1/2)(2^{2H} - 2) = 0.3195... at H=0.7; negative at H=0.3
        let p = FbmParams::new(0.7, 1.0).unwrap();
        let ens = Model::Fbm(p).sample_ensemble(10_000, 34, 1.0, 33).unwrap();
        let t = 16usize;
        let prods: Vec<f64> = ens
            .members()
            .iter()
            .map(|m| {
                let v = m.values();
                (v[t] - v[t - 1]) * (v[t + 1] - v[t])
            })
            .collect();
        let (corr, _) = mean_and_stderr(&prods);
        assert_relative_eq!(corr, 0.5 * (2.0f64.powf(1.4) - 2.0), max_relative = 0.05);

        let p3 = FbmParams::new(0.3, 1.0).unwrap();
        let ens3 = Model::Fbm(p3).sample_ensemble(4000, 34, 1.0, 33).unwrap();
        let prods3: Vec<f64> = ens3
            .members()
            .iter()
            .map(|m| {
                let v = m.values();
                (v[t] - v[t - 1]) * (v[t + 1] - v[t])
            })
            .collect();
        assert!(mean(&prods3) < 0.0, "H=0.3 increments must be antipersistent");
    }

    #[test]
    fn fbm_covariance_matches_closed_form_at_probe_pairs() {
        let p = FbmParams::new(0.7, 1.0).unwrap();
        let ens = Model::Fbm(p).sample_ensemble(10_000, 33, 1.0, 17).unwrap();
        let two_h = 1.4f64;
        for &(s, t) in &[(1usize, 1usize), (4, 4), (8, 16), (16, 32), (32, 32)] {
            let prods: Vec<f64> = ens
                .members()
                .iter()
                .map(|m| m.values()[s] * m.values()[t])
                .collect();
            let measured = mean(&prods);
            let (sf, tf) = (s as f64, t as f64);
            let expected =
                0.5 * (sf.powf(two_h) + tf.powf(two_h) - (tf - sf).abs().powf(two_h));
            assert_relative_eq!(measured, expected, max_relative = 0.05);
        }
    }

    #[test]
    fn fbm_equals_dense_cholesky_oracle() {
        use nalgebra::DMatrix;
        let p = FbmParams::new(0.7, 1.5).unwrap();
        let m = 48usize;
        let gamma = fgn_autocovariance(&p, 1.0, m);
        let cov = DMatrix::from_fn(m, m, |i, j| gamma[i.abs_diff(j)]);
        let chol = cov.cholesky().expect("fgn covariance is positive definite");
        let l = chol.l();
        // same substream the generator uses for member 0
        let mut rng = member_rng(99, 0);
        let z: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut expected = vec![0.0; m];
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += l[(i, j)] * z[j];
            }
            expected[i] = acc;
        }
        let path = gen_fbm(&p, m + 1, 1.0, 99).unwrap();
        let fgn: Vec<f64> = path.values().windows(2).map(|w| w[1] - w[0]).collect();
        for (a, b) in fgn.iter().zip(&expected) {
            assert_relative_eq!(a, b, max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn fbm_step_cap_is_enforced() {
        let p = FbmParams::new(0.7, 1.0).unwrap();
        match gen_fbm(&p, FBM_DEFAULT_MAX_STEPS + 1, 1.0, 1) {
            Err(Error::Resource(msg)) => assert!(msg.contains("maximum"), "{msg}"),
            other => panic!("expected resource error, got {other:?}"),
        }
        assert!(gen_fbm_with_max(&p, 8, 1.0, 1, 8).is_ok());
        assert!(gen_fbm_with_max(&p, 9, 1.0, 1, 8).is_err());
    }

    #[test]
    fn scaled_wiener_variance_curve_and_independence() {
        let p = ScaledWienerParams::new(0.7, 1.0).unwrap();
        let ens = Model::ScaledWiener(p).sample_ensemble(10_000, 101, 1.0, 13).unwrap();
        let sq: Vec<f64> = ens.members().iter().map(|m| m.values()[100].powi(2)).collect();
        let (v, _) = mean_and_stderr(&sq);
        assert_relative_eq!(v, 100.0f64.powf(1.4), max_relative = 0.05);
        // adjacent increments around mid-path are uncorrelated
        let t = 50usize;
        let prods: Vec<f64> = ens
            .members()
            .iter()
            .map(|m| {
                let v = m.values();
                (v[t] - v[t - 1]) * (v[t + 1] - v[t])
            })
            .collect();
        let (corr, se) = mean_and_stderr(&prods);
        assert!(corr.abs() <= 3.0 * se, "increment product mean {corr}, se {se}");
        // H=0.5 reduces to the constant-rate martingale in law
        let flat = ScaledWienerParams::new(0.5, 2.0).unwrap();
        let y = gen_scaled_wiener(&flat, 50_001, 1.0, 4).unwrap();
        let var = sample_variance(y.increments(1, true).unwrap().values());
        assert_relative_eq!(var, 2.0, max_relative = 0.05);
    }

    #[test]
    fn ensemble_members_are_zero_mean() {
        let models = [
            Model::Wiener(WienerParams::new(1.0).unwrap()),
            Model::Arch1(ArchParams::new(0.2, 0.5).unwrap(), NoiseSpec::Gaussian),
            Model::Garch11(GarchParams::new(0.1, 0.2, 0.7).unwrap(), NoiseSpec::Gaussian),
            Model::Fbm(FbmParams::new(0.7, 1.0).unwrap()),
            Model::ScaledWiener(ScaledWienerParams::new(0.7, 1.0).unwrap()),
        ];
        for model in &models {
            let ens = model.sample_ensemble(3000, 33, 1.0, 101).unwrap();
            for &t in &[8usize, 16, 32] {
                let at_t: Vec<f64> = ens.members().iter().map(|m| m.values()[t]).collect();
                let (m, se) = mean_and_stderr(&at_t);
                assert!(
                    m.abs() <= 3.0 * se,
                    "{model} drifts at t={t}: mean {m}, se {se}"
                );
            }
        }
    }

    #[test]
    fn single_path_is_member_zero_and_pools_do_not_matter() {
        let model = Model::Garch11(
            GarchParams::new(0.1, 0.2, 0.7).unwrap(),
            NoiseSpec::Gaussian,
        );
        let ens = model.sample_ensemble(16, 200, 1.0, 77).unwrap();
        let single = model.sample_path(200, 1.0, 77).unwrap();
        assert_eq!(bits(&single), bits(&ens.members()[0]));

        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
            let pooled = pool.install(|| model.sample_ensemble(16, 200, 1.0, 77).unwrap());
            crate::exec::set_parallel(false);
            let seq = model.sample_ensemble(16, 200, 1.0, 77).unwrap();
            crate::exec::set_parallel(true);
            for i in 0..16 {
                assert_eq!(bits(&ens.members()[i]), bits(&pooled.members()[i]));
                assert_eq!(bits(&ens.members()[i]), bits(&seq.members()[i]));
            }
        }
    }

    #[test]
    fn model_step_discipline() {
        let arch = Model::Arch1(ArchParams::new(0.2, 0.5).unwrap(), NoiseSpec::Gaussian);
        assert!(arch.sample_path(100, 0.5, 1).is_err());
        assert!(arch.sample_path(100, 1.0, 1).is_ok());
        let wiener = Model::Wiener(WienerParams::new(1.0).unwrap());
        assert!(wiener.sample_path(100, 0.5, 1).is_ok());
        assert!(wiener.sample_path(100, 0.0, 1).is_err());
        assert!(wiener.sample_path(1, 1.0, 1).is_err());
    }

    #[test]
    fn model_descriptors_are_stable() {
        let m = Model::Arch1(ArchParams::new(0.2, 0.5).unwrap(), NoiseSpec::Gaussian);
        assert_eq!(m.to_string(), "arch1(alpha=0.2, omega=0.5, noise=gaussian)");
        assert_eq!(m.name(), "arch1");
        let g = Model::Garch11(GarchParams::new(0.1, 0.2, 0.7).unwrap(), NoiseSpec::Rademacher);
        assert_eq!(g.to_string(), "garch11(alpha=0.1, omega=0.2, zeta=0.7, noise=rademacher)");
        assert_eq!(
            "uniform-rescaled".parse::<NoiseSpec>().unwrap(),
            NoiseSpec::UniformRescaled
        );
        assert!("bogus".parse::<NoiseSpec>().is_err());
    }
}
