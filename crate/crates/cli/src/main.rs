//! Command-line driver: simulate generator paths, run ensemble diagnostics,
//! fit conditional-variance models, and produce falsification reports.
//!
//! Exit codes: 0 success; 1 usage or invalid parameters; 2 data problems
//! (format, domain, size); 3 numerical failures (singular systems,
//! non-finite arithmetic, optimizer breakdown). Diagnostics go to standard
//! error; machine output goes to files or standard output.

mod io;

use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use voldiag_core::error::Error;
use voldiag_core::estimators::{
    conditional_msf, increment_autocorr_identity, increment_density, linearity_test,
    msf, stationarity_test, variance_curve, BinSpec, Conditioning,
    DEFAULT_LINEARITY_TOLERANCE,
};
use voldiag_core::falsify::{evenly_spaced, falsification_report, geometric_probes};
use voldiag_core::fit::{fit_arch1, fit_garch11, OptimizerConfig};
use voldiag_core::generators::{
    ArchParams, FbmParams, GarchParams, Model, NoiseSpec, ScaledWienerParams,
    WienerParams,
};
use voldiag_core::report::{
    to_canonical_bytes, ConfigEcho, DecisionsMetadata, DiagnosticsDocument,
    DiagnosticsEstimates, FalsifyDocument, FitDocument, REPORT_SCHEMA_VERSION,
};
use voldiag_core::series::LevelSeries;
use voldiag_core::Result;

#[derive(Parser)]
#[command(
    name = "voldiag",
    version,
    about = "Increment diagnostics for price and level series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic level series and write it as time,level CSV.
    Simulate(SimulateArgs),
    /// Estimate increment statistics on windowed ensembles from one series.
    Diagnose(DiagnoseArgs),
    /// Fit ARCH(1) and GARCH(1,1) to per-lag increments.
    Fit(FitArgs),
    /// Run the full self-consistency pipeline and emit a verdict report.
    Falsify(FalsifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// wiener | arch1 | garch11 | fbm | scaled-wiener
    #[arg(long)]
    model: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    /// Variance rate (wiener) or variance scale (fbm, scaled-wiener).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    hurst: Option<f64>,
    /// Innovation law for arch1/garch11: gaussian | uniform-rescaled |
    /// rademacher. Ignored by the other models.
    #[arg(long, default_value = "gaussian")]
    noise: String,
    /// Number of levels in the path (one fewer increments).
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    input: PathBuf,
    /// Window length in levels for the ensemble split.
    #[arg(long)]
    window: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 4, 8])]
    lags: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    significance: f64,
    /// Override the step inferred from the first two timestamps.
    #[arg(long)]
    step: Option<f64>,
    /// Report path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for figure-ready CSV files.
    #[arg(long)]
    plots: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// arch1 | garch11; both when omitted.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 4, 8])]
    lags: Vec<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FalsifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    window: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 4, 8])]
    lags: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    significance: f64,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plots: Option<PathBuf>,
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter { .. } | Error::Usage(_) | Error::Resource(_) => 1,
        Error::Format(_) | Error::Domain(_) | Error::Size(_) => 2,
        Error::Singular(_) | Error::Numerical(_) | Error::Optimization { .. } => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code: u8 = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Diagnose(args) => diagnose(args),
        Command::Fit(args) => fit(args),
        Command::Falsify(args) => falsify(args),
    }
}

fn require(flag: &'static str, value: Option<f64>, model: &str) -> Result<f64> {
    value.ok_or_else(|| Error::Usage(format!("model {model} requires --{flag}")))
}

fn build_model(args: &SimulateArgs) -> Result<Model> {
    let noise: NoiseSpec = args.noise.parse()?;
    match args.model.as_str() {
        "wiener" => Ok(Model::Wiener(WienerParams::new(args.sigma.unwrap_or(1.0))?)),
        "arch1" => Ok(Model::Arch1(
            ArchParams::new(
                require("alpha", args.alpha, "arch1")?,
                require("omega", args.omega, "arch1")?,
            )?,
            noise,
        )),
        "garch11" => Ok(Model::Garch11(
            GarchParams::new(
                require("alpha", args.alpha, "garch11")?,
                require("omega", args.omega, "garch11")?,
                require("zeta", args.zeta, "garch11")?,
            )?,
            noise,
        )),
        "fbm" => Ok(Model::Fbm(FbmParams::new(
            require("hurst", args.hurst, "fbm")?,
            args.sigma.unwrap_or(1.0),
        )?)),
        "scaled-wiener" => Ok(Model::ScaledWiener(ScaledWienerParams::new(
            require("hurst", args.hurst, "scaled-wiener")?,
            args.sigma.unwrap_or(1.0),
        )?)),
        other => Err(Error::Usage(format!(
            "unknown model {other:?}; expected wiener, arch1, garch11, fbm, \
             or scaled-wiener"
        ))),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let model = build_model(&args)?;
    let series = model.sample_path(args.n, args.step, args.seed)?;
    io::write_levels_csv(&args.out, &series)?;
    eprintln!(
        "wrote {} levels from {model} (seed {}) to {}",
        series.len(),
        args.seed,
        args.out.display()
    );
    Ok(())
}

fn emit_document(out: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| {
            Error::Format(format!("cannot write {}: {e}", path.display()))
        }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::Format(format!("cannot write to stdout: {e}"))),
    }
}

fn detrended(series: LevelSeries) -> LevelSeries {
    if series.is_detrended() {
        series
    } else {
        series.detrend()
    }
}

fn validate_lags(lags: &[usize], window: usize) -> Result<Vec<usize>> {
    let mut lags = lags.to_vec();
    lags.sort_unstable();
    lags.dedup();
    if lags.is_empty() || lags[0] == 0 {
        return Err(Error::Usage("lags must be positive integers".into()));
    }
    for &lag in &lags {
        if 2 * lag > window.saturating_sub(1) {
            return Err(Error::Size(format!(
                "lag {lag} needs a window of at least {} levels, got {window}",
                2 * lag + 1
            )));
        }
    }
    Ok(lags)
}

fn diagnose(args: DiagnoseArgs) -> Result<()> {
    let loaded = io::read_input(&args.input, args.step)?;
    let lags = validate_lags(&args.lags, args.window)?;
    let series = detrended(loaded.series);
    let split = series.ensemble_split(args.window)?;
    let ens = &split.ensemble;
    let w = args.window;

    let mut est = DiagnosticsEstimates::default();
    let var_probes = geometric_probes(2, w - 1, 8);
    if var_probes.len() >= 3 {
        let curve = variance_curve(ens, &var_probes)?;
        est.linearity = Some(linearity_test(&curve, DEFAULT_LINEARITY_TOLERANCE)?);
        est.variance_curve = Some(curve);
    }
    for &lag in &lags {
        let t_mid = (w / 2).clamp(lag, w - 1 - lag);
        est.msf.push(msf(ens, t_mid, lag)?);
        for &t in &evenly_spaced(lag, w - 1 - lag, 4) {
            est.autocorrelations.push(increment_autocorr_identity(ens, t, lag)?);
        }
        est.stationarity.insert(
            lag,
            stationarity_test(ens, lag, &evenly_spaced(lag, w - 1, 4), args.significance)?,
        );
        est.densities.push(increment_density(ens, t_mid, lag, &BinSpec::default())?);
        match conditional_msf(
            ens,
            t_mid,
            lag,
            Conditioning::PreviousSquaredIncrement,
            &BinSpec::default(),
        ) {
            Ok(table) => est.conditional_msf.push(table),
            Err(Error::Size(_)) => {}
            Err(e) => return Err(e),
        }
    }

    if let Some(dir) = &args.plots {
        let mut files = Vec::new();
        if let Some(curve) = &est.variance_curve {
            files.push(io::PlotFile {
                name: "variance_curve".into(),
                description: "level variance against time".into(),
                columns: vec!["t_steps", "variance", "stderr"],
                rows: curve
                    .times
                    .iter()
                    .zip(curve.variances.iter().zip(&curve.stderrs))
                    .map(|(&t, (&v, &se))| vec![t, v, se])
                    .collect(),
            });
        }
        files.push(io::PlotFile {
            name: "msf_vs_lag".into(),
            description: "mean squared increment against lag".into(),
            columns: vec!["lag_steps", "t_steps", "msf", "stderr"],
            rows: est
                .msf
                .iter()
                .map(|m| vec![m.lag_steps as f64, m.t as f64, m.value, m.stderr])
                .collect(),
        });
        files.push(io::PlotFile {
            name: "autocorr_vs_t".into(),
            description: "adjacent-increment autocorrelation against time".into(),
            columns: vec!["lag_steps", "t_steps", "autocorr", "stderr"],
            rows: est
                .autocorrelations
                .iter()
                .map(|a| vec![a.lag_steps as f64, a.t as f64, a.value, a.stderr])
                .collect(),
        });
        for h in &est.densities {
            let mut rows = Vec::with_capacity(h.masses.len());
            for (b, &mass) in h.masses.iter().enumerate() {
                rows.push(vec![h.bin_edges[b], h.bin_edges[b + 1], mass]);
            }
            files.push(io::PlotFile {
                name: format!("density_lag{}", h.lag_steps),
                description: format!(
                    "increment histogram at t={} over lag {}",
                    h.t, h.lag_steps
                ),
                columns: vec!["bin_lo", "bin_hi", "mass"],
                rows,
            });
        }
        for table in &est.conditional_msf {
            files.push(io::PlotFile {
                name: format!("conditional_msf_lag{}", table.lag_steps),
                description: format!(
                    "mean squared forward increment given the previous squared \
                     increment at t={}",
                    table.t
                ),
                columns: vec!["conditioning_mean", "msf", "stderr", "count"],
                rows: table
                    .reported()
                    .map(|(c, v, se, n)| vec![c, v, se, n as f64])
                    .collect(),
            });
        }
        io::emit_plot_files(dir, &files)?;
    }

    let doc = DiagnosticsDocument {
        schema_version: REPORT_SCHEMA_VERSION,
        input: loaded.descriptor,
        config: ConfigEcho {
            command: "diagnose".into(),
            lags,
            window_steps: Some(args.window),
            significance: Some(args.significance),
            seed: None,
            step: Some(series.step()),
        },
        estimates: est,
        decisions_metadata: DecisionsMetadata::standard(true),
    };
    emit_document(args.out.as_ref(), &to_canonical_bytes(&doc)?)
}

fn fit(args: FitArgs) -> Result<()> {
    let loaded = io::read_input(&args.input, args.step)?;
    let series = detrended(loaded.series);
    let mut lags = args.lags.clone();
    lags.sort_unstable();
    lags.dedup();
    if lags.is_empty() || lags[0] == 0 {
        return Err(Error::Usage("lags must be positive integers".into()));
    }
    let (want_arch, want_garch) = match args.model.as_deref() {
        None => (true, true),
        Some("arch1") => (true, false),
        Some("garch11") => (false, true),
        Some(other) => {
            return Err(Error::Usage(format!(
                "unknown model {other:?}; expected arch1 or garch11"
            )))
        }
    };

    let mut arch1_fits = BTreeMap::new();
    let mut garch11_fits = BTreeMap::new();
    for &lag in &lags {
        let incs = series.increments(lag, false)?;
        if want_arch {
            arch1_fits.insert(lag, fit_arch1(&incs)?);
        }
        if want_garch {
            garch11_fits.insert(lag, fit_garch11(&incs, &OptimizerConfig::default())?);
        }
    }

    let doc = FitDocument {
        schema_version: REPORT_SCHEMA_VERSION,
        input: loaded.descriptor,
        config: ConfigEcho {
            command: "fit".into(),
            lags,
            window_steps: None,
            significance: None,
            seed: None,
            step: Some(series.step()),
        },
        arch1_fits,
        garch11_fits,
        decisions_metadata: DecisionsMetadata::standard(false),
    };
    emit_document(args.out.as_ref(), &to_canonical_bytes(&doc)?)
}

fn falsify(args: FalsifyArgs) -> Result<()> {
    let loaded = io::read_input(&args.input, args.step)?;
    let report =
        falsification_report(&loaded.series, args.window, &args.lags, args.significance)?;

    if let Some(dir) = &args.plots {
        let mut files = Vec::new();
        files.push(io::PlotFile {
            name: "variance_curve".into(),
            description: "level variance against time".into(),
            columns: vec!["t_steps", "variance", "stderr"],
            rows: report
                .variance_curve
                .times
                .iter()
                .zip(report.variance_curve.variances.iter().zip(&report.variance_curve.stderrs))
                .map(|(&t, (&v, &se))| vec![t, v, se])
                .collect(),
        });
        files.push(io::PlotFile {
            name: "msf_profile".into(),
            description: "fitted unconditional mean squared increment against lag".into(),
            columns: vec!["lag_steps", "fixed_point"],
            rows: report
                .msf_profile
                .iter()
                .map(|(&lag, &m)| vec![lag as f64, m])
                .collect(),
        });
        files.push(io::PlotFile {
            name: "autocorr_vs_t".into(),
            description: "adjacent-increment autocorrelation against time".into(),
            columns: vec!["lag_steps", "t_steps", "autocorr", "stderr"],
            rows: report
                .autocorrelations
                .values()
                .flatten()
                .map(|a| vec![a.lag_steps as f64, a.t as f64, a.value, a.stderr])
                .collect(),
        });
        io::emit_plot_files(dir, &files)?;
    }

    let config = ConfigEcho {
        command: "falsify".into(),
        lags: report.lags.clone(),
        window_steps: Some(args.window),
        significance: Some(args.significance),
        seed: None,
        step: Some(loaded.series.step()),
    };
    let doc = FalsifyDocument::new(loaded.descriptor, config, report);
    emit_document(args.out.as_ref(), &to_canonical_bytes(&doc)?)
}
