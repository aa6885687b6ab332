//! Versioned report documents with byte-stable serialization.
//!
//! Reports are JSON with a fixed key order (struct declaration order, maps
//! keyed by integers in ascending order) and every float printed as
//! `{:.16e}` (17 significant digits, enough to round-trip any f64). Two runs
//! that compute the same numbers therefore produce byte-identical files.

use crate::error::{Error, Result};
use crate::estimators::{
    AutocorrEstimate, ConditionalMsfTable, DensityHistogram, LinearityReport,
    MsfEstimate, StationarityReport, VarianceCurve,
};
use crate::falsify::{
    ConsistencyVerdict, FalsificationReport, MemoryProbe, MemoryVerdict,
    PropertyVerdict, WhiteNoiseFinding,
};
use crate::fit::FitResult;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use std::collections::BTreeMap;
use std::io;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Where the analyzed series came from: a generator descriptor or a file
/// digest, plus its size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDescriptor {
    /// Generator descriptor (e.g. from `Model::to_string`) or file path.
    pub source: String,
    /// SHA-256 of the input file, or the seed string for generated data.
    pub digest: String,
    /// Level count of the analyzed series.
    pub rows: usize,
}

/// Echo of the run parameters that shaped the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub command: String,
    pub lags: Vec<usize>,
    pub window_steps: Option<usize>,
    pub significance: Option<f64>,
    pub seed: Option<u64>,
    pub step: Option<f64>,
}

/// Fixed methodological caveats carried by every document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionsMetadata {
    pub split_windows_assumed_independent: bool,
    pub notes: Vec<String>,
}

impl DecisionsMetadata {
    pub fn standard(split: bool) -> Self {
        let mut notes = vec![
            "standard errors are cross-member sample standard deviations".to_string(),
            "garch quasi-likelihood assumes gaussian innovations".to_string(),
        ];
        if split {
            notes.push(
                "ensemble members are windows of one series; independence is assumed, \
                 not guaranteed"
                    .to_string(),
            );
        }
        notes.push(
            "memory diagnostics weaken as the sampling interval grows; prefer finely \
             sampled input"
                .to_string(),
        );
        DecisionsMetadata { split_windows_assumed_independent: split, notes }
    }
}

/// Estimator outputs gathered by the `diagnose` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DiagnosticsEstimates {
    pub variance_curve: Option<VarianceCurve>,
    pub linearity: Option<LinearityReport>,
    pub msf: Vec<MsfEstimate>,
    pub autocorrelations: Vec<AutocorrEstimate>,
    pub stationarity: BTreeMap<usize, StationarityReport>,
    pub densities: Vec<DensityHistogram>,
    pub conditional_msf: Vec<ConditionalMsfTable>,
}

/// Envelope for estimator-level diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsDocument {
    pub schema_version: u32,
    pub input: InputDescriptor,
    pub config: ConfigEcho,
    pub estimates: DiagnosticsEstimates,
    pub decisions_metadata: DecisionsMetadata,
}

/// Envelope for fit results, keyed by lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub schema_version: u32,
    pub input: InputDescriptor,
    pub config: ConfigEcho,
    pub arch1_fits: BTreeMap<usize, FitResult>,
    pub garch11_fits: BTreeMap<usize, FitResult>,
    pub decisions_metadata: DecisionsMetadata,
}

/// Verdict block of the falsification document: per-property outcomes plus
/// the narrative explaining how they co-occurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictBlock {
    pub increment_stationarity: PropertyVerdict,
    pub uncorrelated_increments: PropertyVerdict,
    pub variance_linearity: PropertyVerdict,
    pub conditional_memory: MemoryVerdict,
    pub consistency: ConsistencyVerdict,
    pub white_noise_finding: WhiteNoiseFinding,
    pub narrative: String,
}

/// Everything the pipeline measured. Window, lags, and significance are
/// echoed under `config`, not here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsifyEstimates {
    pub member_count: usize,
    pub discarded_steps: usize,
    pub msf_profile: BTreeMap<usize, f64>,
    pub stationarity: BTreeMap<usize, StationarityReport>,
    pub autocorrelations: BTreeMap<usize, Vec<AutocorrEstimate>>,
    pub variance_curve: VarianceCurve,
    pub linearity: LinearityReport,
    pub memory: BTreeMap<usize, MemoryProbe>,
    pub arch_fits: BTreeMap<usize, FitResult>,
}

/// Envelope for the falsification pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsifyDocument {
    pub schema_version: u32,
    pub input: InputDescriptor,
    pub config: ConfigEcho,
    pub verdicts: VerdictBlock,
    pub estimates: FalsifyEstimates,
    pub decisions_metadata: DecisionsMetadata,
}

impl FalsifyDocument {
    pub fn new(input: InputDescriptor, config: ConfigEcho, report: FalsificationReport) -> Self {
        let FalsificationReport {
            window_steps: _,
            lags: _,
            significance: _,
            member_count,
            discarded_steps,
            verdicts,
            msf_profile,
            stationarity,
            autocorrelations,
            variance_curve,
            linearity,
            memory,
            arch_fits,
            narrative,
        } = report;
        FalsifyDocument {
            schema_version: REPORT_SCHEMA_VERSION,
            input,
            config,
            verdicts: VerdictBlock {
                increment_stationarity: verdicts.increment_stationarity,
                uncorrelated_increments: verdicts.uncorrelated_increments,
                variance_linearity: verdicts.variance_linearity,
                conditional_memory: verdicts.conditional_memory,
                consistency: verdicts.consistency,
                white_noise_finding: verdicts.white_noise_finding,
                narrative,
            },
            estimates: FalsifyEstimates {
                member_count,
                discarded_steps,
                msf_profile,
                stationarity,
                autocorrelations,
                variance_curve,
                linearity,
                memory,
                arch_fits,
            },
            decisions_metadata: DecisionsMetadata::standard(true),
        }
    }
}

/// JSON formatter that renders every finite float as `{:.16e}` (17
/// significant digits, correctly rounded, so parsing recovers the exact
/// f64). Non-finite floats never reach this formatter: the serializer maps
/// them to null upstream, and document builders only produce finite values.
struct FixedFloatFormatter;

impl Formatter for FixedFloatFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes any report document to its canonical byte form.
pub fn to_canonical_bytes<T: Serialize>(doc: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloatFormatter);
    doc.serialize(&mut ser)
        .map_err(|e| Error::Format(format!("report serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Parses a document previously written by [`to_canonical_bytes`].
pub fn from_bytes<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes)
        .map_err(|e| Error::Format(format!("report parse failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec;
    use crate::falsify::falsification_report;
    use crate::generators::{Model, WienerParams};

    fn sample_document() -> FalsifyDocument {
        let series = Model::Wiener(WienerParams::new(1.0).unwrap())
            .sample_path(20_000, 1.0, 3)
            .unwrap();
        let report = falsification_report(&series, 100, &[1, 2], 0.01).unwrap();
        FalsifyDocument::new(
            InputDescriptor {
                source: "wiener(variance_rate=1)".into(),
                digest: "seed:3".into(),
                rows: series.len(),
            },
            ConfigEcho {
                command: "falsify".into(),
                lags: vec![1, 2],
                window_steps: Some(100),
                significance: Some(0.01),
                seed: Some(3),
                step: Some(1.0),
            },
            report,
        )
    }

    #[test]
    fn round_trip_preserves_document() {
        let doc = sample_document();
        let bytes = to_canonical_bytes(&doc).unwrap();
        let parsed: FalsifyDocument = from_bytes(&bytes).unwrap();
        assert_eq!(parsed, doc);
        let again = to_canonical_bytes(&parsed).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn serialization_is_byte_identical_across_runs_and_modes() {
        let a = to_canonical_bytes(&sample_document()).unwrap();
        exec::set_parallel(false);
        let b = to_canonical_bytes(&sample_document()).unwrap();
        exec::set_parallel(true);
        let c = to_canonical_bytes(&sample_document()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn schema_version_and_key_order_are_present() {
        let bytes = to_canonical_bytes(&sample_document()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("{\"schema_version\":1,\"input\":"));
        assert!(text.contains("\"config\":"));
        assert!(text.contains("\"verdicts\":{\"increment_stationarity\":"));
        assert!(text.contains("\"estimates\":{\"member_count\":"));
        assert!(text.contains("\"decisions_metadata\":"));
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn floats_use_fixed_scientific_form() {
        #[derive(Serialize)]
        struct Probe {
            x: f64,
            y: f64,
        }
        let bytes = to_canonical_bytes(&Probe { x: 0.1, y: -3.0 }).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text, "{\"x\":1.0000000000000001e-1,\"y\":-3.0000000000000000e0}\n");
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["x"].as_f64().unwrap(), 0.1);
        assert_eq!(parsed["y"].as_f64().unwrap(), -3.0);
    }

    #[test]
    fn non_finite_floats_become_null() {
        #[derive(Serialize)]
        struct Probe {
            x: f64,
        }
        let bytes = to_canonical_bytes(&Probe { x: f64::NAN }).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "{\"x\":null}\n");
    }
}
