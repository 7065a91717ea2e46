//! Output files and their run manifests.
//!
//! Curve CSV has the fixed header [`CSV_HEADER`] and six-decimal values.
//! JSON outputs carry the manifest inline. The wall-clock duration would
//! make reruns differ, so it lives only in a sidecar `<out>.manifest.json`
//! written next to every output file.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use qracsec_core::attack::ObservedStats;
use qracsec_core::bounds::{CurvePoint, Source};
use qracsec_core::sim::{Consistency, Deviation, SimReport};
use serde::Serialize;

pub const CSV_HEADER: &str = "eta_avg,pe_max,source,converged,restarts_used";
pub const CURVE_SCHEMA: &str = "qracsec.curve/1";
pub const SIM_SCHEMA: &str = "qracsec.simulation/1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Arguments that reproduce the run, fully resolved.
    pub invocation: Vec<String>,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str, invocation: Vec<String>, parameters: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            invocation,
            parameters,
            seed,
            duration_seconds: None,
        }
    }

    pub fn with_duration(&self, seconds: f64) -> Self {
        RunManifest {
            duration_seconds: Some(seconds),
            ..self.clone()
        }
    }
}

/// Six decimals. Rust rounds the exact binary value, so ties are
/// practically absent and resolved to even when they occur.
pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn source_name(s: Source) -> &'static str {
    match s {
        Source::Analytic => "analytic",
        Source::Optimized => "optimized",
    }
}

#[derive(Serialize)]
struct CurveRecord<'a> {
    eta_avg: f64,
    pe_max: f64,
    source: &'static str,
    converged: bool,
    restarts_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Diagnostics<'a>>,
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    best_restart: usize,
    best_objective: f64,
    evaluations: usize,
    p_b: f64,
    p_e: f64,
    params: &'a [f64],
}

fn record(p: &CurvePoint) -> CurveRecord<'_> {
    CurveRecord {
        eta_avg: p.eta_avg,
        pe_max: p.pe_max,
        source: source_name(p.source),
        converged: p.converged(),
        restarts_used: p.optimizer.as_ref().map_or(0, |m| m.restarts_used),
        diagnostics: p.optimizer.as_ref().map(|m| Diagnostics {
            best_restart: m.best_restart,
            best_objective: m.best_objective,
            evaluations: m.evaluations,
            p_b: m.stats.p_b,
            p_e: m.stats.p_e,
            params: &m.params,
        }),
    }
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::with_capacity(40 * (points.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in points {
        let r = record(p);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt6(r.eta_avg),
            fmt6(r.pe_max),
            r.source,
            r.converged,
            r.restarts_used
        );
    }
    out
}

#[derive(Serialize)]
struct CurveDocument<'a> {
    schema: &'static str,
    manifest: &'a RunManifest,
    points: Vec<CurveRecord<'a>>,
}

pub fn curve_json(points: &[CurvePoint], manifest: &RunManifest) -> String {
    let doc = CurveDocument {
        schema: CURVE_SCHEMA,
        manifest,
        points: points.iter().map(record).collect(),
    };
    to_json(&doc)
}

#[derive(Serialize)]
struct StatsJson {
    p_b: f64,
    p_e: f64,
    eta_avg: f64,
}

impl From<&ObservedStats> for StatsJson {
    fn from(s: &ObservedStats) -> Self {
        StatsJson {
            p_b: s.p_b,
            p_e: s.p_e,
            eta_avg: s.eta_avg,
        }
    }
}

#[derive(Serialize)]
struct DeviationJson {
    empirical: f64,
    predicted: f64,
    delta: f64,
    sigma: f64,
    /// `null` when σ = 0 and the values differ.
    z: Option<f64>,
    pass: bool,
}

impl From<&Deviation> for DeviationJson {
    fn from(d: &Deviation) -> Self {
        DeviationJson {
            empirical: d.empirical,
            predicted: d.predicted,
            delta: d.empirical - d.predicted,
            sigma: d.sigma,
            z: d.z.is_finite().then_some(d.z),
            pass: d.pass,
        }
    }
}

#[derive(Serialize)]
struct ReportJson {
    emitted_rounds: u64,
    clicked_rounds: u64,
    empirical: StatsJson,
    standard_errors: StatsJson,
    sifted_key_agreement: f64,
    eve_key_agreement: Option<f64>,
    matched_setting_fraction: Option<f64>,
}

#[derive(Serialize)]
struct ConsistencyJson {
    p_b: DeviationJson,
    p_e: Option<DeviationJson>,
    eta_avg: DeviationJson,
    chi_square: Option<f64>,
    degrees_of_freedom: usize,
    pass: bool,
}

#[derive(Serialize)]
struct SimDocument<'a> {
    schema: &'static str,
    manifest: &'a RunManifest,
    attacked: bool,
    report: ReportJson,
    predicted: StatsJson,
    consistency: ConsistencyJson,
}

pub fn simulation_json(
    report: &SimReport,
    predicted: &ObservedStats,
    check: &Consistency,
    manifest: &RunManifest,
) -> String {
    let doc = SimDocument {
        schema: SIM_SCHEMA,
        manifest,
        attacked: report.attacked,
        report: ReportJson {
            emitted_rounds: report.emitted_rounds,
            clicked_rounds: report.clicked_rounds,
            empirical: (&report.empirical).into(),
            standard_errors: StatsJson {
                p_b: report.standard_errors.p_b,
                p_e: report.standard_errors.p_e,
                eta_avg: report.standard_errors.eta_avg,
            },
            sifted_key_agreement: report.sifted_key_agreement,
            eve_key_agreement: report.eve_key_agreement,
            matched_setting_fraction: report.matched_setting_fraction,
        },
        predicted: predicted.into(),
        consistency: ConsistencyJson {
            p_b: (&check.p_b).into(),
            p_e: check.p_e.as_ref().map(Into::into),
            eta_avg: (&check.eta_avg).into(),
            chi_square: check.chi_square.is_finite().then_some(check.chi_square),
            degrees_of_freedom: check.degrees_of_freedom,
            pass: check.pass,
        },
    };
    to_json(&doc)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output documents always serialize");
    s.push('\n');
    s
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `contents` to `out` and the full manifest next to it.
pub fn write_with_manifest(out: &Path, contents: &str, manifest: &RunManifest) -> io::Result<()> {
    std::fs::write(out, contents)?;
    std::fs::write(sidecar_path(out), to_json(manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qracsec_core::bounds::{analytic_curve, AttackKind, CurveSpec, Tamper};

    #[test]
    fn csv_layout() {
        let spec = CurveSpec::uniform(2, AttackKind::InterceptResend, Tamper::FixedStates, 3).unwrap();
        let csv = curve_csv(&analytic_curve(&spec).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0.500000,0.853553,analytic,true,0");
        assert_eq!(lines[3], "1.000000,0.750000,analytic,true,0");
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn manifest_duration_only_in_sidecar() {
        let m = RunManifest::new("curve", vec!["curve".into()], serde_json::json!({}), Some(1));
        let spec = CurveSpec::uniform(2, AttackKind::InterceptResend, Tamper::FixedStates, 2).unwrap();
        let doc = curve_json(&analytic_curve(&spec).unwrap(), &m);
        assert!(!doc.contains("duration_seconds"));
        assert!(to_json(&m.with_duration(1.5)).contains("duration_seconds"));
        assert_eq!(
            sidecar_path(Path::new("a/b.csv")),
            PathBuf::from("a/b.csv.manifest.json")
        );
    }
}
