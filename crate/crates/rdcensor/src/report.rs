//! JSON and CSV renderings of analyses, Monte-Carlo summaries and plot data.
//!
//! Output is a pure function of the inputs: struct fields serialize in
//! declaration order and maps are ordered.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use rdcensor_core::bandwidth::BandwidthChoice;
use rdcensor_core::condexp::CovariateSet;
use rdcensor_core::estimate::FitPair;
use rdcensor_core::pipeline::{SeReport, Warning};
use rdcensor_core::rdplot::RdPlotData;
use rdcensor_core::simulation::{McSummary, StudyConfig};
use rdcensor_core::{Analysis, CondExpModel, Error, PipelineConfig};

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputWarning {
    CutoffOutsideRange { cutoff: f64, min: f64, max: f64 },
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ReportWarning {
    Input(InputWarning),
    Pipeline(Warning),
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapSummary {
    pub reps: usize,
    pub failed: usize,
    pub failures: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub status: &'static str,
    pub config: PipelineConfig,
    pub tau: f64,
    pub tau_y: f64,
    pub tau_z: Option<f64>,
    pub bandwidth: f64,
    pub cv: Option<BandwidthChoice>,
    pub se: SeReport,
    pub bootstrap: Option<BootstrapSummary>,
    pub censoring_rate: f64,
    pub truncation_point: f64,
    pub n: usize,
    pub n_left: usize,
    pub n_right: usize,
    pub n_effective_left: usize,
    pub n_effective_right: usize,
    pub fits: FitPair,
    pub working_model: Option<CondExpModel>,
    pub warnings: Vec<ReportWarning>,
}

impl EstimateReport {
    /// The report names the covariate set actually used, defaults included.
    pub fn new(mut config: PipelineConfig, a: Analysis, input_warnings: Vec<InputWarning>) -> Self {
        config.covariates.get_or_insert(CovariateSet::default_for(config.model));
        let mut warnings: Vec<ReportWarning> = input_warnings.into_iter().map(ReportWarning::Input).collect();
        warnings.extend(a.warnings.into_iter().map(ReportWarning::Pipeline));
        let est = a.estimate;
        Self {
            status: "ok",
            config,
            tau: est.tau,
            tau_y: est.tau_y,
            tau_z: est.tau_z,
            bandwidth: est.bandwidth,
            cv: a.bandwidth,
            se: a.se,
            bootstrap: a.bootstrap.map(|b| BootstrapSummary {
                reps: b.reps,
                failed: b.failed,
                failures: b.failures,
            }),
            censoring_rate: a.censoring_rate,
            truncation_point: a.omega,
            n: a.n,
            n_left: a.n_left,
            n_right: a.n_right,
            n_effective_left: est.y_fits.left.n_effective,
            n_effective_right: est.y_fits.right.n_effective,
            fits: est.y_fits,
            working_model: a.model,
            warnings,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorDetail {
    pub kind: &'static str,
    pub module: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub status: &'static str,
    pub error: ErrorDetail,
    /// Input problems found before the failure, often its cause.
    pub warnings: Vec<InputWarning>,
}

impl ErrorReport {
    pub fn new(e: &Error, warnings: Vec<InputWarning>) -> Self {
        Self {
            status: "error",
            warnings,
            error: ErrorDetail {
                kind: e.kind(),
                module: e.module(),
                message: e.to_string(),
            },
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize infallibly");
    s.push('\n');
    s
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub const SUMMARY_HEADER: [&str; 17] = [
    "method",
    "design",
    "n",
    "true_tau",
    "bias",
    "sd",
    "mean_se_nn",
    "mean_se_plugin",
    "mean_se_boot",
    "coverage_nn",
    "coverage_plugin",
    "coverage_boot_normal",
    "coverage_boot_empirical",
    "mean_bandwidth",
    "censor_rate",
    "n_reps",
    "n_failed",
];

pub fn write_summaries_csv<W: Write>(out: W, rows: &[McSummary]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in rows {
        w.write_record([
            s.method.clone(),
            s.design.name().to_owned(),
            s.n.to_string(),
            s.true_tau.to_string(),
            s.bias.to_string(),
            s.sd.to_string(),
            opt(s.mean_se_nn),
            opt(s.mean_se_plugin),
            opt(s.mean_se_boot),
            opt(s.coverage_nn),
            opt(s.coverage_plugin),
            opt(s.coverage_boot_normal),
            opt(s.coverage_boot_empirical),
            s.mean_bandwidth.to_string(),
            s.censor_rate.to_string(),
            s.n_reps.to_string(),
            s.n_failed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport<'a> {
    pub config: &'a StudyConfig,
    pub summaries: &'a [McSummary],
}

pub fn write_rdplot_csv<W: Write>(out: W, data: &RdPlotData) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["side", "lower", "upper", "center", "count", "mean"])?;
    for b in &data.bins {
        w.write_record([
            b.side.to_string(),
            b.lower.to_string(),
            b.upper.to_string(),
            b.center.to_string(),
            b.count.to_string(),
            opt(b.mean),
        ])?;
    }
    w.flush()?;
    Ok(())
}
