//! Command-line interface: `estimate`, `simulate` and `rdplot`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use rdcensor_core::condexp::CovariateSet;
use rdcensor_core::pipeline::{analyze, point_estimate};
use rdcensor_core::rdplot::{rdplot_data, DEFAULT_BINS_PER_SIDE};
use rdcensor_core::simulation::{generate, run_study, DgpConfig, Method, StudyConfig};
use rdcensor_core::{
    BandwidthMode, Design, Error, ModelKind, ObservedSample, PipelineConfig, SeScheme, TransformMethod,
};

use crate::io::{read_sample, write_sample, ColumnMapping, IngestError};
use crate::parallel::Rayon;
use crate::report::{
    to_json, write_rdplot_csv, write_summaries_csv, ErrorReport, EstimateReport, InputWarning, SimulationReport,
};

#[derive(Debug, Parser)]
#[command(
    name = "rdcensor",
    version,
    about = "Regression discontinuity with right-censored outcomes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the discontinuity in E(log T) from a CSV file.
    Estimate(EstimateArgs),
    /// Run a Monte-Carlo study on the built-in designs.
    Simulate(SimulateArgs),
    /// Export binned pseudo-response means for a discontinuity plot.
    Rdplot(RdplotArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "time")]
    pub time_col: String,
    #[arg(long, default_value = "status")]
    pub status_col: String,
    #[arg(long, default_value = "forcing")]
    pub forcing_col: String,
    /// Required for fuzzy designs.
    #[arg(long)]
    pub treatment_col: Option<String>,
}

impl DataArgs {
    fn mapping(&self) -> ColumnMapping {
        ColumnMapping {
            time: self.time_col.clone(),
            status: self.status_col.clone(),
            forcing: self.forcing_col.clone(),
            treatment: self.treatment_col.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    #[arg(long, default_value = "dr")]
    pub transform: TransformMethod,
    /// Working model for the doubly robust transform.
    #[arg(long, default_value = "cox")]
    pub model: ModelKind,
    /// Working-model covariates: `forcing`, `forcing-and-side` or
    /// `forcing-and-treatment`. Defaults to `forcing` for cox and
    /// `forcing-and-side` for the parametric models.
    #[arg(long)]
    pub covariates: Option<CovariateSet>,
    /// `auto` or a positive bandwidth.
    #[arg(long, default_value = "auto")]
    pub bandwidth: BandwidthMode,
    #[arg(long, default_value_t = 0.5)]
    pub xi: f64,
    #[arg(long, default_value_t = 25)]
    pub grid_size: usize,
    #[arg(long = "truncation", default_value_t = 0.95)]
    pub truncation_quantile: f64,
}

#[derive(Debug, Args)]
pub struct InferenceArgs {
    /// `all` or a comma-separated subset of nn, plugin, boot.
    #[arg(long, default_value = "nn,plugin")]
    pub se: SeScheme,
    #[arg(long, default_value_t = 50)]
    pub boot_reps: usize,
    #[arg(long, default_value_t = 3)]
    pub nn_k: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to one per core. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub cutoff: f64,
    #[arg(long, default_value = "sharp")]
    pub design: Design,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RdplotArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub cutoff: f64,
    #[arg(long, default_value = "sharp")]
    pub design: Design,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long, default_value_t = DEFAULT_BINS_PER_SIDE)]
    pub bins_per_side: usize,
    /// Writes `<output>.csv` and `<output>.json`; CSV to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "sharp")]
    pub design: Design,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    /// Comma-separated list of `ipcw` and `dr-<model>`; all methods by default.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    #[arg(long, default_value_t = 2.0)]
    pub beta1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta3: f64,
    /// Standard deviation of the log-time noise; design default when absent.
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Standard deviation of the treatment-uptake noise (fuzzy design).
    #[arg(long, default_value_t = 0.25)]
    pub kappa_sd: f64,
    #[arg(long, default_value_t = 50.0)]
    pub censor_upper: f64,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    /// Write one simulated sample as CSV to this path and exit.
    #[arg(long)]
    pub emit_sample: Option<PathBuf>,
    /// Writes `<output>.csv` and `<output>.json`; CSV to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("estimation error [{}]: {source}", source.module())]
    Estimation {
        source: Error,
        report_path: Option<PathBuf>,
    },
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Estimation { .. } | CliError::Output(_) => 4,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn classify(e: Error, report_path: Option<&Path>) -> CliError {
    match e {
        Error::InvalidArgument(_) => CliError::Config(e.to_string()),
        Error::EmptySample | Error::InvalidRecord { .. } => CliError::Data(e.to_string()),
        e => CliError::Estimation {
            source: e,
            report_path: report_path.map(Path::to_path_buf),
        },
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| CliError::Output(format!("stdout: {e}")))
        }
    }
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn executor(threads: Option<usize>) -> Result<Rayon, CliError> {
    if threads == Some(0) {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    Rayon::new(threads).map_err(|e| CliError::Config(e.to_string()))
}

fn pipeline_config(
    cutoff: f64,
    design: Design,
    m: &MethodArgs,
    inf: Option<&InferenceArgs>,
) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::new(cutoff, design);
    cfg.transform = m.transform;
    cfg.model = m.model;
    cfg.covariates = m.covariates;
    cfg.bandwidth = m.bandwidth;
    cfg.xi = m.xi;
    cfg.grid_size = m.grid_size;
    cfg.truncation_quantile = m.truncation_quantile;
    if let Some(inf) = inf {
        cfg.se = inf.se;
        cfg.boot_reps = inf.boot_reps;
        cfg.nn_k = inf.nn_k;
        cfg.level = inf.level;
        cfg.seed = inf.seed;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn load(data: &DataArgs, design: Design) -> Result<ObservedSample, CliError> {
    if design == Design::Fuzzy && data.treatment_col.is_none() {
        return Err(CliError::Config("fuzzy design requires --treatment-col".into()));
    }
    Ok(read_sample(&data.input, &data.mapping())?)
}

fn cutoff_warnings(sample: &ObservedSample, cutoff: f64) -> Vec<InputWarning> {
    let (min, max) = sample.forcing_range();
    if cutoff < min || cutoff > max {
        vec![InputWarning::CutoffOutsideRange { cutoff, min, max }]
    } else {
        Vec::new()
    }
}

/// On estimation failure the error report goes where the report would.
fn fail_with_report(e: Error, output: Option<&Path>, warnings: Vec<InputWarning>) -> CliError {
    let err = classify(e, output);
    if let CliError::Estimation { source, .. } = &err {
        let _ = write_text(output, &to_json(&ErrorReport::new(source, warnings)));
    }
    err
}

pub fn run_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let cfg = pipeline_config(args.cutoff, args.design, &args.method, Some(&args.inference))?;
    let exec = executor(args.inference.threads)?;
    let sample = load(&args.data, args.design)?;
    let warnings = cutoff_warnings(&sample, args.cutoff);
    let output = args.output.as_deref();
    let analysis = analyze(&sample, &cfg, &exec).map_err(|e| fail_with_report(e, output, warnings.clone()))?;
    write_text(output, &to_json(&EstimateReport::new(cfg, analysis, warnings)))
}

pub fn run_rdplot(args: &RdplotArgs) -> Result<(), CliError> {
    if args.bins_per_side == 0 {
        return Err(CliError::Config("--bins-per-side must be positive".into()));
    }
    let cfg = pipeline_config(args.cutoff, args.design, &args.method, None)?;
    let sample = load(&args.data, args.design)?;
    let json_path = args.output.as_deref().map(|p| with_extension(p, "json"));
    let warnings = cutoff_warnings(&sample, args.cutoff);
    let pe = point_estimate(&sample, &cfg, None).map_err(|e| fail_with_report(e, json_path.as_deref(), warnings))?;
    let data = rdplot_data(&pe.transformed, &pe.estimate, args.bins_per_side).map_err(|e| classify(e, None))?;
    let mut csv_buf = Vec::new();
    write_rdplot_csv(&mut csv_buf, &data).map_err(|e| CliError::Output(e.to_string()))?;
    let csv_text = String::from_utf8(csv_buf).expect("CSV output is UTF-8");
    match &args.output {
        Some(prefix) => {
            write_text(Some(&with_extension(prefix, "csv")), &csv_text)?;
            write_text(json_path.as_deref(), &to_json(&data))
        }
        None => write_text(None, &csv_text),
    }
}

pub fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut dgp = DgpConfig::for_design(args.design, args.n, args.inference.seed);
    dgp.beta = [args.beta1, args.beta2, args.beta3];
    if let Some(sd) = args.noise_sd {
        dgp.noise_sd = sd;
    }
    dgp.kappa_sd = args.kappa_sd;
    dgp.censor_upper = args.censor_upper;
    dgp.validate().map_err(|e| CliError::Config(e.to_string()))?;

    if let Some(path) = &args.emit_sample {
        let sample = generate(&dgp, &mut rdcensor_core::rng::stream(dgp.seed, 0)).map_err(|e| classify(e, None))?;
        return write_sample(path, &sample).map_err(|e| CliError::Output(e.to_string()));
    }

    let pipeline = pipeline_config(dgp.cutoff(), dgp.design, &args.method, Some(&args.inference))?;
    let methods = args.methods.clone().unwrap_or_else(Method::all);
    let study = StudyConfig {
        dgp,
        methods,
        n_reps: args.reps,
        pipeline,
    };
    let exec = executor(args.inference.threads)?;
    let result = run_study(&study, &exec).map_err(|e| classify(e, None))?;
    let mut csv_buf = Vec::new();
    write_summaries_csv(&mut csv_buf, &result.summaries).map_err(|e| CliError::Output(e.to_string()))?;
    let csv_text = String::from_utf8(csv_buf).expect("CSV output is UTF-8");
    match &args.output {
        Some(prefix) => {
            write_text(Some(&with_extension(prefix, "csv")), &csv_text)?;
            let report = SimulationReport {
                config: &study,
                summaries: &result.summaries,
            };
            write_text(Some(&with_extension(prefix, "json")), &to_json(&report))
        }
        None => write_text(None, &csv_text),
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Estimate(a) => run_estimate(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Rdplot(a) => run_rdplot(a),
    }
}
