//! Data-generating processes for the sharp and fuzzy designs, and a
//! Monte-Carlo study runner.
//!
//! Sharp: `W ~ U(0,1)`, `Z = 1{W >= 0.5}`,
//! `T = exp(b1 + b2 W + b3 Z + e)`, `e ~ N(0, noise_sd^2)`.
//! Fuzzy: `W ~ U(-1,1)`, `V = 1{W >= 0}`, `k ~ N(0, kappa_sd^2)`,
//! `Z = 1{-0.5 + V + W + k > 0}`, `T = exp(b1 + b2 W + b3 Z + e)`.
//! Both: `C ~ U(0, censor_upper)` independently, observed `(min(T,C), T<=C)`.
//!
//! The second normal parameter is read as a standard deviation: defaults are
//! `noise_sd = 0.5` (sharp), `noise_sd = 0.25` and `kappa_sd = 0.25` (fuzzy).
//! With `kappa_sd = 0.25` the treatment jump at 0 is `Phi(2) - Phi(-2)`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distr::OpenClosed01;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::condexp::ModelKind;
use crate::data::{ObservedRecord, ObservedSample};
use crate::error::{Error, Result};
use crate::estimate::Design;
use crate::exec::{Executor, Sequential};
use crate::numeric::{mean, sample_sd};
use crate::pipeline::{analyze, PipelineConfig};
use crate::rng::stream;
use crate::transform::TransformMethod;

/// Largest tolerated fraction of failed replicates per method.
const MAX_SIM_FAILURE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DgpConfig {
    pub design: Design,
    pub n: usize,
    pub beta: [f64; 3],
    pub noise_sd: f64,
    /// Fuzzy design only.
    pub kappa_sd: f64,
    pub censor_upper: f64,
    pub seed: u64,
}

impl DgpConfig {
    pub fn sharp(n: usize, seed: u64) -> Self {
        Self {
            design: Design::Sharp,
            n,
            beta: [2.0, 1.0, 1.0],
            noise_sd: 0.5,
            kappa_sd: 0.25,
            censor_upper: 50.0,
            seed,
        }
    }

    pub fn fuzzy(n: usize, seed: u64) -> Self {
        Self {
            design: Design::Fuzzy,
            noise_sd: 0.25,
            ..Self::sharp(n, seed)
        }
    }

    pub fn for_design(design: Design, n: usize, seed: u64) -> Self {
        match design {
            Design::Sharp => Self::sharp(n, seed),
            Design::Fuzzy => Self::fuzzy(n, seed),
        }
    }

    pub fn cutoff(&self) -> f64 {
        match self.design {
            Design::Sharp => 0.5,
            Design::Fuzzy => 0.0,
        }
    }

    /// Effect of treatment on `E(log T)`, the target of both estimators.
    pub fn true_tau(&self) -> f64 {
        self.beta[2]
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidArgument("simulated sample size must be at least 10"));
        }
        if !(self.censor_upper > 0.0 && self.censor_upper.is_finite()) {
            return Err(Error::InvalidArgument("censoring upper bound must be positive"));
        }
        if !(self.noise_sd >= 0.0 && self.kappa_sd >= 0.0) {
            return Err(Error::InvalidArgument("noise scales must be nonnegative"));
        }
        if !self.beta.iter().all(|b| b.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite"));
        }
        Ok(())
    }
}

fn observe<R: Rng + ?Sized>(rng: &mut R, log_t: f64, forcing: f64, treated: bool, upper: f64) -> ObservedRecord {
    let t = libm::exp(log_t);
    let u: f64 = rng.sample(OpenClosed01);
    let c = upper * u;
    ObservedRecord::new(t.min(c), t <= c, forcing, treated)
}

/// Draws a sample from the design in `cfg` using `rng`; `cfg.seed` is not
/// consulted.
pub fn generate<R: Rng + ?Sized>(cfg: &DgpConfig, rng: &mut R) -> Result<ObservedSample> {
    cfg.validate()?;
    let [b1, b2, b3] = cfg.beta;
    let mut records = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let rec = match cfg.design {
            Design::Sharp => {
                let w: f64 = rng.random();
                let e: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.noise_sd;
                let z = w >= 0.5;
                let log_t = b1 + b2 * w + b3 * if z { 1.0 } else { 0.0 } + e;
                observe(rng, log_t, w, z, cfg.censor_upper)
            }
            Design::Fuzzy => {
                let w: f64 = 2.0 * rng.random::<f64>() - 1.0;
                let v = if w >= 0.0 { 1.0 } else { 0.0 };
                let kappa: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.kappa_sd;
                let z = -0.5 + v + w + kappa > 0.0;
                let e: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.noise_sd;
                let log_t = b1 + b2 * w + b3 * if z { 1.0 } else { 0.0 } + e;
                observe(rng, log_t, w, z, cfg.censor_upper)
            }
        };
        records.push(rec);
    }
    ObservedSample::new(records)
}

/// Sharp-design sample from stream 0 of `cfg.seed`.
pub fn gen_sharp(cfg: &DgpConfig) -> Result<ObservedSample> {
    if cfg.design != Design::Sharp {
        return Err(Error::InvalidArgument("configuration is not a sharp design"));
    }
    generate(cfg, &mut stream(cfg.seed, 0))
}

/// Fuzzy-design sample from stream 0 of `cfg.seed`.
pub fn gen_fuzzy(cfg: &DgpConfig) -> Result<ObservedSample> {
    if cfg.design != Design::Fuzzy {
        return Err(Error::InvalidArgument("configuration is not a fuzzy design"));
    }
    generate(cfg, &mut stream(cfg.seed, 0))
}

/// A transform together with the working model used when it is doubly
/// robust.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Method {
    pub transform: TransformMethod,
    pub model: ModelKind,
}

impl Method {
    pub const IPCW: Method = Method {
        transform: TransformMethod::Ipcw,
        model: ModelKind::Cox,
    };

    pub fn dr(model: ModelKind) -> Self {
        Self {
            transform: TransformMethod::Dr,
            model,
        }
    }

    /// The method table: DR with each working model, then IPCW.
    pub fn all() -> Vec<Method> {
        let mut v: Vec<Method> = ModelKind::ALL.iter().map(|&m| Method::dr(m)).collect();
        v.push(Method::IPCW);
        v
    }

    pub fn label(&self) -> String {
        match self.transform {
            TransformMethod::Ipcw => String::from("ipcw"),
            TransformMethod::Dr => alloc::format!("dr-{}", self.model.name()),
        }
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    /// `ipcw` or `dr-<model>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "ipcw" {
            return Ok(Method::IPCW);
        }
        match s.strip_prefix("dr-") {
            Some(m) => Ok(Method::dr(m.parse()?)),
            None => Err(Error::InvalidArgument("method must be ipcw or dr-<model>")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StudyConfig {
    pub dgp: DgpConfig,
    pub methods: Vec<Method>,
    pub n_reps: usize,
    /// Settings shared by every method; cutoff, design, transform, model
    /// and seed are overwritten per replicate.
    pub pipeline: PipelineConfig,
}

impl StudyConfig {
    pub fn new(dgp: DgpConfig, methods: Vec<Method>, n_reps: usize) -> Self {
        Self {
            pipeline: PipelineConfig::new(dgp.cutoff(), dgp.design),
            dgp,
            methods,
            n_reps,
        }
    }
}

/// Per-replicate outcome of one method.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReplicateResult {
    pub tau: f64,
    pub bandwidth: f64,
    pub se_nn: Option<f64>,
    pub se_plugin: Option<f64>,
    pub se_boot: Option<f64>,
    pub covered_nn: Option<bool>,
    pub covered_plugin: Option<bool>,
    pub covered_boot_normal: Option<bool>,
    pub covered_boot_empirical: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McSummary {
    pub method: String,
    pub design: Design,
    pub n: usize,
    pub true_tau: f64,
    pub bias: f64,
    /// Monte-Carlo standard deviation of the estimates.
    pub sd: f64,
    pub mean_se_nn: Option<f64>,
    pub mean_se_plugin: Option<f64>,
    pub mean_se_boot: Option<f64>,
    pub coverage_nn: Option<f64>,
    pub coverage_plugin: Option<f64>,
    pub coverage_boot_normal: Option<f64>,
    pub coverage_boot_empirical: Option<f64>,
    pub mean_bandwidth: f64,
    /// Mean censoring fraction over successful replicates.
    pub censor_rate: f64,
    pub n_reps: usize,
    pub n_failed: usize,
    pub failures: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StudyResult {
    pub summaries: Vec<McSummary>,
    /// `replicates[m][r]` is method `m` on replicate `r`.
    pub replicates: Vec<Vec<Option<ReplicateResult>>>,
}

fn run_replicate(study: &StudyConfig, r: usize) -> Result<(f64, Vec<Result<ReplicateResult>>)> {
    let mut rng = stream(study.dgp.seed, r as u64);
    let sample = generate(&study.dgp, &mut rng)?;
    let boot_seed = rng.next_u64();
    let truth = study.dgp.true_tau();
    let results = study
        .methods
        .iter()
        .map(|m| {
            let mut cfg = study.pipeline.clone();
            cfg.cutoff = study.dgp.cutoff();
            cfg.design = study.dgp.design;
            cfg.transform = m.transform;
            cfg.model = m.model;
            cfg.seed = boot_seed;
            let a = analyze(&sample, &cfg, &Sequential)?;
            let covered = |ci: Option<crate::inference::Interval>| ci.map(|c| c.contains(truth));
            Ok(ReplicateResult {
                tau: a.estimate.tau,
                bandwidth: a.estimate.bandwidth,
                se_nn: a.se.se_nn,
                se_plugin: a.se.se_plugin,
                se_boot: a.se.se_boot,
                covered_nn: covered(a.se.ci_nn),
                covered_plugin: covered(a.se.ci_plugin),
                covered_boot_normal: covered(a.se.ci_boot_normal),
                covered_boot_empirical: covered(a.se.ci_boot_empirical),
            })
        })
        .collect();
    Ok((sample.censoring_rate(), results))
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.filter(|v| !v.is_empty()).map(|v| mean(&v))
}

fn rate_of(values: impl Iterator<Item = Option<bool>>) -> Option<f64> {
    mean_of(values.map(|b| b.map(|b| if b { 1.0 } else { 0.0 })))
}

pub(crate) fn most_common(kinds: &BTreeMap<&'static str, usize>) -> &'static str {
    // first maximal entry in name order
    let mut best = ("none", 0);
    for (&k, &c) in kinds {
        if c > best.1 {
            best = (k, c);
        }
    }
    best.0
}

/// Runs `n_reps` replicates; replicate `r` draws data from stream `r` of the
/// DGP seed. Output is identical for every executor.
pub fn run_study<E: Executor>(study: &StudyConfig, exec: &E) -> Result<StudyResult> {
    if study.n_reps == 0 {
        return Err(Error::InvalidArgument("at least one replicate is required"));
    }
    if study.methods.is_empty() {
        return Err(Error::InvalidArgument("at least one method is required"));
    }
    study.dgp.validate()?;
    study.pipeline.validate()?;
    let outcomes = exec.map_indexed(study.n_reps, |r| run_replicate(study, r));
    let mut rates = Vec::with_capacity(study.n_reps);
    let mut per_method: Vec<Vec<Result<ReplicateResult>>> = study.methods.iter().map(|_| Vec::new()).collect();
    for o in outcomes {
        let (rate, results) = o?;
        rates.push(rate);
        for (m, res) in results.into_iter().enumerate() {
            per_method[m].push(res);
        }
    }
    let truth = study.dgp.true_tau();
    let mut summaries = Vec::with_capacity(study.methods.len());
    let mut replicates = Vec::with_capacity(study.methods.len());
    for (method, results) in study.methods.iter().zip(per_method) {
        let mut failures: BTreeMap<String, usize> = BTreeMap::new();
        let mut kinds: BTreeMap<&'static str, usize> = BTreeMap::new();
        let mut ok = Vec::new();
        let mut ok_rates = Vec::new();
        let mut column = Vec::with_capacity(results.len());
        for (r, res) in results.into_iter().enumerate() {
            match res {
                Ok(v) => {
                    ok.push(v);
                    ok_rates.push(rates[r]);
                    column.push(Some(v));
                }
                Err(e) => {
                    *failures.entry(String::from(e.kind())).or_insert(0) += 1;
                    *kinds.entry(e.kind()).or_insert(0) += 1;
                    column.push(None);
                }
            }
        }
        let n_failed = study.n_reps - ok.len();
        if n_failed as f64 > MAX_SIM_FAILURE * study.n_reps as f64 || ok.is_empty() {
            return Err(Error::TooManyFailedSimulations {
                failed: n_failed,
                total: study.n_reps,
                most_common: most_common(&kinds),
            });
        }
        let taus: Vec<f64> = ok.iter().map(|v| v.tau).collect();
        let bws: Vec<f64> = ok.iter().map(|v| v.bandwidth).collect();
        summaries.push(McSummary {
            method: method.label(),
            design: study.dgp.design,
            n: study.dgp.n,
            true_tau: truth,
            bias: mean(&taus) - truth,
            sd: if taus.len() > 1 { sample_sd(&taus) } else { 0.0 },
            mean_se_nn: mean_of(ok.iter().map(|v| v.se_nn)),
            mean_se_plugin: mean_of(ok.iter().map(|v| v.se_plugin)),
            mean_se_boot: mean_of(ok.iter().map(|v| v.se_boot)),
            coverage_nn: rate_of(ok.iter().map(|v| v.covered_nn)),
            coverage_plugin: rate_of(ok.iter().map(|v| v.covered_plugin)),
            coverage_boot_normal: rate_of(ok.iter().map(|v| v.covered_boot_normal)),
            coverage_boot_empirical: rate_of(ok.iter().map(|v| v.covered_boot_empirical)),
            mean_bandwidth: mean(&bws),
            censor_rate: mean(&ok_rates),
            n_reps: ok.len(),
            n_failed,
            failures,
        });
        replicates.push(column);
    }
    Ok(StudyResult { summaries, replicates })
}
