//! End-to-end analysis: censoring fit, working model, transform, bandwidth,
//! estimate and standard errors.

use alloc::vec::Vec;

use crate::bandwidth::{default_grid, select_bandwidth, BandwidthChoice, DEFAULT_GRID_SIZE, DEFAULT_XI};
use crate::condexp::{CondExpModel, ConditionalMean, CovariateSet, ModelKind, ZeroMean};
use crate::data::ObservedSample;
use crate::error::{Error, Result};
use crate::estimate::{estimate, Design, RdEstimate};
use crate::exec::Executor;
use crate::inference::{
    bootstrap, variance_nn, variance_plugin, BootstrapResult, Interval, DEFAULT_BOOT_REPS, DEFAULT_LEVEL,
    DEFAULT_NEIGHBORS,
};
use crate::survival::{fit_censoring, CensoringFit, DEFAULT_TRUNCATION_QUANTILE};
use crate::transform::{transform_all, TransformMethod, TransformedSample};

/// |tau_z| below this is reported as a weak first stage.
const WEAK_DENOMINATOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum BandwidthMode {
    /// Cross-validated over the default geometric grid.
    Auto,
    Fixed(f64),
}

impl core::str::FromStr for BandwidthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(BandwidthMode::Auto);
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(BandwidthMode::Fixed(h)),
            _ => Err(Error::InvalidArgument("bandwidth must be auto or a positive number")),
        }
    }
}

/// Which standard errors to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeScheme {
    pub nn: bool,
    pub plugin: bool,
    pub boot: bool,
}

impl SeScheme {
    pub const ALL: SeScheme = SeScheme {
        nn: true,
        plugin: true,
        boot: true,
    };
    pub const ANALYTIC: SeScheme = SeScheme {
        nn: true,
        plugin: true,
        boot: false,
    };
    pub const NONE: SeScheme = SeScheme {
        nn: false,
        plugin: false,
        boot: false,
    };
}

impl Default for SeScheme {
    fn default() -> Self {
        SeScheme::ANALYTIC
    }
}

/// Parses `all` or a comma-separated subset of `nn`, `plugin`, `boot`.
impl core::str::FromStr for SeScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = SeScheme::NONE;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "all" => out = SeScheme::ALL,
                "nn" => out.nn = true,
                "plugin" => out.plugin = true,
                "boot" => out.boot = true,
                _ => return Err(Error::InvalidArgument("se schemes are nn, plugin, boot or all")),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineConfig {
    pub cutoff: f64,
    pub design: Design,
    pub transform: TransformMethod,
    pub model: ModelKind,
    /// Working-model covariates; `None` uses [`CovariateSet::default_for`].
    pub covariates: Option<CovariateSet>,
    pub truncation_quantile: f64,
    pub bandwidth: BandwidthMode,
    pub xi: f64,
    pub grid_size: usize,
    pub se: SeScheme,
    pub nn_k: usize,
    pub boot_reps: usize,
    pub level: f64,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(cutoff: f64, design: Design) -> Self {
        Self {
            cutoff,
            design,
            transform: TransformMethod::Dr,
            model: ModelKind::Cox,
            covariates: None,
            truncation_quantile: DEFAULT_TRUNCATION_QUANTILE,
            bandwidth: BandwidthMode::Auto,
            xi: DEFAULT_XI,
            grid_size: DEFAULT_GRID_SIZE,
            se: SeScheme::default(),
            nn_k: DEFAULT_NEIGHBORS,
            boot_reps: DEFAULT_BOOT_REPS,
            level: DEFAULT_LEVEL,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.cutoff.is_finite() {
            return Err(Error::InvalidArgument("cutoff must be finite"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument("level must lie in (0, 1)"));
        }
        if !(self.xi > 0.0 && self.xi <= 0.5) {
            return Err(Error::InvalidArgument("xi must lie in (0, 0.5]"));
        }
        if self.grid_size == 0 {
            return Err(Error::InvalidArgument("grid size must be positive"));
        }
        if self.nn_k == 0 {
            return Err(Error::InvalidArgument("neighbor count must be positive"));
        }
        if self.se.boot && self.boot_reps < 2 {
            return Err(Error::InvalidArgument("bootstrap needs at least two replicates"));
        }
        if !(self.truncation_quantile > 0.0 && self.truncation_quantile <= 1.0) {
            return Err(Error::InvalidArgument("truncation quantile must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Everything computed on the way to a point estimate.
#[derive(Debug, Clone)]
pub struct PointEstimate {
    pub censoring: CensoringFit,
    /// `None` for IPCW and for samples without censoring.
    pub model: Option<CondExpModel>,
    pub transformed: TransformedSample,
    pub bandwidth: Option<BandwidthChoice>,
    pub estimate: RdEstimate,
}

/// Runs the pipeline up to the point estimate. A sharp design assigns
/// `treated = forcing >= cutoff`. With `fixed_bandwidth` set, the
/// configured bandwidth mode is ignored.
pub fn point_estimate(
    sample: &ObservedSample,
    cfg: &PipelineConfig,
    fixed_bandwidth: Option<f64>,
) -> Result<PointEstimate> {
    let owned;
    let sample = if cfg.design == Design::Sharp {
        let mut s = sample.clone();
        s.assign_sharp_treatment(cfg.cutoff);
        owned = s;
        &owned
    } else {
        sample
    };
    let censoring = fit_censoring(sample, cfg.truncation_quantile)?;
    let needs_model = cfg.transform == TransformMethod::Dr && sample.iter().any(|r| !r.event);
    let model = if needs_model {
        let set = cfg.covariates.unwrap_or_else(|| CovariateSet::default_for(cfg.model));
        Some(CondExpModel::fit(sample, cfg.model, set.resolve(cfg.cutoff))?)
    } else {
        None
    };
    let q: &dyn ConditionalMean = match &model {
        Some(m) => m,
        None => &ZeroMean,
    };
    let transformed = transform_all(
        sample,
        cfg.transform,
        &censoring.survival,
        &censoring.cumulative_hazard,
        q,
    )?;
    let (h, bandwidth) = match (fixed_bandwidth, cfg.bandwidth) {
        (Some(h), _) | (None, BandwidthMode::Fixed(h)) => (h, None),
        (None, BandwidthMode::Auto) => {
            let grid = default_grid(&transformed.forcing, cfg.grid_size)?;
            let choice = select_bandwidth(&transformed, cfg.design == Design::Fuzzy, cfg.cutoff, cfg.xi, &grid)?;
            (choice.bandwidth, Some(choice))
        }
    };
    let estimate = estimate(&transformed, cfg.design, cfg.cutoff, h)?;
    Ok(PointEstimate {
        censoring,
        model,
        transformed,
        bandwidth,
        estimate,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeReport {
    pub level: f64,
    pub se_nn: Option<f64>,
    pub se_plugin: Option<f64>,
    pub se_boot: Option<f64>,
    pub ci_nn: Option<Interval>,
    pub ci_plugin: Option<Interval>,
    pub ci_boot_normal: Option<Interval>,
    pub ci_boot_empirical: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Warning {
    /// Records above the truncation point never contribute a censoring jump.
    Truncation {
        omega: f64,
        n_truncated: usize,
    },
    /// Cross-validation skipped records at the chosen bandwidth.
    CvSkipped {
        criterion: alloc::string::String,
        bandwidth: f64,
        skipped: usize,
    },
    WeakDenominator {
        tau_z: f64,
    },
    BootstrapFailures {
        failed: usize,
        total: usize,
    },
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Analysis {
    pub estimate: RdEstimate,
    pub bandwidth: Option<BandwidthChoice>,
    pub se: SeReport,
    pub bootstrap: Option<BootstrapResult>,
    pub censoring_rate: f64,
    pub omega: f64,
    pub n: usize,
    pub n_left: usize,
    pub n_right: usize,
    pub model: Option<CondExpModel>,
    pub warnings: Vec<Warning>,
}

fn cv_warning(cv: &crate::bandwidth::CvResult, criterion: &str) -> Option<Warning> {
    let k = cv.grid.iter().position(|&h| h == cv.chosen)?;
    (cv.skipped[k] > 0).then(|| Warning::CvSkipped {
        criterion: criterion.into(),
        bandwidth: cv.chosen,
        skipped: cv.skipped[k],
    })
}

pub fn analyze<E: Executor>(sample: &ObservedSample, cfg: &PipelineConfig, exec: &E) -> Result<Analysis> {
    cfg.validate()?;
    let pe = point_estimate(sample, cfg, None)?;
    let est = pe.estimate;
    let ts = &pe.transformed;

    let mut warnings = Vec::new();
    if pe.censoring.n_truncated > 0 {
        warnings.push(Warning::Truncation {
            omega: pe.censoring.omega,
            n_truncated: pe.censoring.n_truncated,
        });
    }
    if let Some(choice) = &pe.bandwidth {
        warnings.extend(cv_warning(&choice.y, "pseudo_response"));
        if let Some(z) = &choice.z {
            warnings.extend(cv_warning(z, "treatment"));
        }
    }
    if let Some(tz) = est.tau_z {
        if tz.abs() < WEAK_DENOMINATOR {
            warnings.push(Warning::WeakDenominator { tau_z: tz });
        }
    }

    let level = cfg.level;
    let se_nn = if cfg.se.nn {
        Some(libm::sqrt(variance_nn(&est, ts, cfg.nn_k)?))
    } else {
        None
    };
    let se_plugin = if cfg.se.plugin {
        Some(libm::sqrt(variance_plugin(&est, ts)?))
    } else {
        None
    };
    let boot = if cfg.se.boot {
        let b = bootstrap(sample, cfg, est.bandwidth, cfg.boot_reps, cfg.seed, exec)?;
        if b.failed > 0 {
            warnings.push(Warning::BootstrapFailures {
                failed: b.failed,
                total: b.reps,
            });
        }
        Some(b)
    } else {
        None
    };
    let se = SeReport {
        level,
        se_nn,
        se_plugin,
        se_boot: boot.as_ref().map(|b| b.se),
        ci_nn: se_nn.map(|s| Interval::normal(est.tau, s, level)),
        ci_plugin: se_plugin.map(|s| Interval::normal(est.tau, s, level)),
        ci_boot_normal: boot.as_ref().map(|b| Interval::normal(est.tau, b.se, level)),
        ci_boot_empirical: boot.as_ref().map(|b| b.ci_empirical),
    };
    let n_right = ts.forcing.iter().filter(|&&w| w >= cfg.cutoff).count();
    Ok(Analysis {
        estimate: est,
        bandwidth: pe.bandwidth,
        se,
        bootstrap: boot,
        censoring_rate: sample.censoring_rate(),
        omega: pe.censoring.omega,
        n: sample.len(),
        n_left: sample.len() - n_right,
        n_right,
        model: pe.model,
        warnings,
    })
}
