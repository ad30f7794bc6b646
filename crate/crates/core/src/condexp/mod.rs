//! Working failure-time models and the conditional expectation
//! `Q(u, w) = E(log T | T >= u, W = w)` used by the doubly robust transform.

mod aft;
mod cox;

use alloc::vec::Vec;

pub use aft::{fit_aft, AftFit, Distribution};
pub use cox::{fit_cox, CoxFit, COX_COEFFICIENT_CAP};

use crate::data::ObservedSample;
use crate::error::{Error, Result};

/// Covariates entering the working failure-time model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "set", rename_all = "snake_case"))]
pub enum WorkingCovariates {
    /// The forcing variable only.
    Forcing,
    /// The forcing variable and the side indicator `1{W >= cutoff}`.
    ForcingAndSide { cutoff: f64 },
    /// The forcing variable and the treatment indicator.
    ForcingAndTreatment,
}

impl WorkingCovariates {
    pub(crate) fn design(self, forcing: f64, treated: bool) -> Covariates {
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            WorkingCovariates::Forcing => Covariates::One(forcing),
            WorkingCovariates::ForcingAndSide { cutoff } => Covariates::Two(forcing, ind(forcing >= cutoff)),
            WorkingCovariates::ForcingAndTreatment => Covariates::Two(forcing, ind(treated)),
        }
    }

    pub(crate) fn dim(self) -> usize {
        match self {
            WorkingCovariates::Forcing => 1,
            _ => 2,
        }
    }
}

/// Covariate set named without a cutoff; resolved once the cutoff is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CovariateSet {
    Forcing,
    ForcingAndSide,
    ForcingAndTreatment,
}

impl CovariateSet {
    /// Parametric models get the side indicator so they can represent a
    /// jump at the cutoff. The Cox model gets the forcing variable alone: an
    /// indicator that nearly orders the failure times makes its partial
    /// likelihood monotone.
    pub fn default_for(model: ModelKind) -> Self {
        match model {
            ModelKind::Cox => CovariateSet::Forcing,
            ModelKind::Lognormal | ModelKind::Loglogistic => CovariateSet::ForcingAndSide,
        }
    }

    pub fn resolve(self, cutoff: f64) -> WorkingCovariates {
        match self {
            CovariateSet::Forcing => WorkingCovariates::Forcing,
            CovariateSet::ForcingAndSide => WorkingCovariates::ForcingAndSide { cutoff },
            CovariateSet::ForcingAndTreatment => WorkingCovariates::ForcingAndTreatment,
        }
    }
}

impl core::str::FromStr for CovariateSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "forcing" => Ok(CovariateSet::Forcing),
            "forcing-and-side" => Ok(CovariateSet::ForcingAndSide),
            "forcing-and-treatment" => Ok(CovariateSet::ForcingAndTreatment),
            _ => Err(Error::InvalidArgument(
                "covariates must be forcing, forcing-and-side or forcing-and-treatment",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Covariates {
    One(f64),
    Two(f64, f64),
}

impl Covariates {
    pub(crate) fn get(&self, k: usize) -> f64 {
        match (self, k) {
            (Covariates::One(a), 0) | (Covariates::Two(a, _), 0) => *a,
            (Covariates::Two(_, b), 1) => *b,
            _ => 0.0,
        }
    }
}

/// Anything that supplies `E(log T | T >= u, W = w, Z = z)`.
pub trait ConditionalMean {
    fn q_y(&self, u: f64, forcing: f64, treated: bool) -> Result<f64>;

    /// `Q` at every point of `us` (ascending) for one covariate profile.
    fn q_y_many(&self, us: &[f64], forcing: f64, treated: bool) -> Result<Vec<f64>> {
        us.iter().map(|&u| self.q_y(u, forcing, treated)).collect()
    }
}

/// Which working model to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ModelKind {
    Lognormal,
    Loglogistic,
    Cox,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Cox, ModelKind::Lognormal, ModelKind::Loglogistic];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lognormal => "lognormal",
            ModelKind::Loglogistic => "loglogistic",
            ModelKind::Cox => "cox",
        }
    }
}

impl core::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lognormal" => Ok(ModelKind::Lognormal),
            "loglogistic" => Ok(ModelKind::Loglogistic),
            "cox" => Ok(ModelKind::Cox),
            _ => Err(Error::InvalidArgument("model must be lognormal, loglogistic or cox")),
        }
    }
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum FittedModel {
    Aft(AftFit),
    Cox(CoxFit),
}

/// A fitted working model together with the sample's largest observed time,
/// which is the fallback value of `Q` beyond the last observed failure for
/// the semiparametric model.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CondExpModel {
    pub fit: FittedModel,
    pub max_obs_time: f64,
}

impl CondExpModel {
    pub fn fit(sample: &ObservedSample, kind: ModelKind, covariates: WorkingCovariates) -> Result<Self> {
        let fit = match kind {
            ModelKind::Lognormal => FittedModel::Aft(fit_aft(sample, Distribution::Lognormal, covariates)?),
            ModelKind::Loglogistic => FittedModel::Aft(fit_aft(sample, Distribution::Loglogistic, covariates)?),
            ModelKind::Cox => FittedModel::Cox(fit_cox(sample, covariates)?),
        };
        Ok(Self {
            fit,
            max_obs_time: sample.max_time(),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match &self.fit {
            FittedModel::Aft(a) => match a.distribution {
                Distribution::Lognormal => ModelKind::Lognormal,
                Distribution::Loglogistic => ModelKind::Loglogistic,
            },
            FittedModel::Cox(_) => ModelKind::Cox,
        }
    }
}

impl ConditionalMean for CondExpModel {
    fn q_y(&self, u: f64, forcing: f64, treated: bool) -> Result<f64> {
        match &self.fit {
            FittedModel::Aft(a) => a.q_y(u, forcing, treated),
            FittedModel::Cox(c) => c.q_y_with_fallback(u, forcing, treated, self.max_obs_time),
        }
    }

    fn q_y_many(&self, us: &[f64], forcing: f64, treated: bool) -> Result<Vec<f64>> {
        match &self.fit {
            FittedModel::Aft(a) => a.q_y_many(us, forcing, treated),
            FittedModel::Cox(c) => c.q_y_many_with_fallback(us, forcing, treated, self.max_obs_time),
        }
    }
}

/// `Q == 0`; reduces the doubly robust transform to IPCW.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroMean;

impl ConditionalMean for ZeroMean {
    fn q_y(&self, u: f64, _forcing: f64, _treated: bool) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::NegativeU(u));
        }
        Ok(0.0)
    }
}
