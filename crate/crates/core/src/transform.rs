//! Censoring-unbiased pseudo-responses for `log T`.
//!
//! The censoring survival `G` is always evaluated as a left limit `G(t-)`.
//! The doubly robust martingale sum is closed on the right: a censoring jump
//! at exactly `T~_i` is included.

use alloc::vec::Vec;

use crate::condexp::ConditionalMean;
use crate::data::{ObservedRecord, ObservedSample};
use crate::error::{Error, Result};
use crate::step::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum TransformMethod {
    Ipcw,
    Dr,
}

impl TransformMethod {
    pub fn name(self) -> &'static str {
        match self {
            TransformMethod::Ipcw => "ipcw",
            TransformMethod::Dr => "dr",
        }
    }
}

impl core::str::FromStr for TransformMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ipcw" => Ok(TransformMethod::Ipcw),
            "dr" => Ok(TransformMethod::Dr),
            _ => Err(Error::InvalidArgument("transform must be ipcw or dr")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransformedSample {
    pub pseudo_y: Vec<f64>,
    pub forcing: Vec<f64>,
    pub treated: Vec<bool>,
    pub method: TransformMethod,
}

impl TransformedSample {
    pub fn len(&self) -> usize {
        self.pseudo_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pseudo_y.is_empty()
    }

    /// Treatment indicators as 0/1 responses.
    pub fn treated_response(&self) -> Vec<f64> {
        self.treated.iter().map(|&z| if z { 1.0 } else { 0.0 }).collect()
    }
}

fn left_survival(g_hat: &StepFunction, t: f64) -> Result<f64> {
    let g = g_hat.eval_left(t)?;
    if g > 0.0 {
        Ok(g)
    } else {
        Err(Error::ZeroDenominator { time: t })
    }
}

pub fn transform_ipcw(record: &ObservedRecord, g_hat: &StepFunction) -> Result<f64> {
    if !record.event {
        return Ok(0.0);
    }
    let g = left_survival(g_hat, record.time_obs)?;
    Ok(libm::log(record.time_obs) / g)
}

pub fn transform_dr<M: ConditionalMean + ?Sized>(
    record: &ObservedRecord,
    g_hat: &StepFunction,
    lambda_g: &StepFunction,
    model: &M,
) -> Result<f64> {
    let t = record.time_obs;
    let ipcw = transform_ipcw(record, g_hat)?;

    let jumps = lambda_g.jump_times();
    let used = jumps.partition_point(|&s| s <= t);
    let mut aug = 0.0;
    if used > 0 {
        let q = model.q_y_many(&jumps[..used], record.forcing, record.treated)?;
        for (j, (&s, &qs)) in jumps[..used].iter().zip(&q).enumerate() {
            let dl = lambda_g.jump_size(j);
            if dl == 0.0 {
                continue;
            }
            aug -= qs / left_survival(g_hat, s)? * dl;
        }
    }
    if !record.event {
        let q = model.q_y(t, record.forcing, record.treated)?;
        aug += q / left_survival(g_hat, t)?;
    }
    Ok(ipcw + aug)
}

/// Applies the chosen transform to every record, preserving order. The model
/// is ignored for IPCW.
pub fn transform_all<M: ConditionalMean + ?Sized>(
    sample: &ObservedSample,
    method: TransformMethod,
    g_hat: &StepFunction,
    lambda_g: &StepFunction,
    model: &M,
) -> Result<TransformedSample> {
    let mut pseudo_y = Vec::with_capacity(sample.len());
    for (i, r) in sample.iter().enumerate() {
        let y = match method {
            TransformMethod::Ipcw => transform_ipcw(r, g_hat),
            TransformMethod::Dr => transform_dr(r, g_hat, lambda_g, model),
        }
        .map_err(|e| Error::at_record(i, e))?;
        debug_assert!(y.is_finite());
        pseudo_y.push(y);
    }
    Ok(TransformedSample {
        pseudo_y,
        forcing: sample.iter().map(|r| r.forcing).collect(),
        treated: sample.iter().map(|r| r.treated).collect(),
        method,
    })
}
