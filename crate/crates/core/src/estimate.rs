//! Sharp and fuzzy discontinuity estimates from pseudo-responses.

use crate::error::Side;
use crate::error::{Error, Result};
use crate::local_linear::{llr_fit, SideFit};
use crate::transform::TransformedSample;

/// Smallest admissible treatment jump in a fuzzy design.
pub const DENOMINATOR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Design {
    Sharp,
    Fuzzy,
}

impl Design {
    pub fn name(self) -> &'static str {
        match self {
            Design::Sharp => "sharp",
            Design::Fuzzy => "fuzzy",
        }
    }
}

impl core::str::FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sharp" => Ok(Design::Sharp),
            "fuzzy" => Ok(Design::Fuzzy),
            _ => Err(Error::InvalidArgument("design must be sharp or fuzzy")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitPair {
    pub left: SideFit,
    pub right: SideFit,
}

impl FitPair {
    pub fn jump(&self) -> f64 {
        self.right.alpha - self.left.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RdEstimate {
    pub tau: f64,
    pub design: Design,
    pub y_fits: FitPair,
    pub z_fits: Option<FitPair>,
    pub bandwidth: f64,
    pub cutoff: f64,
    pub tau_y: f64,
    pub tau_z: Option<f64>,
}

fn fit_pair(forcing: &[f64], response: &[f64], cutoff: f64, bandwidth: f64) -> Result<FitPair> {
    Ok(FitPair {
        left: llr_fit(forcing, response, cutoff, Side::Left, bandwidth)?,
        right: llr_fit(forcing, response, cutoff, Side::Right, bandwidth)?,
    })
}

pub fn estimate_sharp(ts: &TransformedSample, cutoff: f64, bandwidth: f64) -> Result<RdEstimate> {
    let y_fits = fit_pair(&ts.forcing, &ts.pseudo_y, cutoff, bandwidth)?;
    let tau_y = y_fits.jump();
    Ok(RdEstimate {
        tau: tau_y,
        design: Design::Sharp,
        y_fits,
        z_fits: None,
        bandwidth,
        cutoff,
        tau_y,
        tau_z: None,
    })
}

/// Ratio of the pseudo-response jump to the treatment-indicator jump, both
/// fitted with the same bandwidth.
pub fn estimate_fuzzy(ts: &TransformedSample, cutoff: f64, bandwidth: f64) -> Result<RdEstimate> {
    let y_fits = fit_pair(&ts.forcing, &ts.pseudo_y, cutoff, bandwidth)?;
    let z_fits = fit_pair(&ts.forcing, &ts.treated_response(), cutoff, bandwidth)?;
    let tau_y = y_fits.jump();
    let tau_z = z_fits.jump();
    if !(tau_z.abs() >= DENOMINATOR_FLOOR) {
        return Err(Error::WeakDiscontinuity { tau_z });
    }
    Ok(RdEstimate {
        tau: tau_y / tau_z,
        design: Design::Fuzzy,
        y_fits,
        z_fits: Some(z_fits),
        bandwidth,
        cutoff,
        tau_y,
        tau_z: Some(tau_z),
    })
}

pub fn estimate(ts: &TransformedSample, design: Design, cutoff: f64, bandwidth: f64) -> Result<RdEstimate> {
    match design {
        Design::Sharp => estimate_sharp(ts, cutoff, bandwidth),
        Design::Fuzzy => estimate_fuzzy(ts, cutoff, bandwidth),
    }
}
