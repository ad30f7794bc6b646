//! Ludwig-Miller cross-validation for the bandwidth.
//!
//! Each record inside the quantile window is predicted by a one-sided local
//! linear fit at its own forcing value `W_i`, using only records strictly to
//! its left (left of the cutoff) or strictly to its right (right of the
//! cutoff), with kernel weights centered at `W_i`. The record itself never
//! enters its own fit.

use alloc::vec::Vec;

use crate::error::{Error, Result, Side};
use crate::local_linear::Accumulator;
use crate::numeric::{quantile_sorted, CompensatedSum};
use crate::transform::TransformedSample;

pub const DEFAULT_XI: f64 = 0.5;
pub const DEFAULT_GRID_SIZE: usize = 25;
/// Fraction of window records that may be skipped before a score is `+inf`.
const MAX_SKIP_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvResult {
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
    pub chosen: f64,
    pub xi: f64,
    /// Window records skipped for lack of support, per grid point.
    pub skipped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BandwidthChoice {
    pub y: CvResult,
    /// Criterion on the treatment indicator (fuzzy designs only).
    pub z: Option<CvResult>,
    /// `y.chosen` (sharp) or `min(y.chosen, z.chosen)` (fuzzy).
    pub bandwidth: f64,
}

/// `k` geometrically spaced values from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => {
            let ratio = libm::log(hi / lo) / (k - 1) as f64;
            let mut g: Vec<f64> = (0..k).map(|i| lo * libm::exp(ratio * i as f64)).collect();
            g[k - 1] = hi;
            g
        }
    }
}

/// Geometric grid from `range / 50` to `range / 1.5`, where `range` is the
/// spread of the forcing values.
pub fn default_grid(forcing: &[f64], size: usize) -> Result<Vec<f64>> {
    let (lo, hi) = forcing
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &w| (a.min(w), b.max(w)));
    let range = hi - lo;
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::InvalidArgument("forcing values have zero range"));
    }
    if size == 0 {
        return Err(Error::InvalidArgument("grid size must be positive"));
    }
    Ok(geometric_grid(range / 50.0, range / 1.5, size))
}

/// Records sorted by `(w, y)` so the criterion is independent of input order.
struct Sorted {
    w: Vec<f64>,
    y: Vec<f64>,
    window: Vec<usize>,
}

impl Sorted {
    fn new(forcing: &[f64], response: &[f64], cutoff: f64, xi: f64) -> Result<Self> {
        if forcing.len() != response.len() {
            return Err(Error::InvalidArgument("forcing and response lengths differ"));
        }
        if !(xi > 0.0 && xi <= 0.5) {
            return Err(Error::InvalidArgument("xi must lie in (0, 0.5]"));
        }
        let mut pairs: Vec<(f64, f64)> = forcing.iter().copied().zip(response.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let w: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let split = w.partition_point(|&x| x < cutoff);
        let a_left = if split > 0 {
            quantile_sorted(&w[..split], xi)
        } else {
            cutoff
        };
        let a_right = if split < w.len() {
            quantile_sorted(&w[split..], 1.0 - xi)
        } else {
            cutoff
        };
        let window: Vec<usize> = (0..w.len()).filter(|&i| w[i] >= a_left && w[i] <= a_right).collect();
        if window.is_empty() {
            return Err(Error::DegenerateWindow);
        }
        Ok(Self { w, y, window })
    }

    /// Criterion value and number of skipped window records.
    fn score(&self, cutoff: f64, h: f64) -> (f64, usize) {
        let n = self.w.len();
        let mut sse = CompensatedSum::new();
        let mut skipped = 0usize;
        for &i in &self.window {
            let wi = self.w[i];
            let side = if wi >= cutoff { Side::Right } else { Side::Left };
            let mut acc = Accumulator::new(wi, h);
            let range = match side {
                Side::Left => self.w.partition_point(|&x| x <= wi - h)..self.w.partition_point(|&x| x < wi),
                Side::Right => self.w.partition_point(|&x| x <= wi)..self.w.partition_point(|&x| x < wi + h),
            };
            for j in range {
                acc.push(self.w[j], self.y[j]);
            }
            match acc.solve(side) {
                Ok(fit) => {
                    let r = self.y[i] - fit.alpha;
                    sse.add(r * r);
                }
                Err(_) => skipped += 1,
            }
        }
        let n_window = self.window.len();
        if skipped as f64 > MAX_SKIP_FRACTION * n_window as f64 || skipped == n_window {
            return (f64::INFINITY, skipped);
        }
        let used = (n_window - skipped) as f64;
        (sse.value() / used * n_window as f64 / n as f64, skipped)
    }
}

/// Cross-validation criterion at one bandwidth. Skipped window records are
/// replaced by the mean squared error of the scored ones, so the value is
/// `(1/n) * sum` whenever nothing is skipped.
pub fn lm_cv_score(forcing: &[f64], response: &[f64], cutoff: f64, h: f64, xi: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("bandwidth must be positive"));
    }
    Ok(Sorted::new(forcing, response, cutoff, xi)?.score(cutoff, h).0)
}

/// Index of the first smallest finite score.
fn argmin_first(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &s) in scores.iter().enumerate() {
        if s.is_finite() && best.map_or(true, |b| s < scores[b]) {
            best = Some(k);
        }
    }
    best
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("bandwidth grid is empty"));
    }
    if !grid.iter().all(|&h| h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(
            "bandwidth grid values must be positive and finite",
        ));
    }
    if !grid.windows(2).all(|p| p[0] < p[1]) {
        return Err(Error::InvalidArgument("bandwidth grid must be strictly increasing"));
    }
    Ok(())
}

/// Scores every grid value and picks the minimizer; ties go to the smaller
/// bandwidth.
pub fn cross_validate(forcing: &[f64], response: &[f64], cutoff: f64, xi: f64, grid: &[f64]) -> Result<CvResult> {
    validate_grid(grid)?;
    let sorted = Sorted::new(forcing, response, cutoff, xi)?;
    let mut scores = Vec::with_capacity(grid.len());
    let mut skipped = Vec::with_capacity(grid.len());
    for &h in grid {
        let (s, k) = sorted.score(cutoff, h);
        scores.push(s);
        skipped.push(k);
    }
    let best = argmin_first(&scores).ok_or(Error::AllInfinite)?;
    Ok(CvResult {
        grid: grid.to_vec(),
        scores,
        chosen: grid[best],
        xi,
        skipped,
    })
}

/// Sharp: the pseudo-response minimizer. Fuzzy: the smaller of the
/// pseudo-response and treatment-indicator minimizers.
pub fn select_bandwidth(
    ts: &TransformedSample,
    fuzzy: bool,
    cutoff: f64,
    xi: f64,
    grid: &[f64],
) -> Result<BandwidthChoice> {
    let y = cross_validate(&ts.forcing, &ts.pseudo_y, cutoff, xi, grid)?;
    let z = if fuzzy {
        Some(cross_validate(&ts.forcing, &ts.treated_response(), cutoff, xi, grid)?)
    } else {
        None
    };
    let bandwidth = match &z {
        Some(z) => y.chosen.min(z.chosen),
        None => y.chosen,
    };
    Ok(BandwidthChoice { y, z, bandwidth })
}
