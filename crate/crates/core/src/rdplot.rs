//! Binned means of pseudo-responses for a discontinuity plot.
//!
//! Each side is split into `bins_per_side` equal-width bins: `[min W, c)` on
//! the left and `[c, max W]` on the right, the last right bin closed.

use alloc::vec::Vec;

use crate::error::{Error, Result, Side};
use crate::estimate::{FitPair, RdEstimate};
use crate::transform::TransformedSample;

pub const DEFAULT_BINS_PER_SIDE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bin {
    pub side: Side,
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RdPlotData {
    pub cutoff: f64,
    /// Left bins then right bins, each in increasing forcing order.
    pub bins: Vec<Bin>,
    pub fitted: FitPair,
    pub bandwidth: f64,
}

fn side_bins(ts: &TransformedSample, side: Side, lo: f64, hi: f64, k: usize, cutoff: f64) -> Vec<Bin> {
    let width = (hi - lo) / k as f64;
    let mut sums = alloc::vec![0.0; k];
    let mut counts = alloc::vec![0usize; k];
    for (&w, &y) in ts.forcing.iter().zip(&ts.pseudo_y) {
        let inside = match side {
            Side::Left => w < cutoff,
            Side::Right => w >= cutoff,
        };
        if !inside {
            continue;
        }
        let b = if width > 0.0 {
            (libm::floor((w - lo) / width) as usize).min(k - 1)
        } else {
            0
        };
        sums[b] += y;
        counts[b] += 1;
    }
    (0..k)
        .map(|b| {
            let lower = lo + width * b as f64;
            let upper = if b + 1 == k { hi } else { lo + width * (b + 1) as f64 };
            Bin {
                side,
                lower,
                upper,
                center: 0.5 * (lower + upper),
                count: counts[b],
                mean: (counts[b] > 0).then(|| sums[b] / counts[b] as f64),
            }
        })
        .collect()
}

pub fn rdplot_data(ts: &TransformedSample, est: &RdEstimate, bins_per_side: usize) -> Result<RdPlotData> {
    if bins_per_side == 0 {
        return Err(Error::InvalidArgument("bins per side must be positive"));
    }
    let c = est.cutoff;
    let (lo, hi) = ts
        .forcing
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &w| (a.min(w), b.max(w)));
    let mut bins = side_bins(ts, Side::Left, lo.min(c), c, bins_per_side, c);
    bins.extend(side_bins(ts, Side::Right, c, hi.max(c), bins_per_side, c));
    Ok(RdPlotData {
        cutoff: c,
        bins,
        fitted: est.y_fits,
        bandwidth: est.bandwidth,
    })
}
