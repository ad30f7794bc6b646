//! One-sided local linear regression with a triangular kernel.
//!
//! The normal equations are formed in the scaled basis `(1, (w - c) / h)`,
//! where `c` is the evaluation point, and solved in closed form. Records with
//! `w == cutoff` belong to the right side.

use crate::error::{Error, Result, Side};
use crate::numeric::{CompensatedSum, Sym2};

const MAX_CONDITION: f64 = 1e12;

/// `max(0, 1 - |u|)`.
pub fn kernel_triangular(u: f64) -> f64 {
    let k = 1.0 - u.abs();
    if k > 0.0 {
        k
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SideFit {
    /// Fitted value at the evaluation point.
    pub alpha: f64,
    /// Slope per unit of the forcing variable.
    pub beta: f64,
    pub side: Side,
    /// Records with positive kernel weight.
    pub n_effective: usize,
    /// Unnormalized weighted Gram matrix in the scaled basis.
    pub gram: Sym2,
}

impl SideFit {
    pub fn predict(&self, w: f64, center: f64) -> f64 {
        self.alpha + self.beta * (w - center)
    }
}

/// Whether `w` lies on `side` of `cutoff`.
pub fn on_side(w: f64, cutoff: f64, side: Side) -> bool {
    match side {
        Side::Right => w >= cutoff,
        Side::Left => w < cutoff,
    }
}

/// Running weighted sums for a one-point local linear fit.
#[derive(Debug, Clone)]
pub(crate) struct Accumulator {
    center: f64,
    bandwidth: f64,
    s0: CompensatedSum,
    s1: CompensatedSum,
    s2: CompensatedSum,
    t0: CompensatedSum,
    t1: CompensatedSum,
    n: usize,
    first_w: f64,
    distinct: bool,
}

impl Accumulator {
    pub(crate) fn new(center: f64, bandwidth: f64) -> Self {
        Self {
            center,
            bandwidth,
            s0: CompensatedSum::new(),
            s1: CompensatedSum::new(),
            s2: CompensatedSum::new(),
            t0: CompensatedSum::new(),
            t1: CompensatedSum::new(),
            n: 0,
            first_w: f64::NAN,
            distinct: false,
        }
    }

    /// Adds a point; returns whether it carried positive weight.
    pub(crate) fn push(&mut self, w: f64, y: f64) -> bool {
        let u = (w - self.center) / self.bandwidth;
        let k = kernel_triangular(u);
        if k <= 0.0 {
            return false;
        }
        self.s0.add(k);
        self.s1.add(k * u);
        self.s2.add(k * u * u);
        self.t0.add(k * y);
        self.t1.add(k * u * y);
        if self.n == 0 {
            self.first_w = w;
        } else if w != self.first_w {
            self.distinct = true;
        }
        self.n += 1;
        true
    }

    pub(crate) fn solve(&self, side: Side) -> Result<SideFit> {
        if !self.distinct {
            return Err(Error::InsufficientSupport { side });
        }
        let gram = Sym2::new(self.s0.value(), self.s1.value(), self.s2.value());
        let condition = gram.condition_number();
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularDesign { side, condition });
        }
        let det = gram.det();
        let (t0, t1) = (self.t0.value(), self.t1.value());
        let alpha = (gram.c * t0 - gram.b * t1) / det;
        let slope_scaled = (gram.a * t1 - gram.b * t0) / det;
        Ok(SideFit {
            alpha,
            beta: slope_scaled / self.bandwidth,
            side,
            n_effective: self.n,
            gram,
        })
    }
}

/// Weighted least squares of `response` on `(1, forcing - cutoff)` over the
/// records on `side`, with weights `K((forcing - cutoff) / bandwidth)`.
pub fn llr_fit(forcing: &[f64], response: &[f64], cutoff: f64, side: Side, bandwidth: f64) -> Result<SideFit> {
    if forcing.len() != response.len() {
        return Err(Error::InvalidArgument("forcing and response lengths differ"));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidArgument("bandwidth must be positive and finite"));
    }
    let mut acc = Accumulator::new(cutoff, bandwidth);
    for (&w, &y) in forcing.iter().zip(response) {
        if on_side(w, cutoff, side) {
            acc.push(w, y);
        }
    }
    acc.solve(side)
}
