//! Cox proportional hazards working model: Newton-Raphson on the Breslow
//! partial likelihood and the Breslow baseline cumulative hazard.

use alloc::vec;
use alloc::vec::Vec;

use super::{ConditionalMean, WorkingCovariates};
use crate::data::ObservedSample;
use crate::error::{Error, Result};
use crate::numeric::solve_dense;
use crate::step::StepFunction;

pub const COX_COEFFICIENT_CAP: f64 = 20.0;
const SCORE_TOL: f64 = 1e-9;
const MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoxFit {
    /// Log hazard ratio per unit of the forcing variable.
    pub coefficient: f64,
    /// Coefficient on the side or treatment indicator, when it is in the model.
    pub indicator_coef: Option<f64>,
    pub covariates: WorkingCovariates,
    /// Breslow estimate of the baseline cumulative hazard (covariates at 0).
    pub baseline_cumhaz: StepFunction,
    /// Sorted distinct failure times (the jump times of `baseline_cumhaz`).
    pub event_times: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
}

impl CoxFit {
    fn linear_predictor(&self, forcing: f64, treated: bool) -> f64 {
        let x = self.covariates.design(forcing, treated);
        self.coefficient * x.get(0) + self.indicator_coef.unwrap_or(0.0) * x.get(1)
    }

    /// Conditional survival `exp(-Lambda0(t) exp(x'b))`.
    pub fn survival(&self, t: f64, forcing: f64, treated: bool) -> f64 {
        let risk = libm::exp(self.linear_predictor(forcing, treated));
        libm::exp(-self.baseline_cumhaz.eval_unchecked(t) * risk)
    }

    /// `Q_j = E(log T | T >= t_j)` for every event time, plus the tail value
    /// `log(max_obs_time)` at index `m`. Mass the implied survival leaves
    /// beyond the last failure is placed at the largest observed time.
    fn suffix_means(&self, forcing: f64, treated: bool, max_obs_time: f64) -> Vec<f64> {
        let risk = libm::exp(self.linear_predictor(forcing, treated));
        let m = self.event_times.len();
        let mut q = vec![0.0; m + 1];
        q[m] = libm::log(max_obs_time);
        for j in (0..m).rev() {
            let jump = self.baseline_cumhaz.jump_size(j) * risk;
            let p_fail = -libm::expm1(-jump);
            q[j] = p_fail * libm::log(self.event_times[j]) + (1.0 - p_fail) * q[j + 1];
        }
        q
    }

    pub(crate) fn q_y_with_fallback(&self, u: f64, forcing: f64, treated: bool, max_obs_time: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::NegativeU(u));
        }
        let j0 = self.event_times.partition_point(|&t| t < u);
        let m = self.event_times.len();
        if j0 == m {
            return Ok(libm::log(max_obs_time));
        }
        let risk = libm::exp(self.linear_predictor(forcing, treated));
        let mut q = libm::log(max_obs_time);
        for j in (j0..m).rev() {
            let jump = self.baseline_cumhaz.jump_size(j) * risk;
            let p_fail = -libm::expm1(-jump);
            q = p_fail * libm::log(self.event_times[j]) + (1.0 - p_fail) * q;
        }
        Ok(q)
    }

    pub(crate) fn q_y_many_with_fallback(
        &self,
        us: &[f64],
        forcing: f64,
        treated: bool,
        max_obs_time: f64,
    ) -> Result<Vec<f64>> {
        if let Some(&bad) = us.iter().find(|u| !(**u >= 0.0)) {
            return Err(Error::NegativeU(bad));
        }
        let q = self.suffix_means(forcing, treated, max_obs_time);
        Ok(us
            .iter()
            .map(|&u| q[self.event_times.partition_point(|&t| t < u)])
            .collect())
    }
}

/// The fitted Cox model alone has no fallback value; it uses the largest
/// failure time when queried directly.
impl ConditionalMean for CoxFit {
    fn q_y(&self, u: f64, forcing: f64, treated: bool) -> Result<f64> {
        let last = self.event_times.last().copied().unwrap_or(1.0);
        self.q_y_with_fallback(u, forcing, treated, last)
    }
}

struct PartialLikelihood {
    /// Indices sorted by descending time.
    order: Vec<usize>,
    times: Vec<f64>,
    events: Vec<bool>,
    /// Centered covariate rows.
    x: Vec<Vec<f64>>,
    dim: usize,
}

impl PartialLikelihood {
    /// Log partial likelihood, score and observed information at `beta`.
    fn evaluate(&self, beta: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
        let p = self.dim;
        let mut ll = 0.0;
        let mut score = vec![0.0; p];
        let mut info = vec![vec![0.0; p]; p];
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![vec![0.0; p]; p];
        let n = self.order.len();
        let mut i = 0;
        while i < n {
            let t = self.times[self.order[i]];
            let mut j = i;
            // add everyone tied at t to the risk set first
            while j < n && self.times[self.order[j]] == t {
                let k = self.order[j];
                let eta: f64 = (0..p).map(|c| beta[c] * self.x[k][c]).sum();
                let w = libm::exp(eta);
                s0 += w;
                for a in 0..p {
                    s1[a] += w * self.x[k][a];
                    for b in 0..p {
                        s2[a][b] += w * self.x[k][a] * self.x[k][b];
                    }
                }
                j += 1;
            }
            let mut d = 0.0;
            for &k in &self.order[i..j] {
                if self.events[k] {
                    d += 1.0;
                    let eta: f64 = (0..p).map(|c| beta[c] * self.x[k][c]).sum();
                    ll += eta;
                    for a in 0..p {
                        score[a] += self.x[k][a];
                    }
                }
            }
            if d > 0.0 {
                ll -= d * libm::log(s0);
                for a in 0..p {
                    let ma = s1[a] / s0;
                    score[a] -= d * ma;
                    for b in 0..p {
                        info[a][b] += d * (s2[a][b] / s0 - ma * s1[b] / s0);
                    }
                }
            }
            i = j;
        }
        (ll, score, info)
    }
}

pub fn fit_cox(sample: &ObservedSample, covariates: WorkingCovariates) -> Result<CoxFit> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::TooFewRecords(n));
    }
    if !sample.iter().any(|r| r.event) {
        return Err(Error::NoEvents);
    }
    let dim = covariates.dim();
    let raw: Vec<Vec<f64>> = sample
        .iter()
        .map(|r| {
            let c = covariates.design(r.forcing, r.treated);
            (0..dim).map(|k| c.get(k)).collect()
        })
        .collect();
    let means: Vec<f64> = (0..dim)
        .map(|k| raw.iter().map(|row| row[k]).sum::<f64>() / n as f64)
        .collect();
    for k in 0..dim {
        if raw.iter().all(|row| row[k] == raw[0][k]) {
            return Err(Error::ConstantCovariate);
        }
    }
    let x: Vec<Vec<f64>> = raw
        .iter()
        .map(|row| row.iter().zip(&means).map(|(v, m)| v - m).collect())
        .collect();
    let times: Vec<f64> = sample.iter().map(|r| r.time_obs).collect();
    let events: Vec<bool> = sample.iter().map(|r| r.event).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]).then(a.cmp(&b)));
    let pl = PartialLikelihood {
        order,
        times,
        events,
        x,
        dim,
    };

    let mut beta = vec![0.0; dim];
    let (mut ll, mut score, mut info) = pl.evaluate(&beta);
    let mut iterations = 0;
    let near_cap = |b: &[f64]| b.iter().any(|x| x.abs() > 0.99 * COX_COEFFICIENT_CAP);
    loop {
        let snorm = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if snorm < SCORE_TOL {
            break;
        }
        if iterations >= MAX_ITER {
            if near_cap(&beta) {
                break;
            }
            return Err(Error::NonConvergence {
                iterations,
                gradient_norm: snorm,
                detail: "Cox Newton-Raphson iteration cap reached",
            });
        }
        iterations += 1;
        let dir = solve_dense(&mut info.clone(), &mut score.clone())
            .filter(|d| d.iter().zip(&score).map(|(a, b)| a * b).sum::<f64>() > 0.0)
            .unwrap_or_else(|| score.clone());
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = beta.iter().zip(&dir).map(|(b, d)| b + step * d).collect();
            let inside = cand.iter().all(|b| b.abs() <= COX_COEFFICIENT_CAP);
            let (cll, cs, ci) = pl.evaluate(&cand);
            if inside && cll.is_finite() && cll >= ll - 1e-12 * ll.abs().max(1.0) {
                let delta = cand.iter().zip(&beta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                beta = cand;
                ll = cll;
                score = cs;
                info = ci;
                moved = delta > 1e-14;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    // The supremum lies at infinity when the estimate drifts to the cap.
    if near_cap(&beta) {
        return Err(Error::MonotoneLikelihood {
            cap: COX_COEFFICIENT_CAP,
        });
    }

    // Breslow baseline at covariates = 0 (uncentered).
    let offset: f64 = beta.iter().zip(&means).map(|(b, m)| b * m).sum();
    let mut event_times = Vec::new();
    let mut increments = Vec::new();
    let mut s0 = 0.0;
    let n = pl.order.len();
    let mut i = 0;
    while i < n {
        let t = pl.times[pl.order[i]];
        let mut j = i;
        let mut d = 0usize;
        while j < n && pl.times[pl.order[j]] == t {
            let k = pl.order[j];
            let eta: f64 = (0..dim).map(|c| beta[c] * pl.x[k][c]).sum();
            s0 += libm::exp(eta);
            if pl.events[k] {
                d += 1;
            }
            j += 1;
        }
        if d > 0 {
            event_times.push(t);
            increments.push(d as f64 / (s0 * libm::exp(offset)));
        }
        i = j;
    }
    event_times.reverse();
    increments.reverse();
    let mut cum = 0.0;
    let values: Vec<f64> = increments
        .iter()
        .map(|inc| {
            cum += inc;
            cum
        })
        .collect();
    let baseline_cumhaz = StepFunction::new(event_times.clone(), values, 0.0)?;

    Ok(CoxFit {
        coefficient: beta[0],
        indicator_coef: (dim > 1).then(|| beta[1]),
        covariates,
        baseline_cumhaz,
        event_times,
        loglik: ll,
        iterations,
    })
}
