//! Parametric accelerated failure time models fitted by censored maximum
//! likelihood: `log T = b0 + b1 W (+ b2 Z) + scale * e` with standard normal
//! (lognormal) or standard logistic (log-logistic) errors.

use alloc::vec;
use alloc::vec::Vec;

use super::{ConditionalMean, WorkingCovariates};
use crate::data::ObservedSample;
use crate::error::{Error, Result};
use crate::numeric::{solve_dense, CompensatedSum};
use crate::quadrature;
use crate::special::{
    log1p_exp, logistic_cdf, logistic_log_pdf, logistic_log_sf, logistic_quantile, norm_hazard, norm_log_pdf,
    norm_log_sf, norm_quantile,
};

const MAX_ITER: usize = 200;
const GRAD_TOL: f64 = 1e-8;
const STEP_TOL: f64 = 1e-10;
const MIN_LOG_SCALE: f64 = -18.0;
const QUAD_REL_TOL: f64 = 1e-8;
const TAIL_MASS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Distribution {
    Lognormal,
    Loglogistic,
}

impl Distribution {
    fn log_pdf(self, z: f64) -> f64 {
        match self {
            Distribution::Lognormal => norm_log_pdf(z),
            Distribution::Loglogistic => logistic_log_pdf(z),
        }
    }

    fn log_sf(self, z: f64) -> f64 {
        match self {
            Distribution::Lognormal => norm_log_sf(z),
            Distribution::Loglogistic => logistic_log_sf(z),
        }
    }

    /// First and second derivative of `log f(z)`.
    fn d_log_pdf(self, z: f64) -> (f64, f64) {
        match self {
            Distribution::Lognormal => (-z, -1.0),
            Distribution::Loglogistic => {
                let f = logistic_cdf(z);
                (1.0 - 2.0 * f, -2.0 * f * (1.0 - f))
            }
        }
    }

    /// First and second derivative of `log S(z)`.
    fn d_log_sf(self, z: f64) -> (f64, f64) {
        match self {
            Distribution::Lognormal => {
                let h = norm_hazard(z);
                (-h, -h * (h - z))
            }
            Distribution::Loglogistic => {
                let f = logistic_cdf(z);
                (-f, -f * (1.0 - f))
            }
        }
    }

    /// Standardized value with upper-tail probability `p` (may be tiny).
    fn upper_quantile(self, log_p: f64) -> f64 {
        match self {
            Distribution::Lognormal => {
                if log_p > -700.0 {
                    -norm_quantile(libm::exp(log_p))
                } else {
                    libm::sqrt(-2.0 * log_p)
                }
            }
            Distribution::Loglogistic => {
                let p = libm::exp(log_p);
                libm::log1p(-p) - log_p
            }
        }
    }

    fn lower_quantile(self, p: f64) -> f64 {
        match self {
            Distribution::Lognormal => norm_quantile(p),
            Distribution::Loglogistic => logistic_quantile(p),
        }
    }
}

/// Fitted AFT model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AftFit {
    pub distribution: Distribution,
    pub intercept: f64,
    /// Coefficient on the forcing variable.
    pub slope: f64,
    /// Coefficient on the side or treatment indicator, when it is in the model.
    pub indicator_coef: Option<f64>,
    pub covariates: WorkingCovariates,
    /// Error scale (normal standard deviation or logistic scale).
    pub scale: f64,
    pub loglik: f64,
    pub iterations: usize,
}

impl AftFit {
    pub fn location(&self, forcing: f64, treated: bool) -> f64 {
        let x = self.covariates.design(forcing, treated);
        self.intercept + self.slope * x.get(0) + self.indicator_coef.unwrap_or(0.0) * x.get(1)
    }

    /// Right-censored log-likelihood of `sample` at these parameters.
    pub fn log_likelihood(&self, sample: &ObservedSample) -> f64 {
        let mut acc = CompensatedSum::new();
        let ls = libm::log(self.scale);
        for r in sample {
            let y = libm::log(r.time_obs);
            let z = (y - self.location(r.forcing, r.treated)) / self.scale;
            if r.event {
                acc.add(self.distribution.log_pdf(z) - ls - y);
            } else {
                acc.add(self.distribution.log_sf(z));
            }
        }
        acc.value()
    }

    /// `E(log T | T >= u)` by adaptive quadrature over the standardized error
    /// density, for either distribution.
    pub fn q_y_numeric(&self, u: f64, forcing: f64, treated: bool) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::NegativeU(u));
        }
        let dist = self.distribution;
        let loc = self.location(forcing, treated);
        let (z_lo, log_s_lo) = if u == 0.0 {
            let z = dist.lower_quantile(1e-15);
            (z, 0.0)
        } else {
            let z = (libm::log(u) - loc) / self.scale;
            (z, dist.log_sf(z))
        };
        // Integrate to the point leaving conditional tail mass TAIL_MASS.
        let z_hi = dist.upper_quantile(log_s_lo + libm::log(TAIL_MASS)).max(z_lo + 1.0);
        // E[e | e >= z_lo] = z_lo + int (z - z_lo) f(z) dz / S(z_lo)
        let excess = quadrature::integrate(
            |z| (z - z_lo) * libm::exp(dist.log_pdf(z) - log_s_lo),
            z_lo,
            z_hi,
            QUAD_REL_TOL,
            1e-14,
        )?;
        Ok(loc + self.scale * (z_lo + excess))
    }
}

/// `E(e | e >= a)` for the standard logistic: `a + (1 + e^a) log(1 + e^-a)`.
fn logistic_residual_mean(a: f64) -> f64 {
    if a > 0.0 {
        let x = libm::exp(-a);
        let l = libm::log1p(x);
        a + l + if x > 0.0 { l / x } else { 1.0 }
    } else {
        a + (1.0 + libm::exp(a)) * log1p_exp(-a)
    }
}

impl ConditionalMean for AftFit {
    fn q_y(&self, u: f64, forcing: f64, treated: bool) -> Result<f64> {
        match self.distribution {
            Distribution::Lognormal => {
                if !(u >= 0.0) {
                    return Err(Error::NegativeU(u));
                }
                let loc = self.location(forcing, treated);
                if u == 0.0 {
                    return Ok(loc);
                }
                let z = (libm::log(u) - loc) / self.scale;
                Ok(loc + self.scale * norm_hazard(z))
            }
            Distribution::Loglogistic => {
                if !(u >= 0.0) {
                    return Err(Error::NegativeU(u));
                }
                let loc = self.location(forcing, treated);
                if u == 0.0 {
                    return Ok(loc);
                }
                let a = (libm::log(u) - loc) / self.scale;
                Ok(loc + self.scale * logistic_residual_mean(a))
            }
        }
    }
}

struct Problem<'a> {
    sample: &'a ObservedSample,
    dist: Distribution,
    covariates: WorkingCovariates,
    log_times: Vec<f64>,
}

impl Problem<'_> {
    fn n_coef(&self) -> usize {
        1 + self.covariates.dim()
    }

    fn row(&self, i: usize) -> Vec<f64> {
        let r = &self.sample.records()[i];
        let x = self.covariates.design(r.forcing, r.treated);
        let mut row = vec![1.0];
        for k in 0..self.covariates.dim() {
            row.push(x.get(k));
        }
        row
    }

    fn loglik(&self, theta: &[f64]) -> f64 {
        let p = self.n_coef();
        let log_scale = theta[p];
        let scale = libm::exp(log_scale);
        let mut acc = CompensatedSum::new();
        for (i, r) in self.sample.iter().enumerate() {
            let row = self.row(i);
            let eta: f64 = row.iter().zip(theta).map(|(x, b)| x * b).sum();
            let z = (self.log_times[i] - eta) / scale;
            if r.event {
                acc.add(self.dist.log_pdf(z) - log_scale - self.log_times[i]);
            } else {
                acc.add(self.dist.log_sf(z));
            }
        }
        acc.value()
    }

    /// Gradient and Hessian in `(coefficients..., log scale)`.
    fn derivatives(&self, theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let p = self.n_coef();
        let m = p + 1;
        let scale = libm::exp(theta[p]);
        let mut grad = vec![0.0; m];
        let mut hess = vec![vec![0.0; m]; m];
        for (i, r) in self.sample.iter().enumerate() {
            let row = self.row(i);
            let eta: f64 = row.iter().zip(theta).map(|(x, b)| x * b).sum();
            let z = (self.log_times[i] - eta) / scale;
            let (a, da) = if r.event {
                self.dist.d_log_pdf(z)
            } else {
                self.dist.d_log_sf(z)
            };
            let delta = if r.event { 1.0 } else { 0.0 };
            for j in 0..p {
                grad[j] += -a * row[j] / scale;
                for k in 0..p {
                    hess[j][k] += da * row[j] * row[k] / (scale * scale);
                }
                let cross = row[j] * (da * z + a) / scale;
                hess[j][p] += cross;
                hess[p][j] += cross;
            }
            grad[p] += -a * z - delta;
            hess[p][p] += da * z * z + a * z;
        }
        (grad, hess)
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Censored maximum-likelihood fit by damped Newton iterations.
pub fn fit_aft(sample: &ObservedSample, distribution: Distribution, covariates: WorkingCovariates) -> Result<AftFit> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::TooFewRecords(n));
    }
    if !sample.iter().any(|r| r.event) {
        return Err(Error::NoEvents);
    }
    let log_times: Vec<f64> = sample.iter().map(|r| libm::log(r.time_obs)).collect();
    let problem = Problem {
        sample,
        dist: distribution,
        covariates,
        log_times,
    };
    let p = problem.n_coef();

    // Start from least squares on log observed times.
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let row = problem.row(i);
        for j in 0..p {
            xty[j] += row[j] * problem.log_times[i];
            for k in 0..p {
                xtx[j][k] += row[j] * row[k];
            }
        }
    }
    let mut beta = solve_dense(&mut xtx, &mut xty).unwrap_or_else(|| {
        let mut b = vec![0.0; p];
        b[0] = problem.log_times.iter().sum::<f64>() / n as f64;
        b
    });
    let resid_ss: f64 = (0..n)
        .map(|i| {
            let row = problem.row(i);
            let fit: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
            (problem.log_times[i] - fit) * (problem.log_times[i] - fit)
        })
        .sum();
    let resid_sd = libm::sqrt(resid_ss / n as f64);
    if resid_sd < 1e-12 && sample.iter().all(|r| r.event) {
        return Err(Error::NonConvergence {
            iterations: 0,
            gradient_norm: f64::INFINITY,
            detail: "residual spread is zero; scale estimate collapses to the boundary",
        });
    }
    let start_scale = match distribution {
        Distribution::Lognormal => resid_sd,
        Distribution::Loglogistic => resid_sd * libm::sqrt(3.0) / core::f64::consts::PI,
    }
    .max(1e-3);
    beta.push(libm::log(start_scale));
    let mut theta = beta;
    let mut ll = problem.loglik(&theta);

    let mut gnorm = f64::INFINITY;
    for iter in 1..=MAX_ITER {
        let (grad, hess) = problem.derivatives(&theta);
        gnorm = sup_norm(&grad);
        if gnorm < GRAD_TOL {
            return finish(&problem, theta, ll, iter - 1);
        }
        // Newton direction on the negative log-likelihood.
        let mut neg_h: Vec<Vec<f64>> = hess.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let mut dir = solve_dense(&mut neg_h, &mut grad.clone()).unwrap_or_else(|| grad.clone());
        let ascent: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if !(ascent > 0.0) {
            dir = grad.clone();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let cll = problem.loglik(&cand);
            if cll.is_finite() && cll >= ll - 1e-12 * ll.abs().max(1.0) {
                accepted = Some((cand, cll));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cll)) = accepted else {
            return Err(Error::NonConvergence {
                iterations: iter,
                gradient_norm: gnorm,
                detail: "line search could not increase the likelihood",
            });
        };
        let moved = sup_norm(&cand.iter().zip(&theta).map(|(a, b)| a - b).collect::<Vec<_>>());
        theta = cand;
        ll = cll;
        if theta[p] < MIN_LOG_SCALE {
            return Err(Error::NonConvergence {
                iterations: iter,
                gradient_norm: gnorm,
                detail: "scale estimate collapsed to the boundary",
            });
        }
        if moved < STEP_TOL {
            return finish(&problem, theta, ll, iter);
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITER,
        gradient_norm: gnorm,
        detail: "iteration cap reached",
    })
}

fn finish(problem: &Problem<'_>, theta: Vec<f64>, loglik: f64, iterations: usize) -> Result<AftFit> {
    let p = problem.n_coef();
    let indicator_coef = (problem.covariates.dim() > 1).then(|| theta[2]);
    if !loglik.is_finite() {
        return Err(Error::NonConvergence {
            iterations,
            gradient_norm: f64::NAN,
            detail: "log-likelihood is not finite",
        });
    }
    Ok(AftFit {
        distribution: problem.dist,
        intercept: theta[0],
        slope: theta[1],
        indicator_coef,
        covariates: problem.covariates,
        scale: libm::exp(theta[p]),
        loglik,
        iterations,
    })
}
