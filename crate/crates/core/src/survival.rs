//! Nonparametric fits of the censoring distribution.
//!
//! Censoring is the "event" here: a record with `event == false` contributes
//! a censoring time, and observed failures are treated as censored for the
//! purpose of this fit. When a failure and a censoring share a time, the
//! failure is removed from the risk set first.
//!
//! Both fits accept a truncation quantile `q`. Records whose observed time
//! exceeds the empirical `q`-quantile `omega` of observed times stay in every
//! risk set up to `omega` and never contribute a censoring jump, so the
//! fitted survival stays strictly positive after `omega`. The Kaplan-Meier
//! curve and the Nelson-Aalen hazard computed with the same `q` share jump
//! times and satisfy `G(t) = prod_{s <= t} (1 - dLambda(s))`.

use alloc::vec::Vec;

use crate::data::ObservedSample;
use crate::error::{Error, Result};
use crate::numeric::quantile_sorted;
use crate::step::StepFunction;

pub const DEFAULT_TRUNCATION_QUANTILE: f64 = 0.95;

/// Distinct censoring times with their censoring counts and risk-set sizes.
#[derive(Debug, Clone)]
struct CensoringTable {
    times: Vec<f64>,
    events: Vec<usize>,
    at_risk: Vec<usize>,
    omega: f64,
    n_truncated: usize,
}

fn censoring_table(sample: &ObservedSample, truncation_quantile: f64) -> Result<CensoringTable> {
    if !(truncation_quantile > 0.0 && truncation_quantile <= 1.0) {
        return Err(Error::InvalidArgument("truncation quantile must lie in (0, 1]"));
    }
    let mut sorted: Vec<f64> = sample.iter().map(|r| r.time_obs).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let omega = quantile_sorted(&sorted, truncation_quantile);
    let n_truncated = n - sorted.partition_point(|&t| t <= omega);
    if n_truncated > 0 && omega <= sorted[0] {
        return Err(Error::AllTruncated { omega });
    }

    let mut cens: Vec<f64> = sample
        .iter()
        .filter(|r| !r.event && r.time_obs <= omega)
        .map(|r| r.time_obs)
        .collect();
    cens.sort_by(f64::total_cmp);

    let mut times = Vec::new();
    let mut events = Vec::new();
    let mut at_risk = Vec::new();
    let mut i = 0;
    while i < cens.len() {
        let s = cens[i];
        let mut j = i;
        while j < cens.len() && cens[j] == s {
            j += 1;
        }
        let d = j - i;
        let beyond = n - sorted.partition_point(|&t| t <= s);
        times.push(s);
        events.push(d);
        at_risk.push(beyond + d);
        i = j;
    }
    Ok(CensoringTable {
        times,
        events,
        at_risk,
        omega,
        n_truncated,
    })
}

/// Kaplan-Meier estimate of the censoring survival `G(t) = P(C > t)`.
pub fn km_censoring_survival(sample: &ObservedSample, truncation_quantile: f64) -> Result<StepFunction> {
    let table = censoring_table(sample, truncation_quantile)?;
    Ok(km_from_table(&table))
}

/// Nelson-Aalen cumulative hazard of the censoring distribution.
pub fn nelson_aalen_censoring(sample: &ObservedSample, truncation_quantile: f64) -> Result<StepFunction> {
    let table = censoring_table(sample, truncation_quantile)?;
    Ok(na_from_table(&table))
}

fn km_from_table(table: &CensoringTable) -> StepFunction {
    let mut surv = 1.0;
    let values: Vec<f64> = table
        .events
        .iter()
        .zip(&table.at_risk)
        .map(|(&d, &r)| {
            surv *= 1.0 - d as f64 / r as f64;
            surv
        })
        .collect();
    debug_assert!(values.windows(2).all(|w| w[1] <= w[0]));
    debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
    StepFunction::new(table.times.clone(), values, 1.0).expect("censoring times are sorted and distinct")
}

fn na_from_table(table: &CensoringTable) -> StepFunction {
    let mut cum = 0.0;
    let values: Vec<f64> = table
        .events
        .iter()
        .zip(&table.at_risk)
        .map(|(&d, &r)| {
            cum += d as f64 / r as f64;
            cum
        })
        .collect();
    debug_assert!(values.windows(2).all(|w| w[1] >= w[0]));
    StepFunction::new(table.times.clone(), values, 0.0).expect("censoring times are sorted and distinct")
}

/// Both censoring fits from one pass, plus truncation diagnostics.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CensoringFit {
    pub survival: StepFunction,
    pub cumulative_hazard: StepFunction,
    /// Truncation point (the truncation quantile of observed times).
    pub omega: f64,
    /// Records whose observed time exceeds `omega`.
    pub n_truncated: usize,
}

pub fn fit_censoring(sample: &ObservedSample, truncation_quantile: f64) -> Result<CensoringFit> {
    let table = censoring_table(sample, truncation_quantile)?;
    Ok(CensoringFit {
        survival: km_from_table(&table),
        cumulative_hazard: na_from_table(&table),
        omega: table.omega,
        n_truncated: table.n_truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ObservedRecord;

    fn sample(rows: &[(f64, bool)]) -> ObservedSample {
        ObservedSample::new(
            rows.iter()
                .map(|&(t, e)| ObservedRecord::new(t, e, 0.0, false))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn three_record_product_limit() {
        let s = sample(&[(1.0, true), (2.0, false), (3.0, true)]);
        let g = km_censoring_survival(&s, 1.0).unwrap();
        assert_eq!(g.eval(1.9).unwrap(), 1.0);
        assert_eq!(g.eval(2.0).unwrap(), 0.5);
        assert_eq!(g.eval(10.0).unwrap(), 0.5);
        assert_eq!(g.eval_left(2.0).unwrap(), 1.0);
        assert_eq!(g.eval(0.0).unwrap(), 1.0);

        let na = nelson_aalen_censoring(&s, 1.0).unwrap();
        assert_eq!(na.jump_times(), &[2.0]);
        assert_eq!(na.values(), &[0.5]);
        assert_eq!(na.eval(1.0).unwrap(), 0.0);
    }

    #[test]
    fn no_censoring_gives_unit_survival_and_zero_hazard() {
        let s = sample(&[(1.0, true), (2.0, true), (4.0, true)]);
        let g = km_censoring_survival(&s, 1.0).unwrap();
        assert!(g.jump_times().is_empty());
        assert_eq!(g.eval(4.0).unwrap(), 1.0);
        let na = nelson_aalen_censoring(&s, 1.0).unwrap();
        assert_eq!(na.eval(100.0).unwrap(), 0.0);
    }

    #[test]
    fn single_censored_record() {
        let s = sample(&[(5.0, false)]);
        let na = nelson_aalen_censoring(&s, 1.0).unwrap();
        assert_eq!(na.eval_left(5.0).unwrap(), 0.0);
        assert_eq!(na.eval(5.0).unwrap(), 1.0);
        assert_eq!(km_censoring_survival(&s, 1.0).unwrap().eval(5.0).unwrap(), 0.0);
    }

    #[test]
    fn failures_leave_risk_set_before_tied_censorings() {
        // At t = 2 one failure and one censoring; only the censoring and the
        // record at t = 3 are at risk for the censoring jump.
        let s = sample(&[(2.0, true), (2.0, false), (3.0, false)]);
        let na = nelson_aalen_censoring(&s, 1.0).unwrap();
        assert_eq!(na.values(), &[0.5, 1.5]);
    }

    #[test]
    fn truncation_keeps_survival_positive() {
        let rows: Vec<(f64, bool)> = (1..=20).map(|i| (i as f64, i % 2 == 0)).collect();
        let s = sample(&rows);
        let untrunc = km_censoring_survival(&s, 1.0).unwrap();
        let fit = fit_censoring(&s, 0.5).unwrap();
        // omega = quantile(1..20, 0.5) = 10.5
        assert_eq!(fit.omega, 10.5);
        assert_eq!(fit.n_truncated, 10);
        assert!(fit.survival.jump_times().iter().all(|&t| t <= 10.5));
        assert!(fit.survival.eval(1e6).unwrap() > 0.0);
        // Below omega the two fits coincide.
        for t in [0.5, 3.0, 7.0, 10.0] {
            assert_eq!(fit.survival.eval(t).unwrap(), untrunc.eval(t).unwrap());
        }
    }

    #[test]
    fn degenerate_truncation_is_reported() {
        let s = sample(&[(1.0, false), (1.0, false), (1.0, true), (1.0, true), (9.0, true)]);
        assert!(matches!(fit_censoring(&s, 0.5), Err(Error::AllTruncated { .. })));
        assert!(fit_censoring(&s, 0.0).is_err());
    }
}
