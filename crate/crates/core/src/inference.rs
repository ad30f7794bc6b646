//! Standard errors for the discontinuity estimate.
//!
//! Both analytic schemes use the sandwich
//! `(1/n) e1' G^-1 P G^-1 e1` per side, with
//! `G = (1/n) sum K_i b_i b_i'` and `P = (1/n) sum K_i^2 b_i b_i' r_i s_i`,
//! `b_i = (1, (W_i - c) / h)` and `r, s` the residual proxies of the two
//! responses involved. The plug-in scheme uses local-linear fit residuals,
//! the nearest-neighbor scheme uses `sqrt(k/(k+1))` times the deviation from
//! the mean of the `k` closest same-side records.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::data::ObservedSample;
use crate::error::{Error, Result, Side};
use crate::estimate::{Design, RdEstimate};
use crate::exec::Executor;
use crate::local_linear::{kernel_triangular, on_side, SideFit};
use crate::numeric::{quantile_sorted, sample_sd, CompensatedSum, Sym2};
use crate::pipeline::{point_estimate, PipelineConfig};
use crate::special::norm_quantile;
use crate::transform::TransformedSample;

pub const DEFAULT_NEIGHBORS: usize = 3;
pub const DEFAULT_LEVEL: f64 = 0.95;
pub const DEFAULT_BOOT_REPS: usize = 50;
/// Largest tolerated fraction of failed bootstrap replicates.
const MAX_BOOT_FAILURE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// `center +- z_{1 - (1 - level)/2} * se`.
    pub fn normal(center: f64, se: f64, level: f64) -> Self {
        let z = norm_quantile(0.5 + level / 2.0);
        Self {
            lower: center - z * se,
            upper: center + z * se,
        }
    }
}

/// Per-side sandwich ingredients, normalized by the full sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SideComponents {
    pub gamma: Sym2,
    pub phi_yy: Sym2,
    pub phi_yz: Option<Sym2>,
    pub phi_zz: Option<Sym2>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceComponents {
    pub plus: SideComponents,
    pub minus: SideComponents,
    pub n: usize,
}

/// Sandwich pieces `(V_yy, V_yz, V_zz)` summed over both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichTerms {
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

impl VarianceComponents {
    pub fn terms(&self) -> Result<SandwichTerms> {
        let n = self.n as f64;
        let mut t = SandwichTerms {
            yy: 0.0,
            yz: 0.0,
            zz: 0.0,
        };
        for (side, c) in [(Side::Right, &self.plus), (Side::Left, &self.minus)] {
            let inv = c.gamma.inverse().ok_or(Error::SingularGamma { side })?;
            t.yy += inv.sandwich_00(&c.phi_yy) / n;
            if let Some(m) = &c.phi_yz {
                t.yz += inv.sandwich_00(m) / n;
            }
            if let Some(m) = &c.phi_zz {
                t.zz += inv.sandwich_00(m) / n;
            }
        }
        Ok(t)
    }

    /// Sharp variance, or the delta-method ratio variance when the estimate
    /// is fuzzy. Rounding below zero is clamped.
    pub fn variance(&self, est: &RdEstimate) -> Result<f64> {
        let t = self.terms()?;
        let v = match (est.design, est.tau_z) {
            (Design::Fuzzy, Some(tz)) => {
                let ty = est.tau_y;
                t.yy / (tz * tz) - 2.0 * ty * t.yz / (tz * tz * tz) + ty * ty * t.zz / (tz * tz * tz * tz)
            }
            _ => t.yy,
        };
        Ok(v.max(0.0))
    }
}

#[derive(Default)]
struct SymSum {
    a: CompensatedSum,
    b: CompensatedSum,
    c: CompensatedSum,
}

impl SymSum {
    fn add(&mut self, u: f64, w: f64) {
        self.a.add(w);
        self.b.add(w * u);
        self.c.add(w * u * u);
    }

    fn finish(&self, n: f64) -> Sym2 {
        Sym2::new(self.a.value() / n, self.b.value() / n, self.c.value() / n)
    }
}

fn side_components(
    ts: &TransformedSample,
    cutoff: f64,
    h: f64,
    side: Side,
    ry: &[f64],
    rz: Option<&[f64]>,
) -> SideComponents {
    let n = ts.len() as f64;
    let (mut g, mut yy, mut yz, mut zz) = (
        SymSum::default(),
        SymSum::default(),
        SymSum::default(),
        SymSum::default(),
    );
    for (i, &w) in ts.forcing.iter().enumerate() {
        if !on_side(w, cutoff, side) {
            continue;
        }
        let u = (w - cutoff) / h;
        let k = kernel_triangular(u);
        if k <= 0.0 {
            continue;
        }
        g.add(u, k);
        let k2 = k * k;
        yy.add(u, k2 * ry[i] * ry[i]);
        if let Some(rz) = rz {
            yz.add(u, k2 * ry[i] * rz[i]);
            zz.add(u, k2 * rz[i] * rz[i]);
        }
    }
    SideComponents {
        gamma: g.finish(n),
        phi_yy: yy.finish(n),
        phi_yz: rz.map(|_| yz.finish(n)),
        phi_zz: rz.map(|_| zz.finish(n)),
    }
}

fn components(est: &RdEstimate, ts: &TransformedSample, ry: &[f64], rz: Option<&[f64]>) -> VarianceComponents {
    let (c, h) = (est.cutoff, est.bandwidth);
    VarianceComponents {
        plus: side_components(ts, c, h, Side::Right, ry, rz),
        minus: side_components(ts, c, h, Side::Left, ry, rz),
        n: ts.len(),
    }
}

fn fit_residuals(forcing: &[f64], response: &[f64], cutoff: f64, left: &SideFit, right: &SideFit) -> Vec<f64> {
    forcing
        .iter()
        .zip(response)
        .map(|(&w, &y)| {
            let fit = if on_side(w, cutoff, Side::Right) { right } else { left };
            y - fit.predict(w, cutoff)
        })
        .collect()
}

/// Sandwich ingredients with local-linear fit residuals.
pub fn plugin_components(est: &RdEstimate, ts: &TransformedSample) -> VarianceComponents {
    let ry = fit_residuals(
        &ts.forcing,
        &ts.pseudo_y,
        est.cutoff,
        &est.y_fits.left,
        &est.y_fits.right,
    );
    let rz = est
        .z_fits
        .as_ref()
        .map(|z| fit_residuals(&ts.forcing, &ts.treated_response(), est.cutoff, &z.left, &z.right));
    components(est, ts, &ry, rz.as_deref())
}

pub fn variance_plugin(est: &RdEstimate, ts: &TransformedSample) -> Result<f64> {
    plugin_components(est, ts).variance(est)
}

/// Indices of the `k` records nearest to each record on the same side,
/// excluding itself; ties in distance go to the lower record index.
pub fn nearest_neighbors(forcing: &[f64], cutoff: f64, k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("neighbor count must be positive"));
    }
    let mut out: Vec<Vec<usize>> = alloc::vec![Vec::new(); forcing.len()];
    for side in [Side::Left, Side::Right] {
        let mut idx: Vec<usize> = (0..forcing.len())
            .filter(|&i| on_side(forcing[i], cutoff, side))
            .collect();
        if idx.len() <= k {
            return Err(Error::TooFewNeighbors {
                side,
                available: idx.len(),
                neighbors: k,
            });
        }
        idx.sort_by(|&a, &b| forcing[a].total_cmp(&forcing[b]).then(a.cmp(&b)));
        let m = idx.len();
        let mut cand: Vec<(f64, usize)> = Vec::new();
        for p in 0..m {
            let i = idx[p];
            let wi = forcing[i];
            let mut lo = p.saturating_sub(k);
            let mut hi = (p + k).min(m - 1);
            cand.clear();
            cand.extend(
                (lo..=hi)
                    .filter(|&q| q != p)
                    .map(|q| ((forcing[idx[q]] - wi).abs(), idx[q])),
            );
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let radius = cand[k - 1].0;
            // pull in records tied at the k-th distance beyond the initial span
            while lo > 0 && (forcing[idx[lo - 1]] - wi).abs() <= radius {
                lo -= 1;
                cand.push(((forcing[idx[lo]] - wi).abs(), idx[lo]));
            }
            while hi + 1 < m && (forcing[idx[hi + 1]] - wi).abs() <= radius {
                hi += 1;
                cand.push(((forcing[idx[hi]] - wi).abs(), idx[hi]));
            }
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            out[i] = cand[..k].iter().map(|c| c.1).collect();
        }
    }
    Ok(out)
}

fn nn_residuals(values: &[f64], neighbors: &[Vec<usize>], k: usize) -> Vec<f64> {
    let factor = libm::sqrt(k as f64 / (k as f64 + 1.0));
    values
        .iter()
        .zip(neighbors)
        .map(|(&v, nb)| {
            let mean = nb.iter().map(|&j| values[j]).sum::<f64>() / k as f64;
            factor * (v - mean)
        })
        .collect()
}

/// Sandwich ingredients with nearest-neighbor variance proxies.
pub fn nn_components(est: &RdEstimate, ts: &TransformedSample, k: usize) -> Result<VarianceComponents> {
    let nb = nearest_neighbors(&ts.forcing, est.cutoff, k)?;
    let ry = nn_residuals(&ts.pseudo_y, &nb, k);
    let rz = est.z_fits.map(|_| nn_residuals(&ts.treated_response(), &nb, k));
    Ok(components(est, ts, &ry, rz.as_deref()))
}

pub fn variance_nn(est: &RdEstimate, ts: &TransformedSample, k: usize) -> Result<f64> {
    nn_components(est, ts, k)?.variance(est)
}

/// Sample standard deviation of replicate estimates and their
/// `(1 - level)/2`, `(1 + level)/2` empirical quantiles.
pub fn summarize_replicates(taus: &[f64], level: f64) -> Result<(f64, Interval)> {
    if taus.len() < 2 {
        return Err(Error::InvalidArgument("at least two replicate estimates are required"));
    }
    let mut sorted = taus.to_vec();
    sorted.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok((
        sample_sd(taus),
        Interval {
            lower: quantile_sorted(&sorted, alpha / 2.0),
            upper: quantile_sorted(&sorted, 1.0 - alpha / 2.0),
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BootstrapResult {
    pub se: f64,
    pub ci_empirical: Interval,
    pub reps: usize,
    pub failed: usize,
    /// Failed replicates by error kind.
    pub failures: BTreeMap<alloc::string::String, usize>,
    /// Replicate estimates in replicate order; failed replicates are omitted.
    pub taus: Vec<f64>,
}

/// Nonparametric bootstrap that resamples records and reruns the full
/// pipeline at a fixed bandwidth. Replicate `r` draws from stream `r` of
/// `seed`.
pub fn bootstrap<E: Executor>(
    sample: &ObservedSample,
    cfg: &PipelineConfig,
    bandwidth: f64,
    reps: usize,
    seed: u64,
    exec: &E,
) -> Result<BootstrapResult> {
    use rand::Rng;
    if reps < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least two replicates"));
    }
    let n = sample.len();
    let outcomes = exec.map_indexed(reps, |r| {
        let mut rng = crate::rng::stream(seed, r as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        point_estimate(&sample.select(&idx), cfg, Some(bandwidth)).map(|p| p.estimate.tau)
    });
    let mut taus = Vec::with_capacity(reps);
    let mut failures = BTreeMap::new();
    let mut kinds = BTreeMap::new();
    for o in outcomes {
        match o {
            Ok(t) => taus.push(t),
            Err(e) => {
                *failures.entry(alloc::string::String::from(e.kind())).or_insert(0) += 1;
                *kinds.entry(e.kind()).or_insert(0) += 1;
            }
        }
    }
    let failed = reps - taus.len();
    if failed as f64 > MAX_BOOT_FAILURE * reps as f64 || taus.len() < 2 {
        return Err(Error::TooManyFailedReplicates {
            failed,
            total: reps,
            most_common: crate::simulation::most_common(&kinds),
        });
    }
    let (se, ci_empirical) = summarize_replicates(&taus, cfg.level)?;
    Ok(BootstrapResult {
        se,
        ci_empirical,
        reps,
        failed,
        failures,
        taus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_replicates() {
        let (se, ci) = summarize_replicates(&[0.0, 2.0], 0.95).unwrap();
        assert!((se - libm::sqrt(2.0)).abs() < 1e-15);
        assert!(ci.lower >= 0.0 && ci.upper <= 2.0);
        assert!((ci.lower - 0.05).abs() < 1e-12 && (ci.upper - 1.95).abs() < 1e-12);
    }

    #[test]
    fn identical_replicates() {
        let (se, _) = summarize_replicates(&[0.7; 10], 0.95).unwrap();
        assert_eq!(se, 0.0);
    }

    #[test]
    fn nn_two_point_side() {
        // left side {0.1, 0.2}, right side {0.6, 0.8}
        let w = [0.1, 0.2, 0.6, 0.8];
        let nb = nearest_neighbors(&w, 0.5, 1).unwrap();
        assert_eq!(nb[0], alloc::vec![1]);
        assert_eq!(nb[3], alloc::vec![2]);
        let r = nn_residuals(&[1.0, 4.0, 0.0, 0.0], &nb, 1);
        assert!((r[0] * r[0] - 4.5).abs() < 1e-12);
        assert!((r[1] * r[1] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn nn_ties_go_to_lower_index() {
        let w = [0.0, 0.2, 0.1, -0.1, 0.9, 0.8];
        let nb = nearest_neighbors(&w, 0.5, 1).unwrap();
        // record 0 at 0.0 is equidistant from records 2 and 3
        assert_eq!(nb[0], alloc::vec![2]);
    }

    #[test]
    fn too_few_neighbors() {
        let w = [0.1, 0.2, 0.6, 0.8, 0.9];
        assert_eq!(
            nearest_neighbors(&w, 0.5, 2).unwrap_err(),
            Error::TooFewNeighbors {
                side: Side::Left,
                available: 2,
                neighbors: 2
            }
        );
    }
}
