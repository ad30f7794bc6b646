//! Reference computations written directly from the definitions, shared by
//! the property suites and the acceptance run. Nothing here calls into the
//! library's numerical paths.
#![allow(dead_code, clippy::needless_range_loop)]

use rdcensor_core::TransformedSample;

/// Type-7 empirical quantile.
pub fn type7(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Product-limit fit of the censoring distribution as `(time, G, dLambda)`
/// per distinct censoring time at or below the truncation point. The risk
/// set at `s` is every record with time above `s` plus those censored at
/// `s`.
pub fn km_oracle(recs: &[(f64, bool)], q: f64) -> Vec<(f64, f64, f64)> {
    let times: Vec<f64> = recs.iter().map(|r| r.0).collect();
    let omega = type7(&times, q);
    let mut cens: Vec<f64> = recs.iter().filter(|r| !r.1 && r.0 <= omega).map(|r| r.0).collect();
    cens.sort_by(f64::total_cmp);
    cens.dedup();
    let mut g = 1.0;
    let mut out = Vec::new();
    for s in cens {
        let d = recs.iter().filter(|r| !r.1 && r.0 == s).count() as f64;
        let at_risk = recs.iter().filter(|r| r.0 > s).count() as f64 + d;
        g *= 1.0 - d / at_risk;
        out.push((s, g, d / at_risk));
    }
    out
}

/// Weighted least squares through a Householder QR of `sqrt(K) X`, with
/// `X = [1, w - center]` and triangular weights; returns intercept and
/// slope, or `None` for a rank-deficient design.
pub fn wls_qr(points: &[(f64, f64)], center: f64, h: f64) -> Option<(f64, f64)> {
    let rows: Vec<([f64; 2], f64)> = points
        .iter()
        .filter_map(|&(w, y)| {
            let k = (1.0 - ((w - center) / h).abs()).max(0.0);
            (k > 0.0).then(|| {
                let s = k.sqrt();
                ([s, s * (w - center)], s * y)
            })
        })
        .collect();
    if rows.len() < 2 {
        return None;
    }
    let mut a: Vec<[f64; 2]> = rows.iter().map(|r| r.0).collect();
    let mut b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let m = a.len();
    for col in 0..2 {
        let norm = (col..m).map(|i| a[i][col] * a[i][col]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if a[col][col] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (col..m).map(|i| a[i][col]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in col..2 {
            let dot: f64 = (col..m).map(|i| v[i - col] * a[i][c]).sum();
            for i in col..m {
                a[i][c] -= 2.0 * dot / vnorm2 * v[i - col];
            }
        }
        let dot: f64 = (col..m).map(|i| v[i - col] * b[i]).sum();
        for i in col..m {
            b[i] -= 2.0 * dot / vnorm2 * v[i - col];
        }
    }
    if a[1][1].abs() <= 1e-9 * a[0][0].abs() {
        return None;
    }
    let slope = b[1] / a[1][1];
    let intercept = (b[0] - a[0][1] * slope) / a[0][0];
    Some((intercept, slope))
}

/// Cross-validation criterion by direct double loop: for each record inside
/// the trimmed window, fit a line on the records strictly on the same side
/// of it with the kernel centered at the record, and square the error of
/// the intercept. `None` when the window is empty.
pub fn cv_oracle(w: &[f64], y: &[f64], c: f64, h: f64, xi: f64) -> Option<f64> {
    let left: Vec<f64> = w.iter().copied().filter(|&x| x < c).collect();
    let right: Vec<f64> = w.iter().copied().filter(|&x| x >= c).collect();
    let a_l = if left.is_empty() { c } else { type7(&left, xi) };
    let a_r = if right.is_empty() { c } else { type7(&right, 1.0 - xi) };
    let window: Vec<usize> = (0..w.len()).filter(|&i| w[i] >= a_l && w[i] <= a_r).collect();
    if window.is_empty() {
        return None;
    }
    let mut sse = 0.0;
    let mut skipped = 0;
    for &i in &window {
        let pts: Vec<(f64, f64)> = (0..w.len())
            .filter(|&j| if w[i] >= c { w[j] > w[i] } else { w[j] < w[i] })
            .map(|j| (w[j], y[j]))
            .collect();
        let mut xs: Vec<f64> = pts
            .iter()
            .filter(|p| ((p.0 - w[i]) / h).abs() < 1.0)
            .map(|p| p.0)
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        match wls_qr(&pts, w[i], h) {
            Some((a, _)) if xs.len() >= 2 => sse += (y[i] - a).powi(2),
            _ => skipped += 1,
        }
    }
    let nw = window.len();
    if skipped as f64 > 0.2 * nw as f64 || skipped == nw {
        return Some(f64::INFINITY);
    }
    Some(sse / (nw - skipped) as f64 * nw as f64 / w.len() as f64)
}

type M2 = [[f64; 2]; 2];

fn inv2(m: M2) -> M2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

fn mul2(a: M2, b: M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Records of one side with positive kernel weight, as
/// `(index, weight, x = (1, w - c))`.
struct SideRows(Vec<(usize, f64, [f64; 2])>);

impl SideRows {
    fn new(forcing: &[f64], cutoff: f64, right: bool, h: f64) -> Self {
        Self(
            (0..forcing.len())
                .filter(|&i| (forcing[i] >= cutoff) == right)
                .filter_map(|i| {
                    let d = forcing[i] - cutoff;
                    let k = (1.0 - (d / h).abs()).max(0.0);
                    (k > 0.0).then_some((i, k, [1.0, d]))
                })
                .collect(),
        )
    }

    fn outer(&self, weight: impl Fn(usize, f64) -> f64) -> M2 {
        let mut a = [[0.0; 2]; 2];
        for &(i, k, x) in &self.0 {
            let wt = weight(i, k);
            for r in 0..2 {
                for c in 0..2 {
                    a[r][c] += wt * x[r] * x[c];
                }
            }
        }
        a
    }

    fn wls(&self, y: &[f64]) -> [f64; 2] {
        let ainv = inv2(self.outer(|_, k| k));
        let mut xty = [0.0; 2];
        for &(i, k, x) in &self.0 {
            xty[0] += k * x[0] * y[i];
            xty[1] += k * x[1] * y[i];
        }
        [
            ainv[0][0] * xty[0] + ainv[0][1] * xty[1],
            ainv[1][0] * xty[0] + ainv[1][1] * xty[1],
        ]
    }

    /// `[A^-1 M A^-1]_00` with `A = X'KX` and `M = sum K^2 r s x x'`.
    fn sandwich(&self, r: &[f64], s: &[f64]) -> f64 {
        let ainv = inv2(self.outer(|_, k| k));
        let m = self.outer(|i, k| k * k * r[i] * s[i]);
        mul2(mul2(ainv, m), ainv)[0][0]
    }
}

/// Residuals from separate weighted line fits on each side.
pub fn fit_residuals(forcing: &[f64], y: &[f64], cutoff: f64, h: f64) -> Vec<f64> {
    let mut r = vec![0.0; forcing.len()];
    for right in [false, true] {
        let coef = SideRows::new(forcing, cutoff, right, h).wls(y);
        for i in 0..forcing.len() {
            if (forcing[i] >= cutoff) == right {
                r[i] = y[i] - coef[0] - coef[1] * (forcing[i] - cutoff);
            }
        }
    }
    r
}

/// `sqrt(k/(k+1))` times the gap between each value and the mean of its `k`
/// nearest same-side neighbors, ties broken by index, found by full sort.
pub fn nn_residuals(forcing: &[f64], y: &[f64], cutoff: f64, k: usize) -> Vec<f64> {
    (0..forcing.len())
        .map(|i| {
            let right = forcing[i] >= cutoff;
            let mut others: Vec<(f64, usize)> = (0..forcing.len())
                .filter(|&j| j != i && (forcing[j] >= cutoff) == right)
                .map(|j| ((forcing[j] - forcing[i]).abs(), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mean = others[..k].iter().map(|o| y[o.1]).sum::<f64>() / k as f64;
            (k as f64 / (k as f64 + 1.0)).sqrt() * (y[i] - mean)
        })
        .collect()
}

/// Sharp sandwich variance summed over sides, or the delta-method ratio
/// variance when treatment residuals and both jumps are given.
pub fn variance(ts: &TransformedSample, cutoff: f64, h: f64, ry: &[f64], rz: Option<(&[f64], f64, f64)>) -> f64 {
    let sides = [
        SideRows::new(&ts.forcing, cutoff, true, h),
        SideRows::new(&ts.forcing, cutoff, false, h),
    ];
    let vyy: f64 = sides.iter().map(|s| s.sandwich(ry, ry)).sum();
    match rz {
        None => vyy,
        Some((rz, ty, tz)) => {
            let vyz: f64 = sides.iter().map(|s| s.sandwich(ry, rz)).sum();
            let vzz: f64 = sides.iter().map(|s| s.sandwich(rz, rz)).sum();
            (vyy / tz.powi(2) - 2.0 * ty * vyz / tz.powi(3) + ty * ty * vzz / tz.powi(4)).max(0.0)
        }
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
