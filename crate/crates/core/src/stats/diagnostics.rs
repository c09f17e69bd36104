//! Field suprema, concentration diagnostics and the quantile comparison under
//! an independent perturbation.

use super::quantile::{bootstrap, estimate_quantile, quantile_estimate, quantile_sorted, Estimate, QuantileTable, BOOTSTRAP_RESAMPLES};
use super::StatRow;
use crate::error::{invalid, Result};
use crate::seeds::derive_seed;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// Samples of `sup_{[0,1]²} φ_{0,n}` for one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupSamples {
    /// Scale index.
    pub n: u32,
    /// One supremum per field sample.
    pub sups: Vec<f64>,
}

/// Supremum statistics of one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupRow {
    /// Scale index.
    pub n: u32,
    /// Number of samples.
    pub samples: usize,
    /// Mean of the supremum.
    pub mean: Estimate,
    /// 5%, 50% and 95% quantiles.
    pub quantiles: (f64, f64, f64),
    /// `log Ê[e^{γ sup}]`.
    pub log_exp_moment: Estimate,
    /// `log Ê[e^{γ sup}] / (n γ log 4)`; `None` when `n γ = 0`.
    pub envelope_ratio: Option<f64>,
}

/// Least-squares line `y = a + b x` with the standard error of `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    /// Intercept.
    pub intercept: f64,
    /// Slope.
    pub slope: f64,
    /// Standard error of the slope from the per-point standard errors.
    pub slope_se: f64,
}

/// Weighted least squares with weights `1/se²` (unit weights when any se vanishes).
pub fn fit_line(x: &[f64], y: &[f64], se: &[f64]) -> Result<LineFit> {
    if x.len() < 2 || x.len() != y.len() || y.len() != se.len() {
        return invalid("a line fit needs at least two points with matching errors");
    }
    let unit = se.iter().any(|s| !(*s > 0.0 && s.is_finite()));
    let w: Vec<f64> = se.iter().map(|s| if unit { 1.0 } else { 1.0 / (s * s) }).collect();
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("a line fit needs at least two distinct abscissae");
    }
    let slope = w.iter().zip(x).zip(y).map(|((w, x), y)| w * (x - mx) * (y - my)).sum::<f64>() / sxx;
    let slope_se = if unit {
        let resid: f64 = x.iter().zip(y).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
        let dof = (x.len() as f64 - 2.0).max(1.0);
        (resid / dof / sxx).sqrt()
    } else {
        (1.0 / sxx).sqrt()
    };
    Ok(LineFit { intercept: my - slope * mx, slope, slope_se })
}

/// Supremum statistics across scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupReport {
    /// `γ` of the exponential moments.
    pub gamma: f64,
    /// Rows in increasing `n`.
    pub rows: Vec<SupRow>,
    /// Fit of `E[sup φ_{0,n}]` against `n`, when at least two scales are present.
    pub growth: Option<LineFit>,
}

impl SupReport {
    /// Rows for CSV export.
    pub fn stat_rows(&self) -> Vec<StatRow> {
        let mut out = Vec::new();
        for r in &self.rows {
            out.push(r.mean.row(r.n, "mean_sup"));
            out.push(StatRow { n: r.n, statistic: "sup_q05".into(), value: r.quantiles.0, se: f64::NAN, ci_low: f64::NAN, ci_high: f64::NAN });
            out.push(StatRow { n: r.n, statistic: "sup_q50".into(), value: r.quantiles.1, se: f64::NAN, ci_low: f64::NAN, ci_high: f64::NAN });
            out.push(StatRow { n: r.n, statistic: "sup_q95".into(), value: r.quantiles.2, se: f64::NAN, ci_low: f64::NAN, ci_high: f64::NAN });
            out.push(r.log_exp_moment.row(r.n, "log_exp_moment"));
            if let Some(e) = r.envelope_ratio {
                out.push(StatRow { n: r.n, statistic: "envelope_ratio".into(), value: e, se: f64::NAN, ci_low: f64::NAN, ci_high: f64::NAN });
            }
        }
        if let Some(g) = self.growth {
            let n = self.rows.last().map_or(0, |r| r.n);
            out.push(StatRow {
                n,
                statistic: "sup_growth_slope".into(),
                value: g.slope,
                se: g.slope_se,
                ci_low: g.slope - 1.96 * g.slope_se,
                ci_high: g.slope + 1.96 * g.slope_se,
            });
        }
        out
    }
}

/// Distribution of field suprema, its growth in `n` and exponential moments.
pub fn sup_field_report(samples: &[SupSamples], gamma: f64, seed: u64) -> Result<SupReport> {
    if samples.is_empty() || samples.iter().any(|s| s.sups.len() < 2) {
        return invalid("every scale needs at least two supremum samples");
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return invalid(format!("gamma must be ≥ 0, got {gamma}"));
    }
    let mut order: Vec<&SupSamples> = samples.iter().collect();
    order.sort_by_key(|s| s.n);
    let mut rows = Vec::new();
    for s in order {
        let mut sorted = s.sups.clone();
        sorted.sort_by(f64::total_cmp);
        let x = &s.sups;
        let log_mgf = |idx: &[usize]| {
            let m = idx.iter().map(|&i| x[i]).fold(f64::NEG_INFINITY, f64::max);
            let mean = idx.iter().map(|&i| (gamma * (x[i] - m)).exp()).sum::<f64>() / idx.len() as f64;
            gamma * m + mean.ln()
        };
        let log_exp_moment = bootstrap(x.len(), BOOTSTRAP_RESAMPLES, derive_seed(seed, "sup-mgf", &[s.n as u64]), log_mgf)?;
        let scale = s.n as f64 * gamma * 2.0 * LN_2;
        rows.push(SupRow {
            n: s.n,
            samples: x.len(),
            mean: Estimate::mean_of(x),
            quantiles: (quantile_sorted(&sorted, 0.05), quantile_sorted(&sorted, 0.5), quantile_sorted(&sorted, 0.95)),
            envelope_ratio: (scale > 0.0).then(|| log_exp_moment.value / scale),
            log_exp_moment,
        });
    }
    let growth = if rows.len() >= 2 {
        let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.mean.value).collect();
        let se: Vec<f64> = rows.iter().map(|r| r.mean.se).collect();
        Some(fit_line(&x, &y, &se)?)
    } else {
        None
    };
    Ok(SupReport { gamma, rows, growth })
}

/// Spread of `log L_{1,1} − log μ̂_n` for one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    /// Scale index.
    pub n: u32,
    /// Number of samples.
    pub samples: usize,
    /// Interquartile range with bootstrap error.
    pub iqr: Estimate,
}

/// Heuristic tightness diagnostics; no ground truth is asserted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    /// Rows in increasing `n`.
    pub rows: Vec<ConcentrationRow>,
    /// Fit of the IQR against `n`.
    pub trend: LineFit,
    /// `δ_n` for the tabulated scales, when a quantile table was supplied.
    pub delta: Vec<(u32, f64, (f64, f64))>,
    /// `"heuristic: consistent with tight"` when the slope's 95% interval
    /// reaches zero, `"heuristic: growing spread"` otherwise.
    pub verdict: String,
}

impl ConcentrationReport {
    /// Rows for CSV export.
    pub fn stat_rows(&self) -> Vec<StatRow> {
        let mut out: Vec<StatRow> = self.rows.iter().map(|r| r.iqr.row(r.n, "iqr_log_l11")).collect();
        let n = self.rows.last().map_or(0, |r| r.n);
        let t = self.trend;
        out.push(StatRow { n, statistic: "iqr_slope".into(), value: t.slope, se: t.slope_se, ci_low: t.slope - 1.96 * t.slope_se, ci_high: t.slope + 1.96 * t.slope_se });
        for &(k, d, (lo, hi)) in &self.delta {
            out.push(StatRow { n: k, statistic: "delta_n".into(), value: d, se: f64::NAN, ci_low: lo, ci_high: hi });
        }
        out
    }
}

/// Interquartile ranges of the recentred log lengths across scales.
pub fn concentration_diagnostics(samples: &[(u32, Vec<f64>)], table: Option<&QuantileTable>, seed: u64) -> Result<ConcentrationReport> {
    if samples.len() < 2 {
        return invalid("concentration diagnostics need at least two scales");
    }
    let mut order: Vec<&(u32, Vec<f64>)> = samples.iter().collect();
    order.sort_by_key(|s| s.0);
    let mut rows = Vec::new();
    for (n, x) in order {
        if x.len() < 4 {
            return invalid(format!("scale {n} needs at least four samples"));
        }
        // Recentring by the median does not change the IQR.
        let iqr = bootstrap(x.len(), BOOTSTRAP_RESAMPLES, derive_seed(seed, "iqr", &[*n as u64]), |idx| {
            let mut v: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
            v.sort_by(f64::total_cmp);
            quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)
        })?;
        rows.push(ConcentrationRow { n: *n, samples: x.len(), iqr });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.iqr.value).collect();
    let se: Vec<f64> = rows.iter().map(|r| r.iqr.se).collect();
    let trend = fit_line(&xs, &ys, &se)?;
    let verdict = if trend.slope - 1.96 * trend.slope_se <= 0.0 { "heuristic: consistent with tight" } else { "heuristic: growing spread" };
    let delta = table.map_or_else(Vec::new, |t| t.rows.iter().map(|r| (r.n, r.delta, r.delta_ci)).collect());
    Ok(ConcentrationReport { rows, trend, delta, verdict: verdict.into() })
}

/// Both quantile inequalities for `L` under `Φ` and under `Φ + δΦ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    /// `ε`.
    pub epsilon: f64,
    /// `e^{C'/2}/ε` with `C' = (γ/2)² C`.
    pub factor: f64,
    /// `l^{Φ+δΦ}(ε)`.
    pub lower_perturbed: Estimate,
    /// `l^{Φ}(2ε)`.
    pub lower_base: Estimate,
    /// `l^{Φ+δΦ}(ε) ≤ factor · l^{Φ}(2ε)` within 3 combined SE.
    pub lower_passed: bool,
    /// `l̄^{Φ+δΦ}(2ε)`.
    pub upper_perturbed: Estimate,
    /// `l̄^{Φ}(ε)`.
    pub upper_base: Estimate,
    /// `l̄^{Φ+δΦ}(2ε) ≤ factor · l̄^{Φ}(ε)` within 3 combined SE.
    pub upper_passed: bool,
}

impl LemmaReport {
    /// Rows for CSV export.
    pub fn stat_rows(&self, n: u32) -> Vec<StatRow> {
        vec![
            self.lower_perturbed.row(n, "l_perturbed_eps"),
            self.lower_base.row(n, "l_base_2eps"),
            self.upper_perturbed.row(n, "l_bar_perturbed_2eps"),
            self.upper_base.row(n, "l_bar_base_eps"),
        ]
    }
}

/// Checks `l^{Φ+δΦ}(ε) ≤ ε^{-1} e^{C'/2} l^Φ(2ε)` and `l̄^{Φ+δΦ}(2ε) ≤ ε^{-1} e^{C'/2} l̄^Φ(ε)`.
///
/// `base` and `perturbed` are crossing lengths of `[0,1]²` under the metrics
/// `e^{(γ/2)Φ} ds` and `e^{(γ/2)(Φ+δΦ)} ds`. `variance_bound` bounds the
/// pointwise variance of `δΦ`; the exponent of the metric is `(γ/2) δΦ`, so
/// the constant entering the bound is `C' = (γ/2)² C`.
pub fn lemma_inequality_check(base: &[f64], perturbed: &[f64], gamma: f64, variance_bound: Option<f64>, epsilon: f64, seed: u64) -> Result<LemmaReport> {
    let Some(c) = variance_bound else {
        return invalid("the pointwise variance bound of the perturbation must be supplied");
    };
    if !(c >= 0.0 && c.is_finite()) {
        return invalid(format!("variance bound must be finite and nonnegative, got {c}"));
    }
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return invalid(format!("epsilon must lie in (0, 1/4), got {epsilon}"));
    }
    estimate_quantile(base, 0.5)?;
    estimate_quantile(perturbed, 0.5)?;
    let factor = (0.5 * 0.25 * gamma * gamma * c).exp() / epsilon;
    let s = |k: u64| derive_seed(seed, "lemma-inequality", &[k]);
    let lower_perturbed = quantile_estimate(perturbed, epsilon, s(0))?;
    let lower_base = quantile_estimate(base, 2.0 * epsilon, s(1))?;
    let upper_perturbed = quantile_estimate(perturbed, 1.0 - 2.0 * epsilon, s(2))?;
    let upper_base = quantile_estimate(base, 1.0 - epsilon, s(3))?;
    let within = |a: &Estimate, b: &Estimate| a.value <= factor * b.value + 3.0 * (a.se.powi(2) + (factor * b.se).powi(2)).sqrt();
    Ok(LemmaReport {
        epsilon,
        factor,
        lower_passed: within(&lower_perturbed, &lower_base),
        upper_passed: within(&upper_perturbed, &upper_base),
        lower_perturbed,
        lower_base,
        upper_perturbed,
        upper_base,
    })
}
