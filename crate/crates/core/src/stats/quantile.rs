//! Order-statistic quantiles, bootstrap standard errors and the quantile table
//! `(l_n, l̄_n, μ_n, δ_n)`.

use crate::error::{invalid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StatRow;

/// Number of bootstrap resamples used for every standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Minimum number of samples per scale accepted by [`build_quantile_table`].
pub const MIN_TABLE_SAMPLES: usize = 200;

/// Default quantile level `ε`.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// A point estimate with its bootstrap standard error and 95% percentile interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Estimate on the full sample.
    pub value: f64,
    /// Standard deviation of the bootstrap replicates.
    pub se: f64,
    /// 2.5% percentile of the bootstrap replicates.
    pub ci_low: f64,
    /// 97.5% percentile of the bootstrap replicates.
    pub ci_high: f64,
}

impl Estimate {
    /// An estimate without sampling error.
    pub fn exact(value: f64) -> Self {
        Estimate { value, se: 0.0, ci_low: value, ci_high: value }
    }

    /// Mean of `x` with the usual `s/√N` standard error and a normal 95% interval.
    pub fn mean_of(x: &[f64]) -> Self {
        let (m, se) = mean_se(x);
        Estimate { value: m, se, ci_low: m - 1.96 * se, ci_high: m + 1.96 * se }
    }

    /// One row of a CSV export.
    pub fn row(&self, n: u32, statistic: &str) -> StatRow {
        StatRow { n, statistic: statistic.to_string(), value: self.value, se: self.se, ci_low: self.ci_low, ci_high: self.ci_high }
    }
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return invalid("sample list is empty");
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return invalid("samples must be finite");
    }
    Ok(())
}

fn check_level(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("quantile level must lie in (0, 1), got {p}"));
    }
    Ok(())
}

/// Quantile of already sorted data at 0-based rank `p (N - 1)` with linear interpolation.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// The `p`-quantile of `samples`: linear interpolation between order
/// statistics at the 1-based rank `p (N - 1) + 1`.
pub fn estimate_quantile(samples: &[f64], p: f64) -> Result<f64> {
    check_samples(samples)?;
    check_level(p)?;
    Ok(quantile_sorted(&sorted_copy(samples), p))
}

/// Mean and standard error `s/√N` (zero for a single sample).
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, 0.0);
    }
    let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Unbiased sample variance.
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Bootstrap of a statistic of `n` paired observations.
///
/// `stat` receives the indices of one resample (the identity for the point
/// estimate). Resample `b` draws its indices from ChaCha8 seeded with `seed`
/// on stream `b`, so the result does not depend on the thread pool.
pub fn bootstrap<F>(n: usize, resamples: usize, seed: u64, stat: F) -> Result<Estimate>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    if n == 0 {
        return invalid("cannot bootstrap an empty sample");
    }
    if resamples < 2 {
        return invalid("bootstrap needs at least two resamples");
    }
    let identity: Vec<usize> = (0..n).collect();
    let value = stat(&identity);
    let reps: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            stat(&idx)
        })
        .collect();
    let finite: Vec<f64> = reps.into_iter().filter(|x| x.is_finite()).collect();
    if finite.len() < 2 {
        return Ok(Estimate { value, se: f64::NAN, ci_low: f64::NAN, ci_high: f64::NAN });
    }
    let se = sample_variance(&finite).sqrt();
    let sorted = sorted_copy(&finite);
    Ok(Estimate { value, se, ci_low: quantile_sorted(&sorted, 0.025), ci_high: quantile_sorted(&sorted, 0.975) })
}

/// Quantile estimate with bootstrap standard error.
pub fn quantile_estimate(samples: &[f64], p: f64, seed: u64) -> Result<Estimate> {
    check_samples(samples)?;
    check_level(p)?;
    bootstrap(samples.len(), BOOTSTRAP_RESAMPLES, seed, |idx| {
        let mut v: Vec<f64> = idx.iter().map(|&i| samples[i]).collect();
        v.sort_by(f64::total_cmp);
        quantile_sorted(&v, p)
    })
}

/// Crossing samples of one scale `n`, one entry per field sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSamples {
    /// Scale index.
    pub n: u32,
    /// Left-right crossing lengths of `[0,1] × [0,3]`.
    pub l13: Vec<f64>,
    /// Left-right crossing lengths of `[0,3] × [0,1]`.
    pub l31: Vec<f64>,
    /// Left-right crossing lengths of `[0,1]²`.
    pub l11: Vec<f64>,
}

/// One scale of the quantile table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    /// Scale index.
    pub n: u32,
    /// Number of field samples.
    pub samples: usize,
    /// `l_n`: lower `ε`-quantile of `L_{1,3}`.
    pub l: Estimate,
    /// `l̄_n`: upper `ε`-quantile of `L_{3,1}`.
    pub l_bar: Estimate,
    /// `μ_n`: median of `L_{1,1}`.
    pub mu: Estimate,
    /// `l̄_n / l_n`.
    pub ratio: Estimate,
    /// `δ_n`: running maximum of the ratio over the tabulated scales `k ≤ n`.
    pub delta: f64,
    /// Running maxima of the ratio's interval endpoints.
    pub delta_ci: (f64, f64),
    /// `μ_n / l_n`, reported without asserting any ordering.
    pub mu_over_l: f64,
}

/// Quantiles `(l_n, l̄_n, μ_n, δ_n)` over a range of scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    /// Quantile level `ε`.
    pub epsilon: f64,
    /// Rows in increasing `n`.
    pub rows: Vec<QuantileRow>,
}

/// Builds the quantile table from crossing samples of several scales.
///
/// `δ_n` is the running maximum of `l̄_k / l_k` over the tabulated scales
/// `k ≤ n`, so it is nondecreasing by construction.
pub fn build_quantile_table(scales: &[ScaleSamples], epsilon: f64, seed: u64) -> Result<QuantileTable> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return invalid(format!("epsilon must lie in (0, 1/2), got {epsilon}"));
    }
    if scales.is_empty() {
        return invalid("no scales supplied");
    }
    let mut order: Vec<&ScaleSamples> = scales.iter().collect();
    order.sort_by_key(|s| s.n);
    if order.windows(2).any(|w| w[0].n == w[1].n) {
        return invalid("each scale may appear only once");
    }
    let mut rows = Vec::with_capacity(order.len());
    let (mut delta, mut d_lo, mut d_hi) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in order {
        let count = s.l13.len();
        if count < MIN_TABLE_SAMPLES || s.l31.len() < MIN_TABLE_SAMPLES || s.l11.len() < MIN_TABLE_SAMPLES {
            return invalid(format!(
                "scale {} has {} / {} / {} samples of L13 / L31 / L11, at least {MIN_TABLE_SAMPLES} each are required",
                s.n,
                s.l13.len(),
                s.l31.len(),
                s.l11.len()
            ));
        }
        if s.l31.len() != count {
            return invalid(format!("scale {}: L13 and L31 must come from the same field samples", s.n));
        }
        let seed_n = crate::seeds::derive_seed(seed, "quantile-table", &[s.n as u64]);
        let l = quantile_estimate(&s.l13, epsilon, seed_n)?;
        let l_bar = quantile_estimate(&s.l31, 1.0 - epsilon, seed_n ^ 1)?;
        let mu = quantile_estimate(&s.l11, 0.5, seed_n ^ 2)?;
        check_samples(&s.l31)?;
        let ratio = bootstrap(count, BOOTSTRAP_RESAMPLES, seed_n ^ 3, |idx| {
            let mut a: Vec<f64> = idx.iter().map(|&i| s.l13[i]).collect();
            let mut b: Vec<f64> = idx.iter().map(|&i| s.l31[i]).collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            quantile_sorted(&b, 1.0 - epsilon) / quantile_sorted(&a, epsilon)
        })?;
        delta = delta.max(ratio.value);
        d_lo = d_lo.max(ratio.ci_low);
        d_hi = d_hi.max(ratio.ci_high);
        rows.push(QuantileRow { n: s.n, samples: count, mu_over_l: mu.value / l.value, l, l_bar, mu, ratio, delta, delta_ci: (d_lo, d_hi) });
    }
    Ok(QuantileTable { epsilon, rows })
}

impl QuantileTable {
    /// Rows `(n, statistic, value, se, ci)` for CSV export.
    pub fn stat_rows(&self) -> Vec<StatRow> {
        let mut out = Vec::new();
        for r in &self.rows {
            out.push(r.l.row(r.n, "l_n"));
            out.push(r.l_bar.row(r.n, "l_bar_n"));
            out.push(r.mu.row(r.n, "mu_n"));
            out.push(r.ratio.row(r.n, "ratio"));
            out.push(StatRow { n: r.n, statistic: "delta_n".into(), value: r.delta, se: f64::NAN, ci_low: r.delta_ci.0, ci_high: r.delta_ci.1 });
            out.push(StatRow { n: r.n, statistic: "mu_over_l".into(), value: r.mu_over_l, se: f64::NAN, ci_low: f64::NAN, ci_high: f64::NAN });
        }
        out
    }

    /// Multiplies every length quantile by `factor` (the table of `e^{γc/2} L`).
    pub fn scaled(&self, factor: f64) -> QuantileTable {
        let s = |e: Estimate| Estimate { value: e.value * factor, se: e.se * factor, ci_low: e.ci_low * factor, ci_high: e.ci_high * factor };
        let rows = self.rows.iter().map(|r| QuantileRow { l: s(r.l), l_bar: s(r.l_bar), mu: s(r.mu), ..r.clone() }).collect();
        QuantileTable { epsilon: self.epsilon, rows }
    }
}
