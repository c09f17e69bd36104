//! Empirical checks of the crossing inequalities on paired samples.
//!
//! Sub-checks:
//! (a) subadditivity and monotonicity of nested crossings, exact per sample;
//! (b) the product bound `P(L_{3,3} ≤ l) ≤ P(L_{1,3} ≤ l)²`;
//! (c) the variance–quantile inequality, exact on the empirical law;
//! (d) positive association of two crossing lengths;
//! (e) the moment-method bound for a straight segment;
//! (f) the straight-line bound on `L_{1,1}`.

use super::quantile::{bootstrap, quantile_sorted, Estimate, BOOTSTRAP_RESAMPLES};
use super::StatRow;
use crate::error::{invalid, Result};
use crate::metric::NestedCrossings;
use crate::seeds::derive_seed;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// Outcome of one sub-check at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCheck {
    /// Sub-check letter `a`–`f`.
    pub id: String,
    /// Short description.
    pub name: String,
    /// Parameter of this row (level, `s`, …); NaN when there is none.
    pub parameter: f64,
    /// Left-hand side.
    pub statistic: f64,
    /// Right-hand side.
    pub bound: f64,
    /// Standard error entering the pass rule (zero for exact checks).
    pub se: f64,
    /// Number of per-sample violations (exact checks only).
    pub violations: usize,
    /// Number of samples.
    pub samples: usize,
    /// Whether the row passed (`statistic ≤ bound + 3 se`, or zero violations).
    pub passed: bool,
    /// Whether the bound applies at this parameter; inapplicable rows pass.
    pub applicable: bool,
}

/// All sub-check rows of the inequality suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    /// Rows in the order (a)…(f).
    pub checks: Vec<SubCheck>,
}

impl InequalityReport {
    /// Whether every row of sub-check `id` passed.
    pub fn passed(&self, id: &str) -> bool {
        self.checks.iter().filter(|c| c.id == id).all(|c| c.passed)
    }

    /// Whether every row passed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Rows `(n, statistic, value, se, …)` for CSV export.
    pub fn stat_rows(&self, n: u32) -> Vec<StatRow> {
        self.checks
            .iter()
            .map(|c| StatRow {
                n,
                statistic: format!("{}:{}@{}", c.id, c.name, c.parameter),
                value: c.statistic,
                se: c.se,
                ci_low: c.bound,
                ci_high: if c.passed { 1.0 } else { 0.0 },
            })
            .collect()
    }
}

/// Samples for the suite; every vector has one entry per field sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSamples {
    /// `γ`.
    pub gamma: f64,
    /// Scale index `n` of `φ_{0,n}`.
    pub n: u32,
    /// Nested crossings of `[0,3]²`.
    pub nested: Vec<NestedCrossings>,
    /// `L_{1,1}`.
    pub l11: Vec<f64>,
    /// Straight-segment integrals `∫_0^1 e^{(γ/2)φ(x, y*)} dx` (trapezoid rule on the lattice row).
    pub line_integrals: Vec<f64>,
}

/// Parameters of the suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Levels `q`: (b) is checked at `l` = the `q`-quantile of `L_{3,3}`.
    pub product_levels: Vec<f64>,
    /// Pairs `(p, p')` with `p < p'`: (c) uses the empirical `p`- and `p'`-quantiles of `log L_{1,1}`.
    pub variance_levels: Vec<(f64, f64)>,
    /// Multiples `t`: (e) is checked at `s = t σ`.
    pub moment_multiples: Vec<f64>,
    /// Values of `s` for (f).
    pub line_s: Vec<f64>,
    /// Bootstrap seed.
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            product_levels: vec![0.05, 0.1, 0.25, 0.5, 0.75],
            variance_levels: vec![(0.05, 0.95), (0.1, 0.9), (0.25, 0.75), (0.05, 0.5), (0.5, 0.95)],
            moment_multiples: vec![1.0, 1.5, 2.0, 2.5, 3.0],
            line_s: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            seed: 0,
        }
    }
}

fn row(id: &str, name: &str, parameter: f64, statistic: f64, bound: f64, se: f64, samples: usize) -> SubCheck {
    SubCheck { id: id.into(), name: name.into(), parameter, statistic, bound, se, violations: 0, samples, passed: statistic <= bound + 3.0 * se, applicable: true }
}

fn exact_row(id: &str, name: &str, parameter: f64, violations: usize, samples: usize) -> SubCheck {
    SubCheck { id: id.into(), name: name.into(), parameter, statistic: violations as f64, bound: 0.0, se: 0.0, violations, samples, passed: violations == 0, applicable: true }
}

/// (a): per-sample subadditivity and monotonicity; zero violations allowed.
pub fn subadditivity_check(nested: &[NestedCrossings]) -> Vec<SubCheck> {
    let sub = nested.iter().filter(|c| !c.subadditivity_holds()).count();
    let mono = nested.iter().filter(|c| !c.monotonicity_holds()).count();
    vec![exact_row("a", "subadditivity", f64::NAN, sub, nested.len()), exact_row("a", "monotonicity", f64::NAN, mono, nested.len())]
}

/// (b): `P̂(L_{3,3} ≤ l) ≤ P̂(L_{1,3} ≤ l)² + 3 SE` at `l` = the given quantile levels of `L_{3,3}`.
pub fn product_bound_check(nested: &[NestedCrossings], levels: &[f64], seed: u64) -> Result<Vec<SubCheck>> {
    let l33: Vec<f64> = nested.iter().map(|c| c.l33).collect();
    let mut sorted = l33.clone();
    sorted.sort_by(f64::total_cmp);
    let n = nested.len();
    let mut out = Vec::new();
    for (k, &q) in levels.iter().enumerate() {
        let l = quantile_sorted(&sorted, q);
        let diff = |idx: &[usize]| {
            let m = idx.len() as f64;
            let a = idx.iter().filter(|&&i| nested[i].l33 <= l).count() as f64 / m;
            let b = idx.iter().filter(|&&i| nested[i].l13 <= l).count() as f64 / m;
            a - b * b
        };
        let est = bootstrap(n, BOOTSTRAP_RESAMPLES, derive_seed(seed, "product-bound", &[k as u64]), diff)?;
        let p13 = nested.iter().filter(|c| c.l13 <= l).count() as f64 / n as f64;
        let p33 = est.value + p13 * p13;
        out.push(row("b", "product_bound", l, p33, p13 * p13, est.se, n));
    }
    Ok(out)
}

/// (c): `2 Var X ≥ P(X ≥ l') P(X ≤ l) (l' − l)²` on the empirical law of `X`; exact.
pub fn variance_quantile_check(x: &[f64], levels: &[(f64, f64)]) -> Result<Vec<SubCheck>> {
    if levels.iter().any(|&(p, q)| !(0.0 < p && p < q && q < 1.0)) {
        return invalid("variance-quantile levels must satisfy 0 < p < p' < 1");
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    for &(p, q) in levels {
        let (l, lp) = (quantile_sorted(&sorted, p), quantile_sorted(&sorted, q));
        let below = x.iter().filter(|&&v| v <= l).count() as f64 / n;
        let above = x.iter().filter(|&&v| v >= lp).count() as f64 / n;
        let rhs = above * below * (lp - l).powi(2);
        let mut r = exact_row("c", &format!("variance_quantile_{q}"), p, usize::from(2.0 * var < rhs), x.len());
        r.statistic = rhs;
        r.bound = 2.0 * var;
        out.push(r);
    }
    Ok(out)
}

/// (d): empirical covariance of two increasing functionals is `≥ −3 SE`.
pub fn fkg_check(a: &[f64], b: &[f64], seed: u64) -> Result<SubCheck> {
    if a.len() != b.len() {
        return invalid("FKG check needs paired samples");
    }
    let cov = |idx: &[usize]| {
        let m = idx.len() as f64;
        let ma = idx.iter().map(|&i| a[i]).sum::<f64>() / m;
        let mb = idx.iter().map(|&i| b[i]).sum::<f64>() / m;
        idx.iter().map(|&i| (a[i] - ma) * (b[i] - mb)).sum::<f64>() / (m - 1.0)
    };
    let est = bootstrap(a.len(), BOOTSTRAP_RESAMPLES, derive_seed(seed, "fkg", &[]), cov)?;
    Ok(SubCheck {
        id: "d".into(),
        name: "fkg_covariance".into(),
        parameter: f64::NAN,
        statistic: est.value,
        bound: -3.0 * est.se,
        se: est.se,
        violations: 0,
        samples: a.len(),
        passed: est.value >= -3.0 * est.se,
        applicable: true,
    })
}

fn exceedance(x: &[f64], threshold: f64, seed: u64) -> Result<Estimate> {
    bootstrap(x.len(), BOOTSTRAP_RESAMPLES, seed, |idx| idx.iter().filter(|&&i| x[i] >= threshold).count() as f64 / idx.len() as f64)
}

/// (e): `P̂(log (μ(S)^{-1} ∫ e^ψ dμ) ≥ s) ≤ e^{−s²/2σ²} + 3 SE` for `s > σ²`.
///
/// `log_ratios` are samples of `log(μ(S)^{-1} ∫_S e^{ψ} dμ)` and `sigma2`
/// bounds the pointwise variance of `ψ`. Values `s ≤ σ²` are reported as inapplicable.
pub fn moment_method_check(log_ratios: &[f64], sigma2: f64, s_values: &[f64], seed: u64) -> Result<Vec<SubCheck>> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return invalid(format!("sigma^2 must be finite and nonnegative, got {sigma2}"));
    }
    let mut out = Vec::new();
    for (k, &s) in s_values.iter().enumerate() {
        let est = exceedance(log_ratios, s, derive_seed(seed, "moment-method", &[k as u64]))?;
        let bound = if sigma2 == 0.0 { 0.0 } else { (-s * s / (2.0 * sigma2)).exp() };
        let mut r = row("e", "moment_method", s, est.value, bound, est.se, log_ratios.len());
        if s <= sigma2 {
            r.applicable = false;
            r.passed = true;
        }
        out.push(r);
    }
    Ok(out)
}

/// (f): `P̂(L_{1,1} ≥ e^{γ s}) ≤ e^{−2s²/((n+1) log 2)} + 3 SE` for `γ s > σ² = γ²(n+1) log 2 / 4`.
pub fn straight_line_check(l11: &[f64], gamma: f64, n: u32, s_values: &[f64], seed: u64) -> Result<Vec<SubCheck>> {
    let var = (n + 1) as f64 * LN_2;
    let sigma2 = 0.25 * gamma * gamma * var;
    let mut out = Vec::new();
    for (k, &s) in s_values.iter().enumerate() {
        let est = exceedance(l11, (gamma * s).exp(), derive_seed(seed, "straight-line", &[k as u64]))?;
        let bound = (-2.0 * s * s / var).exp();
        let mut r = row("f", "straight_line", s, est.value, bound, est.se, l11.len());
        if !(gamma * s > sigma2) {
            r.applicable = false;
            r.passed = true;
        }
        out.push(r);
    }
    Ok(out)
}

/// Runs sub-checks (a)–(f).
///
/// (c) uses `log L_{1,1}`; (d) uses the two disjoint strips `L_{1,3}` and
/// `L̃_{1,3}`; (e) uses `ψ = (γ/2) φ_{0,n}` on a unit segment, whose pointwise
/// variance is `σ² = γ²(n+1) log 2 / 4`, at `s = t σ` for the configured multiples `t`.
pub fn inequality_suite(samples: &SuiteSamples, config: &SuiteConfig) -> Result<InequalityReport> {
    let n = samples.nested.len();
    if n < 2 {
        return invalid("the suite needs at least two field samples");
    }
    if samples.l11.len() != n || samples.line_integrals.len() != n {
        return invalid(format!(
            "layout mismatch: {} nested crossings, {} L11 samples and {} line integrals (one of each per field sample expected)",
            n,
            samples.l11.len(),
            samples.line_integrals.len()
        ));
    }
    if samples.l11.iter().chain(&samples.line_integrals).any(|v| !(v.is_finite() && *v > 0.0)) {
        return invalid("lengths and line integrals must be positive and finite");
    }
    let mut checks = subadditivity_check(&samples.nested);
    checks.extend(product_bound_check(&samples.nested, &config.product_levels, config.seed)?);
    let log_l11: Vec<f64> = samples.l11.iter().map(|v| v.ln()).collect();
    checks.extend(variance_quantile_check(&log_l11, &config.variance_levels)?);
    let l13: Vec<f64> = samples.nested.iter().map(|c| c.l13).collect();
    let l13t: Vec<f64> = samples.nested.iter().map(|c| c.l13_tilde).collect();
    checks.push(fkg_check(&l13, &l13t, config.seed)?);
    let sigma2 = 0.25 * samples.gamma * samples.gamma * (samples.n + 1) as f64 * LN_2;
    let s_values: Vec<f64> =
        if sigma2 > 0.0 { config.moment_multiples.iter().map(|t| t * sigma2.sqrt()).collect() } else { config.moment_multiples.iter().map(|t| 0.1 * t).collect() };
    let log_lines: Vec<f64> = samples.line_integrals.iter().map(|v| v.ln()).collect();
    checks.extend(moment_method_check(&log_lines, sigma2, &s_values, config.seed)?);
    checks.extend(straight_line_check(&samples.l11, samples.gamma, samples.n, &config.line_s, config.seed)?);
    Ok(InequalityReport { checks })
}
