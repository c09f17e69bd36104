//! Check routines composed by the experiment runner: field covariance checks,
//! spectral formulas, the discrete Weyl identity and the exact lattice identities.

use crate::error::{invalid, Result};
use crate::kernel::{spectral_domination_report, DominationReport, Kernel, Scale};
use crate::metric::{build_metric, chaining_report, crossing_length, ik_lower_bound, ik_scales, nested_crossings, weyl_scale, NestedCrossings, Orientation};
use crate::sampling::{check_resolution, FieldSampler};
use crate::seeds::derive_seed;
use crate::stats::{mean_se, StatRow};
use crate::synth::{new_noise_store, shift_field, spectral_sample, synthesize_points, GridSpec, NoiseConfig, Rect, ShiftFunction};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

/// One estimate compared with its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    /// Scale or octave index.
    pub n: u32,
    /// Check name.
    pub name: String,
    /// Lag, frequency or other parameter (NaN when unused).
    pub parameter: f64,
    /// Estimate.
    pub estimate: f64,
    /// Standard error of the estimate.
    pub se: f64,
    /// Target value.
    pub target: f64,
    /// Verdict.
    pub passed: bool,
}

impl CheckRow {
    /// Export row: `ci_low` holds the target and `ci_high` the pass flag.
    pub fn stat_row(&self) -> StatRow {
        let statistic = if self.parameter.is_nan() { self.name.clone() } else { format!("{}@{}", self.name, self.parameter) };
        StatRow { n: self.n, statistic, value: self.estimate, se: self.se, ci_low: self.target, ci_high: f64::from(u8::from(self.passed)) }
    }
}

/// 5 × 5 points at spacing 0.4. For `r0 < 0.2` they lie beyond the correlation
/// range `2 r0`, so their values are independent.
fn sparse_points(offset: (f64, f64)) -> Vec<(f64, f64)> {
    (0..25).map(|k| (0.1 + 0.4 * (k % 5) as f64 + offset.0, 0.1 + 0.4 * (k / 5) as f64 + offset.1)).collect()
}

fn point_store_grid() -> Result<GridSpec> {
    GridSpec::new(Rect::new(0.0, 0.0, 2.0, 2.0), 0.25, 0.5)
}

/// Pointwise variance of `φ_{0,n}` from white-noise synthesis at sparse points,
/// compared with `(n+1) log 2`; passes within 3 SE plus a 2% discretization allowance.
pub fn variance_law(kernel: &Arc<Kernel>, ns: &[u32], replicas: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let pts = sparse_points((0.013, 0.071));
    ns.iter()
        .map(|&n| {
            let sq: Vec<f64> = (0..replicas)
                .into_par_iter()
                .map(|r| -> Result<f64> {
                    let store = new_noise_store(kernel.clone(), derive_seed(seed, "variance-law", &[n as u64, r as u64]), n, point_store_grid()?, NoiseConfig::default())?;
                    let v = synthesize_points(&store, 0, n, &pts)?;
                    Ok(v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64)
                })
                .collect::<Result<_>>()?;
            let (m, se) = mean_se(&sq);
            let target = (n + 1) as f64 * LN_2;
            Ok(CheckRow { n, name: "variance".into(), parameter: f64::NAN, estimate: m, se, target, passed: (m - target).abs() <= 3.0 * se + 0.02 * target })
        })
        .collect()
}

/// Lags `r_l = 2 r0 l / (lags + 1)`, `l = 1..=lags`, covering the support of `C_0`.
pub fn covariance_lags(r0: f64, lags: usize) -> Vec<f64> {
    (1..=lags).map(|l| 2.0 * r0 * l as f64 / (lags + 1) as f64).collect()
}

/// Covariance of the single octave `φ_j` at lags `2^{-j} r` against `C_0(r)`.
pub fn covariance_scaling(kernel: &Arc<Kernel>, octaves: &[u32], lags: usize, replicas: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let base = sparse_points((0.037, 0.011));
    let radii = covariance_lags(kernel.r0(), lags);
    let mut out = Vec::new();
    for &j in octaves {
        let scale = 2f64.powi(-(j as i32));
        let mut pts = base.clone();
        for &r in &radii {
            pts.extend(base.iter().map(|&(x, y)| (x + r * scale, y)));
        }
        let per_replica: Vec<Vec<f64>> = (0..replicas)
            .into_par_iter()
            .map(|rep| -> Result<Vec<f64>> {
                let store = new_noise_store(kernel.clone(), derive_seed(seed, "covariance-scaling", &[j as u64, rep as u64]), j, point_store_grid()?, NoiseConfig::default())?;
                let v = synthesize_points(&store, j, j, &pts)?;
                let b = base.len();
                Ok((1..=radii.len()).map(|l| (0..b).map(|i| v[i] * v[l * b + i]).sum::<f64>() / b as f64).collect())
            })
            .collect::<Result<_>>()?;
        for (l, &r) in radii.iter().enumerate() {
            let col: Vec<f64> = per_replica.iter().map(|p| p[l]).collect();
            let (m, se) = mean_se(&col);
            let target = kernel.band_covariance(0, 0, r)?;
            out.push(CheckRow { n: j, name: "octave_covariance".into(), parameter: r, estimate: m, se, target, passed: (m - target).abs() <= 3.0 * se });
        }
    }
    Ok(out)
}

/// Lag covariances of `φ_{0,n}` from the white-noise and circulant-embedding
/// samplers at lags `l h`, `l = 1..=lags`; passes when they agree within 3 combined SE.
pub fn sampler_agreement(kernel: &Arc<Kernel>, n: u32, h: f64, lags: usize, replicas: usize, seed: u64) -> Result<Vec<CheckRow>> {
    check_resolution(h, n)?;
    let width = 1.0;
    let nodes_per_row = (width / h).round() as usize;
    if lags * 2 > nodes_per_row {
        return invalid(format!("{lags} lags need at least {} nodes per row", 2 * lags));
    }
    let rows = [0.05, 0.45, 0.85];
    let starts: Vec<(f64, f64)> = rows.iter().flat_map(|&y| rows.iter().map(move |&x| (x * (width - lags as f64 * h), y))).collect();
    let mut pts = Vec::new();
    for &(x, y) in &starts {
        pts.extend((0..=lags).map(|l| (x + l as f64 * h, y)));
    }
    let grid = GridSpec::new(Rect::new(0.0, 0.0, width, width), h, 0.0)?;
    let spectral_rows: Vec<usize> = (0..5).map(|k| k * (grid.ny() - 1) / 4).collect();
    let spectral_cols: Vec<usize> = (0..3).map(|k| k * (grid.nx() - 1 - lags) / 2).collect();
    let per_replica: Vec<(Vec<f64>, Vec<f64>)> = (0..replicas)
        .into_par_iter()
        .map(|rep| -> Result<(Vec<f64>, Vec<f64>)> {
            let store = new_noise_store(kernel.clone(), derive_seed(seed, "agreement/direct", &[rep as u64]), n, point_store_grid()?, NoiseConfig::default())?;
            let v = synthesize_points(&store, 0, n, &pts)?;
            let f = spectral_sample(kernel, 0, n, &grid, derive_seed(seed, "agreement/spectral", &[rep as u64]))?;
            let stride = lags + 1;
            let direct = (1..=lags).map(|l| (0..starts.len()).map(|s| v[s * stride] * v[s * stride + l]).sum::<f64>() / starts.len() as f64).collect();
            let count = (spectral_rows.len() * spectral_cols.len()) as f64;
            let spectral = (1..=lags)
                .map(|l| spectral_rows.iter().flat_map(|&j| spectral_cols.iter().map(move |&i| (i, j))).map(|(i, j)| f.at(i, j) * f.at(i + l, j)).sum::<f64>() / count)
                .collect();
            Ok((direct, spectral))
        })
        .collect::<Result<_>>()?;
    Ok((1..=lags)
        .map(|l| {
            let a: Vec<f64> = per_replica.iter().map(|p| p.0[l - 1]).collect();
            let b: Vec<f64> = per_replica.iter().map(|p| p.1[l - 1]).collect();
            let ((ma, sa), (mb, sb)) = (mean_se(&a), mean_se(&b));
            let se = sa.hypot(sb);
            CheckRow { n, name: "sampler_agreement".into(), parameter: l as f64 * h, estimate: ma - mb, se, target: 0.0, passed: (ma - mb).abs() <= 3.0 * se }
        })
        .collect())
}

/// The two closed-form spectral checks of `Ĉ_{0,∞}`.
///
/// The origin value is evaluated through the spectral-mass route at a small
/// frequency and compared with `(∫ k)² / 2`; the high-frequency value
/// `2π ξ² Ĉ_{0,∞}(ξ)` at `ξ = 10³ / r0` must lie in `[0.98, 1.02]`.
pub fn spectral_formulas(kernel: &Kernel) -> Result<Vec<CheckRow>> {
    let xi0 = 1e-4;
    let at0 = kernel.band_spectral_density(0, Scale::Infinite, xi0)?;
    let target0 = kernel.spec().integral().powi(2) / 2.0;
    let xi = 1e3 / kernel.r0();
    let hf = 2.0 * PI * xi * xi * kernel.band_spectral_density(0, Scale::Infinite, xi)?;
    Ok(vec![
        CheckRow { n: 0, name: "c_hat_origin".into(), parameter: xi0, estimate: at0, se: 0.0, target: target0, passed: (at0 - target0).abs() <= 1e-6 },
        CheckRow { n: 0, name: "c_hat_high_frequency".into(), parameter: xi, estimate: hf, se: 0.0, target: 1.0, passed: (0.98..=1.02).contains(&hf) },
    ])
}

/// Frequency grid `ξ_i = ξ_max (i + 1/2) / count` with `ξ_max = 2^{n+2} / r0`.
pub fn domination_grid(r0: f64, n: u32, count: usize) -> Vec<f64> {
    let xi_max = 2f64.powi(n as i32 + 2) / r0;
    (0..count).map(|i| xi_max * (i as f64 + 0.5) / count as f64).collect()
}

/// Domination reports with and without the compensator.
pub fn domination_reports(k1: &Kernel, k2: &Kernel, n: u32, gap: u32, grid: &[f64]) -> Result<Vec<DominationReport>> {
    [false, true].iter().map(|&psi| spectral_domination_report(k1, k2, n, gap, psi, grid)).collect()
}

/// Gaussian bump `height · exp(−|x − c|² / (2 width²))` centred in the grid extent.
pub fn gaussian_bump(grid: &GridSpec, width: f64, height: f64) -> ShiftFunction {
    let e = grid.extent;
    let c = (0.5 * (e.x0 + e.x1), 0.5 * (e.y0 + e.y1));
    let values = grid.nodes().into_iter().map(|(x, y)| height * (-((x - c.0).powi(2) + (y - c.1).powi(2)) / (2.0 * width * width)).exp()).collect();
    ShiftFunction { grid: *grid, values, source: format!("gaussian bump width {width} height {height}") }
}

/// Discrete Weyl identity on one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylOutcome {
    /// Largest relative edge-weight difference.
    pub max_relative_error: f64,
    /// Whether the left-right crossing lengths are identical.
    pub identical_paths: bool,
}

/// Compares `weyl_scale(build_metric(φ), f)` with `build_metric(φ + f)` on `[0,1]²`.
pub fn weyl_check(sampler: &FieldSampler, gamma: f64, n: u32, h: f64, width: f64, height: f64, seed: u64) -> Result<WeylOutcome> {
    check_resolution(h, n)?;
    let rect = Rect::new(0.0, 0.0, 1.0, 1.0);
    let field = sampler.sample(n, rect, h, seed)?;
    let f = gaussian_bump(&field.grid, width, height);
    let scaled = weyl_scale(&build_metric(&field, gamma, rect)?, &f, gamma)?;
    let direct = build_metric(&shift_field(&field, &f)?, gamma, rect)?;
    let max_relative_error = scaled.edges().iter().zip(direct.edges()).map(|(a, b)| (a.weight - b.weight).abs() / b.weight).fold(0.0, f64::max);
    let identical_paths = crossing_length(&scaled, Orientation::LeftRight)?.length == crossing_length(&direct, Orientation::LeftRight)?.length
        && crossing_length(&scaled, Orientation::BottomTop)?.length == crossing_length(&direct, Orientation::BottomTop)?.length;
    Ok(WeylOutcome { max_relative_error, identical_paths })
}

/// Exact lattice identities on one sample of `[0,3]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityOutcome {
    /// Nested crossings.
    pub nested: NestedCrossings,
    /// Scales `k` of the `I_k` bound that failed.
    pub ik_violations: Vec<u32>,
    /// Scales `k` checked.
    pub ik_checked: usize,
    /// Diameter lower bound ≥ left-right crossing of `[0,1]²`.
    pub diameter_dominates: bool,
    /// Diameter upper bound ≤ chaining bound on `[0,1]²`.
    pub chaining_holds: bool,
}

/// Evaluates every per-sample identity on one field sample.
pub fn identity_sample(sampler: &FieldSampler, gamma: f64, n: u32, h: f64, net_spacing: f64, seed: u64) -> Result<IdentityOutcome> {
    check_resolution(h, n)?;
    let square = Rect::new(0.0, 0.0, 3.0, 3.0);
    let field = sampler.sample(n, square, h, seed)?;
    let metric = build_metric(&field, gamma, square)?;
    let nested = nested_crossings(&metric)?;
    let strip = metric.restrict(Rect::new(0.0, 0.0, 1.0, 3.0))?;
    let scales = ik_scales(h);
    let mut ik_violations = Vec::new();
    for &k in &scales {
        if nested.l13 < ik_lower_bound(&strip, k)? {
            ik_violations.push(k);
        }
    }
    let unit = metric.restrict(Rect::new(0.0, 0.0, 1.0, 1.0))?;
    let chain = chaining_report(&unit, n, net_spacing)?;
    Ok(IdentityOutcome { nested, ik_violations, ik_checked: scales.len(), diameter_dominates: chain.diameter_dominates_crossing(), chaining_holds: chain.chaining_holds() })
}
