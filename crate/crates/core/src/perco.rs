//! Oriented site percolation comparison.
//!
//! The square `[0,k]²` carries a lattice of `M × M` sites with `M = ⌈k/2⌉`.
//! Site `(i, j)` owns the square `[2i, 2i+3] × [2j, 2j+3]` (clipped to the
//! domain) and two strips inside it: the horizontal strip
//! `[2i, 2i+3] × [2j, 2j+1]`, crossed left to right, and the vertical strip
//! `[2i, 2i+1] × [2j, 2j+3]`, crossed bottom to top. A site is open when the
//! sum of the two crossing lengths is at most twice the threshold. The
//! crossings of consecutive sites along an oriented path overlap, so an
//! oriented left-right crossing of the site lattice yields a left-right
//! crossing of `[0,k]²` of length at most `4k` times the threshold.

use crate::error::{invalid, Result};
use crate::metric::{build_metric, crossing_length, LatticeMetric, Orientation};
use crate::sampling::{check_resolution, crossing_samples, FieldSampler};
use crate::seeds::derive_seed;
use crate::stats::{build_quantile_table, mean_se, ScaleSamples};
use crate::synth::{FieldSample, Rect};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Classified site lattice of one field sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteLattice {
    /// Side of the square domain.
    pub k: u32,
    /// Sites per axis.
    pub m: usize,
    /// Openness threshold on the crossing lengths.
    pub threshold: f64,
    /// Bottom-top crossing of each site's vertical strip, row-major by `j`.
    pub up: Vec<f64>,
    /// Left-right crossing of each site's horizontal strip.
    pub right: Vec<f64>,
    /// Open flags.
    pub open: Vec<bool>,
}

impl SiteLattice {
    /// Builds a lattice from strip lengths, classifying every site.
    pub fn from_lengths(k: u32, up: Vec<f64>, right: Vec<f64>, threshold: f64) -> Result<Self> {
        let m = sites_per_axis(k);
        if up.len() != m * m || right.len() != m * m {
            return invalid(format!("a {k} x {k} domain has {} sites", m * m));
        }
        let mut lattice = SiteLattice { k, m, threshold, up, right, open: Vec::new() };
        lattice.open = lattice.classify(threshold);
        Ok(lattice)
    }

    /// Row-major index of site `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.m + i
    }

    /// Whether site `(i, j)` is open.
    pub fn is_open(&self, i: usize, j: usize) -> bool {
        self.open[self.index(i, j)]
    }

    /// Open flags for another threshold.
    pub fn classify(&self, threshold: f64) -> Vec<bool> {
        self.up.iter().zip(&self.right).map(|(u, r)| u + r <= 2.0 * threshold).collect()
    }

    /// The same lengths reclassified at another threshold.
    pub fn with_threshold(&self, threshold: f64) -> SiteLattice {
        SiteLattice { threshold, open: self.classify(threshold), ..self.clone() }
    }

    /// Fraction of open sites.
    pub fn open_fraction(&self) -> f64 {
        self.open.iter().filter(|&&o| o).count() as f64 / self.open.len() as f64
    }
}

/// `⌈k/2⌉`.
pub fn sites_per_axis(k: u32) -> usize {
    k.div_ceil(2) as usize
}

/// Horizontal and vertical strips of site `(i, j)` in `[0,k]²`, in domain coordinates.
pub fn site_strips(k: u32, i: usize, j: usize, origin: (f64, f64)) -> (Rect, Rect) {
    let (x, y) = (origin.0 + 2.0 * i as f64, origin.1 + 2.0 * j as f64);
    let kf = k as f64;
    let right = Rect::new(x, y, (x + 3.0).min(origin.0 + kf), y + 1.0);
    let up = Rect::new(x, y, x + 1.0, (y + 3.0).min(origin.1 + kf));
    (right, up)
}

fn domain_side(field: &FieldSample) -> Result<u32> {
    let e = field.grid.extent;
    let (w, hgt) = (e.width(), e.height());
    let k = w.round();
    if (w - hgt).abs() > 1e-9 || (w - k).abs() > 1e-9 || k < 2.0 {
        return invalid(format!("site percolation needs a square domain of integer side >= 2, got {w} x {hgt}"));
    }
    Ok(k as u32)
}

/// Measures the strip crossings of every site of a metric over `[0,k]²`.
fn strip_lengths(metric: &LatticeMetric, k: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = sites_per_axis(k);
    let origin = (metric.rect().x0, metric.rect().y0);
    let pairs: Vec<(f64, f64)> = (0..m * m)
        .into_par_iter()
        .map(|s| -> Result<(f64, f64)> {
            let (i, j) = (s % m, s / m);
            let (right, up) = site_strips(k, i, j, origin);
            let lr = crossing_length(&metric.restrict(right)?, Orientation::LeftRight)?.length;
            let bt = crossing_length(&metric.restrict(up)?, Orientation::BottomTop)?.length;
            Ok((bt, lr))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Classifies the sites of a field sample on `[0,k]²` of `φ_{0,n}`.
pub fn classify_sites(field: &FieldSample, gamma: f64, n: u32, threshold: f64) -> Result<SiteLattice> {
    if field.band.1 != n {
        return invalid(format!("field covers scales {:?}, not 0..={n}", field.band));
    }
    if !(threshold.is_finite() && threshold >= 0.0) {
        return invalid("the site threshold must be finite and nonnegative");
    }
    let k = domain_side(field)?;
    let metric = build_metric(field, gamma, field.grid.extent)?;
    let (up, right) = strip_lengths(&metric, k)?;
    SiteLattice::from_lengths(k, up, right, threshold)
}

/// Oriented crossing of the site lattice: a path of open sites from column 0
/// to column `M − 1` using only rightward and upward steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientedCrossing {
    /// Whether a crossing exists.
    pub exists: bool,
    /// Sites of one crossing, from left to right (empty when none exists).
    pub path: Vec<(usize, usize)>,
}

/// Finds an oriented left-right crossing by dynamic programming over columns.
pub fn oriented_crossing(lattice: &SiteLattice) -> OrientedCrossing {
    let m = lattice.m;
    // pred[v] = Some(previous site) when v is reachable; the left column uses itself.
    let mut pred: Vec<Option<usize>> = vec![None; m * m];
    for i in 0..m {
        for j in 0..m {
            let v = lattice.index(i, j);
            if !lattice.open[v] {
                continue;
            }
            if i == 0 {
                pred[v] = Some(v);
            } else if pred[lattice.index(i - 1, j)].is_some() {
                pred[v] = Some(lattice.index(i - 1, j));
            }
            if pred[v].is_none() && j > 0 && pred[lattice.index(i, j - 1)].is_some() {
                pred[v] = Some(lattice.index(i, j - 1));
            }
        }
    }
    let Some(mut v) = (0..m).map(|j| lattice.index(m - 1, j)).find(|&v| pred[v].is_some()) else {
        return OrientedCrossing { exists: false, path: Vec::new() };
    };
    let mut path = vec![(v % m, v / m)];
    while let Some(p) = pred[v] {
        if p == v {
            break;
        }
        v = p;
        path.push((v % m, v / m));
    }
    path.reverse();
    OrientedCrossing { exists: true, path }
}

/// Monte Carlo plan for the percolation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercoPlan {
    /// Field samples per domain size.
    pub samples: usize,
    /// Samples of `[0,3]²` used to estimate the threshold quantile.
    pub threshold_samples: usize,
    /// Grid spacing.
    pub h: f64,
    /// Base seed.
    pub seed: u64,
}

/// Results for one domain size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercoRow {
    /// Domain side.
    pub k: u32,
    /// Fraction of samples with an oriented crossing.
    pub p_crossing: f64,
    /// Standard error of `p_crossing`.
    pub p_crossing_se: f64,
    /// Fraction of samples with `L_{k,k} ≤ 4k · threshold`.
    pub p_length_bound: f64,
    /// Standard error of `p_length_bound`.
    pub p_length_bound_se: f64,
    /// Samples with an oriented crossing but `L_{k,k} > 4k · threshold`.
    pub violations: usize,
    /// Largest `L_{k,k} − Σ_path (up + right)` over samples with a crossing.
    pub max_path_excess: f64,
    /// Number of samples.
    pub n_samples: usize,
}

/// Crossing probability curve of the site percolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercoCurve {
    /// `γ`.
    pub gamma: f64,
    /// Scale index.
    pub n: u32,
    /// Quantile level.
    pub epsilon: f64,
    /// Threshold `l̄_n(ε)`.
    pub threshold: f64,
    /// Mean fraction of open sites and its standard error across samples.
    pub open_probability: (f64, f64),
    /// `open_probability ≥ 1 − 2ε` within three standard errors.
    pub open_check_passed: bool,
    /// Rows by domain size.
    pub rows: Vec<PercoRow>,
    /// Per-sample site lattices, by domain size.
    #[serde(skip)]
    pub lattices: Vec<Vec<SiteLattice>>,
}

/// Header of the percolation CSV export.
pub const PERCO_CSV_HEADER: [&str; 9] = ["seed", "config_hash", "k", "n", "gamma", "epsilon", "p_crossing", "p_length_bound", "n_samples"];

impl PercoCurve {
    /// Whether every sample with an oriented crossing satisfied the length bound.
    pub fn implication_holds(&self) -> bool {
        self.rows.iter().all(|r| r.violations == 0)
    }

    /// Writes the curve, one row per domain size.
    pub fn write_csv<W: Write>(&self, w: W, seed: u64, config_hash: &str) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| crate::LfppError::Serde(e.to_string());
        out.write_record(PERCO_CSV_HEADER).map_err(err)?;
        for r in &self.rows {
            out.write_record([
                seed.to_string(),
                config_hash.to_string(),
                r.k.to_string(),
                self.n.to_string(),
                self.gamma.to_string(),
                self.epsilon.to_string(),
                r.p_crossing.to_string(),
                r.p_length_bound.to_string(),
                r.n_samples.to_string(),
            ])
            .map_err(err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Threshold `l̄_n(ε)` estimated from crossing samples of `[0,3]²`.
pub fn site_threshold(sampler: &FieldSampler, gamma: f64, n: u32, epsilon: f64, plan: &PercoPlan) -> Result<f64> {
    let samples = crossing_samples(sampler, gamma, n, plan.h, plan.threshold_samples, derive_seed(plan.seed, "perco/threshold", &[]))?;
    let scale =
        ScaleSamples { n, l13: samples.iter().map(|s| s.nested.l13).collect(), l31: samples.iter().map(|s| s.nested.l31).collect(), l11: samples.iter().map(|s| s.l11).collect() };
    let table = build_quantile_table(&[scale], epsilon, derive_seed(plan.seed, "perco/bootstrap", &[]))?;
    Ok(table.rows[0].l_bar.value)
}

/// Sweeps the site percolation over domain sizes at threshold `l̄_n(ε)`.
pub fn perco_sweep(sampler: &FieldSampler, gamma: f64, n: u32, k_values: &[u32], epsilon: f64, plan: &PercoPlan) -> Result<PercoCurve> {
    let threshold = site_threshold(sampler, gamma, n, epsilon, plan)?;
    perco_sweep_at(sampler, gamma, n, k_values, epsilon, threshold, plan)
}

/// Sweeps the site percolation at a given threshold.
pub fn perco_sweep_at(sampler: &FieldSampler, gamma: f64, n: u32, k_values: &[u32], epsilon: f64, threshold: f64, plan: &PercoPlan) -> Result<PercoCurve> {
    check_resolution(plan.h, n)?;
    if plan.samples < 2 {
        return invalid("the percolation sweep needs at least two samples per size");
    }
    if k_values.iter().any(|&k| k < 2) {
        return invalid("domain sizes must be at least 2");
    }
    let mut rows = Vec::new();
    let mut lattices = Vec::new();
    let mut open_fractions = Vec::new();
    for &k in k_values {
        let outcomes: Vec<(SiteLattice, bool, bool, f64)> = (0..plan.samples)
            .into_par_iter()
            .map(|s| -> Result<_> {
                let seed = derive_seed(plan.seed, "perco", &[k as u64, s as u64]);
                let field = sampler.sample(n, Rect::new(0.0, 0.0, k as f64, k as f64), plan.h, seed)?;
                let lattice = classify_sites(&field, gamma, n, threshold)?;
                let metric = build_metric(&field, gamma, field.grid.extent)?;
                let lkk = crossing_length(&metric, Orientation::LeftRight)?.length;
                let crossing = oriented_crossing(&lattice);
                let path_sum: f64 = crossing.path.iter().map(|&(i, j)| lattice.up[lattice.index(i, j)] + lattice.right[lattice.index(i, j)]).sum();
                let excess = if crossing.exists { lkk - path_sum } else { f64::NEG_INFINITY };
                Ok((lattice, crossing.exists, lkk <= 4.0 * k as f64 * threshold, excess))
            })
            .collect::<Result<_>>()?;
        let cross: Vec<f64> = outcomes.iter().map(|o| f64::from(u8::from(o.1))).collect();
        let bound: Vec<f64> = outcomes.iter().map(|o| f64::from(u8::from(o.2))).collect();
        let (p_crossing, p_crossing_se) = mean_se(&cross);
        let (p_length_bound, p_length_bound_se) = mean_se(&bound);
        open_fractions.extend(outcomes.iter().map(|o| o.0.open_fraction()));
        rows.push(PercoRow {
            k,
            p_crossing,
            p_crossing_se,
            p_length_bound,
            p_length_bound_se,
            violations: outcomes.iter().filter(|o| o.1 && !o.2).count(),
            max_path_excess: outcomes.iter().map(|o| o.3).fold(f64::NEG_INFINITY, f64::max),
            n_samples: plan.samples,
        });
        lattices.push(outcomes.into_iter().map(|o| o.0).collect());
    }
    let (p_open, p_open_se) = mean_se(&open_fractions);
    Ok(PercoCurve { gamma, n, epsilon, threshold, open_probability: (p_open, p_open_se), open_check_passed: p_open >= 1.0 - 2.0 * epsilon - 3.0 * p_open_se, rows, lattices })
}

/// Sample correlation of the open indicators of sites `a` and `b` across
/// lattices, with the standard error `1/√N` of a null correlation.
pub fn site_correlation(lattices: &[SiteLattice], a: (usize, usize), b: (usize, usize)) -> Result<(f64, f64)> {
    if lattices.len() < 2 {
        return invalid("site correlation needs at least two lattices");
    }
    let m = lattices[0].m;
    if a.0 >= m || a.1 >= m || b.0 >= m || b.1 >= m {
        return invalid("site index out of range");
    }
    let x: Vec<f64> = lattices.iter().map(|l| f64::from(u8::from(l.is_open(a.0, a.1)))).collect();
    let y: Vec<f64> = lattices.iter().map(|l| f64::from(u8::from(l.is_open(b.0, b.1)))).collect();
    let nf = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / nf, y.iter().sum::<f64>() / nf);
    let cov: f64 = x.iter().zip(&y).map(|(p, q)| (p - mx) * (q - my)).sum::<f64>() / nf;
    let vx = x.iter().map(|p| (p - mx).powi(2)).sum::<f64>() / nf;
    let vy = y.iter().map(|q| (q - my).powi(2)).sum::<f64>() / nf;
    let corr = if vx > 0.0 && vy > 0.0 { cov / (vx * vy).sqrt() } else { 0.0 };
    Ok((corr, 1.0 / nf.sqrt()))
}
