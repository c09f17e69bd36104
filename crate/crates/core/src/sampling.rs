//! Field sampling front end and per-sample crossing measurements shared by
//! the statistics, percolation and experiment layers.

use crate::error::{invalid, Result};
use crate::kernel::Kernel;
use crate::metric::{build_metric, crossing_length, nested_crossings, LatticeMetric, NestedCrossings, Orientation};
use crate::seeds::derive_seed;
use crate::synth::{new_noise_store, sample_band_field, spectral_sample, FieldSample, GridSpec, NoiseConfig, Rect};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Which sampler produces field samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Direct white-noise synthesis from a noise store.
    WhiteNoise,
    /// Circulant embedding on the node lattice.
    #[default]
    Spectral,
}

/// Draws `φ_{0,n}` on grid-aligned rectangles with either sampler.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    /// The kernel.
    pub kernel: Arc<Kernel>,
    /// Sampler in use.
    pub kind: SamplerKind,
    /// Noise discretization for the white-noise sampler.
    pub noise: NoiseConfig,
}

impl FieldSampler {
    /// A sampler with the default noise discretization.
    pub fn new(kernel: Arc<Kernel>, kind: SamplerKind) -> Self {
        FieldSampler { kernel, kind, noise: NoiseConfig::default() }
    }

    /// Samples `φ_{0,n}` on the nodes of `extent` with spacing `h`.
    pub fn sample(&self, n: u32, extent: Rect, h: f64, seed: u64) -> Result<FieldSample> {
        match self.kind {
            SamplerKind::Spectral => spectral_sample(&self.kernel, 0, n, &GridSpec::new(extent, h, 0.0)?, seed),
            SamplerKind::WhiteNoise => {
                let grid = GridSpec::new(extent, h, 2.0 * self.kernel.r0())?;
                let store = new_noise_store(self.kernel.clone(), seed, n, grid, self.noise)?;
                sample_band_field(&store, 0, n, &grid)
            }
        }
    }
}

/// Checks the resolution rule `h ≤ 2^{-n-2}`.
pub fn check_resolution(h: f64, n: u32) -> Result<()> {
    let limit = 2f64.powi(-(n as i32) - 2);
    if h > limit * (1.0 + 1e-12) {
        return invalid(format!("grid spacing {h} is too coarse for scale {n}: the resolution rule requires h <= 2^-(n+2) = {limit}"));
    }
    Ok(())
}

/// Crossing measurements on one field sample of `φ_{0,n}` over `[0,3]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingSample {
    /// Seed of the field sample.
    pub seed: u64,
    /// `L_{1,1}` of `[0,1]²`.
    pub l11: f64,
    /// Nested crossings of `[0,3]²`, including `L_{1,3}` and `L_{3,1}`.
    pub nested: NestedCrossings,
    /// `∫_0^1 e^{(γ/2)φ(x, 1/2)} dx` by the trapezoid rule on the node row.
    pub line_integral: f64,
    /// `sup_{[0,1]²} φ_{0,n}` over the nodes.
    pub sup: f64,
}

/// Trapezoid integral of the node factors along row `j` between columns `i0` and `i1`.
pub fn row_integral(metric: &LatticeMetric, j: usize, i0: usize, i1: usize) -> f64 {
    let f = metric.factors();
    (i0..i1).map(|i| 0.5 * (f[metric.index(i, j)] + f[metric.index(i + 1, j)])).sum::<f64>() * metric.h()
}

/// Measures every crossing of one sample.
pub fn crossing_sample(sampler: &FieldSampler, gamma: f64, n: u32, h: f64, seed: u64) -> Result<CrossingSample> {
    check_resolution(h, n)?;
    let field = sampler.sample(n, Rect::new(0.0, 0.0, 3.0, 3.0), h, seed)?;
    let square = build_metric(&field, gamma, Rect::new(0.0, 0.0, 3.0, 3.0))?;
    let nested = nested_crossings(&square)?;
    let unit = square.restrict(Rect::new(0.0, 0.0, 1.0, 1.0))?;
    let l11 = crossing_length(&unit, Orientation::LeftRight)?.length;
    let mid = unit.ny() / 2;
    let line_integral = row_integral(&unit, mid, 0, unit.nx() - 1);
    let sup = unit.potential().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CrossingSample { seed, l11, nested, line_integral, sup })
}

/// `count` independent crossing samples; sample `i` uses the seed derived from `(seed, n, i)`.
pub fn crossing_samples(sampler: &FieldSampler, gamma: f64, n: u32, h: f64, count: usize, seed: u64) -> Result<Vec<CrossingSample>> {
    (0..count).into_par_iter().map(|i| crossing_sample(sampler, gamma, n, h, derive_seed(seed, "crossing", &[n as u64, i as u64]))).collect()
}
