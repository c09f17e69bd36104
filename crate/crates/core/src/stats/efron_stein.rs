//! Efron–Stein estimates over block-noise replacements.
//!
//! The white noise of octave `j` restricted to the dyadic block `P` of side
//! `2^{-j}` is an independent coordinate of the field. For a functional `F`
//! of the noise, `Var F ≤ Σ_j Σ_P E[(F^{(j,P)} − F)₊²]`, where `F^{(j,P)}` is
//! the functional after that block was redrawn.

use super::quantile::{bootstrap, mean_se, sample_variance, Estimate, BOOTSTRAP_RESAMPLES};
use super::StatRow;
use crate::error::{invalid, Result};
use crate::kernel::Kernel;
use crate::metric::{crossing_length, LatticeMetric, Orientation, Stencil};
use crate::seeds::derive_seed;
use crate::synth::{new_noise_store, sample_band_field, synthesize_points, GridSpec, NoiseConfig, NoiseStore, Rect};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A functional of the white noise that can be re-evaluated after one block is redrawn.
pub trait BlockFunctional: Sync {
    /// Data kept from the base evaluation to speed up perturbed evaluations.
    type State: Send + Sync;

    /// Finest octave whose noise the functional depends on.
    fn n(&self) -> u32;

    /// Blocks of octave `j` whose noise can influence the functional.
    fn blocks(&self, j: u32) -> Vec<(i64, i64)>;

    /// Value on `store` together with reusable state.
    fn evaluate(&self, store: &NoiseStore) -> Result<(f64, Self::State)>;

    /// Value on `resampled`, which equals `base` except for the noise of block `block` at octave `j`.
    fn evaluate_resampled(&self, base: &NoiseStore, state: &Self::State, resampled: &NoiseStore, j: u32, block: (i64, i64)) -> Result<f64>;
}

/// How blocks are sampled for the right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPlan {
    /// Blocks sampled per octave and replica, uniformly without replacement;
    /// `None` uses every block. Sampled terms are weighted by the inverse inclusion probability.
    pub blocks_per_scale: Option<usize>,
    /// Independent redraws per sampled block.
    pub resamples_per_block: usize,
    /// Seed for block selection and replacement noise.
    pub seed: u64,
}

impl Default for BlockPlan {
    fn default() -> Self {
        BlockPlan { blocks_per_scale: Some(4), resamples_per_block: 1, seed: 0 }
    }
}

/// Right-hand-side contribution of one octave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleContribution {
    /// Octave `j`.
    pub j: u32,
    /// Number of blocks influencing the functional.
    pub blocks: usize,
    /// Blocks sampled per replica.
    pub sampled: usize,
    /// Estimated `Σ_P E[(F^P − F)₊²]` with its Monte Carlo standard error.
    pub value: f64,
    /// Standard error over replicas.
    pub se: f64,
}

/// Both sides of the Efron–Stein inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfronSteinReport {
    /// Number of replicas.
    pub replicas: usize,
    /// Sample variance of `F` over replicas with bootstrap error.
    pub lhs: Estimate,
    /// Per-octave contributions.
    pub per_scale: Vec<ScaleContribution>,
    /// `Σ_j Σ_P E[(F^P − F)₊²]`.
    pub rhs: f64,
    /// Standard error of the right-hand side over replicas.
    pub rhs_se: f64,
    /// `½ Σ_j Σ_P E[(F^P − F)²]`, the symmetric form of the same bound.
    pub rhs_symmetric: f64,
    /// Standard error of the symmetric form.
    pub rhs_symmetric_se: f64,
    /// `√(se_lhs² + se_rhs²)`.
    pub combined_se: f64,
    /// `lhs ≤ rhs + 3 combined_se`.
    pub passed: bool,
}

impl EfronSteinReport {
    /// Rows for CSV export.
    pub fn stat_rows(&self, n: u32) -> Vec<StatRow> {
        let mut out = vec![self.lhs.row(n, "var_log_l11")];
        for c in &self.per_scale {
            out.push(StatRow { n, statistic: format!("rhs_scale_{}", c.j), value: c.value, se: c.se, ci_low: f64::NAN, ci_high: f64::NAN });
        }
        out.push(StatRow { n, statistic: "rhs".into(), value: self.rhs, se: self.rhs_se, ci_low: f64::NAN, ci_high: f64::NAN });
        out.push(StatRow { n, statistic: "rhs_symmetric".into(), value: self.rhs_symmetric, se: self.rhs_symmetric_se, ci_low: f64::NAN, ci_high: f64::NAN });
        out
    }
}

/// Per-replica sums: `(value, per-octave positive parts, per-octave symmetric parts)`.
type ReplicaTerms = (f64, Vec<f64>, Vec<f64>);

fn replica_terms<F: BlockFunctional>(functional: &F, store: &NoiseStore, blocks: &[Vec<(i64, i64)>], plan: &BlockPlan, replica: u64) -> Result<ReplicaTerms> {
    let (value, state) = functional.evaluate(store)?;
    let mut pos = vec![0.0; blocks.len()];
    let mut sym = vec![0.0; blocks.len()];
    for (j, list) in blocks.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let chosen: Vec<usize> = match plan.blocks_per_scale {
            Some(m) if m < list.len() => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, "es-blocks", &[replica, j as u64]));
                let mut v = sample(&mut rng, list.len(), m).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..list.len()).collect(),
        };
        let weight = list.len() as f64 / chosen.len() as f64;
        let terms: Vec<(f64, f64)> = chosen
            .par_iter()
            .map(|&b| -> Result<(f64, f64)> {
                let block = list[b];
                let (mut p, mut s) = (0.0, 0.0);
                for r in 0..plan.resamples_per_block {
                    let seed = derive_seed(plan.seed, "es-replacement", &[replica, j as u64, block.0 as u64, block.1 as u64, r as u64]);
                    let resampled = store.resample_block(j as u32, block, seed)?;
                    let d = functional.evaluate_resampled(store, &state, &resampled, j as u32, block)? - value;
                    p += d.max(0.0).powi(2);
                    s += 0.5 * d * d;
                }
                let k = plan.resamples_per_block as f64;
                Ok((p / k, s / k))
            })
            .collect::<Result<_>>()?;
        pos[j] = weight * terms.iter().map(|t| t.0).sum::<f64>();
        sym[j] = weight * terms.iter().map(|t| t.1).sum::<f64>();
    }
    Ok((value, pos, sym))
}

/// Estimates both sides of the Efron–Stein inequality for a block functional.
///
/// `make_store(seed)` builds the noise store of one replica; `seeds` has one entry per replica.
pub fn efron_stein_with<F, M>(functional: &F, seeds: &[u64], make_store: M, plan: &BlockPlan) -> Result<EfronSteinReport>
where
    F: BlockFunctional,
    M: Fn(u64) -> Result<NoiseStore>,
{
    if seeds.len() < 2 {
        return invalid("Efron-Stein estimation needs at least two replicas");
    }
    if plan.blocks_per_scale == Some(0) {
        return invalid("blocks_per_scale must be positive: a scale with no sampled block has no valid inverse-probability weight");
    }
    if plan.resamples_per_block == 0 {
        return invalid("resamples_per_block must be positive");
    }
    let blocks: Vec<Vec<(i64, i64)>> = (0..=functional.n()).map(|j| functional.blocks(j)).collect();
    let mut rows = Vec::with_capacity(seeds.len());
    for (r, &seed) in seeds.iter().enumerate() {
        let store = make_store(seed)?;
        rows.push(replica_terms(functional, &store, &blocks, plan, r as u64)?);
    }
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let lhs_value = sample_variance(&values);
    let lhs = bootstrap(values.len(), BOOTSTRAP_RESAMPLES, derive_seed(plan.seed, "es-lhs", &[]), |idx| {
        let v: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        sample_variance(&v)
    })?;
    let lhs = Estimate { value: lhs_value, ..lhs };
    let mut per_scale = Vec::new();
    for (j, list) in blocks.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r.1[j]).collect();
        let (value, se) = mean_se(&col);
        let sampled = plan.blocks_per_scale.map_or(list.len(), |m| m.min(list.len()));
        per_scale.push(ScaleContribution { j: j as u32, blocks: list.len(), sampled, value, se });
    }
    let totals: Vec<f64> = rows.iter().map(|r| r.1.iter().sum()).collect();
    let sym_totals: Vec<f64> = rows.iter().map(|r| r.2.iter().sum()).collect();
    let (rhs, rhs_se) = mean_se(&totals);
    let (rhs_symmetric, rhs_symmetric_se) = mean_se(&sym_totals);
    let combined_se = (lhs.se * lhs.se + rhs_se * rhs_se).sqrt();
    Ok(EfronSteinReport { replicas: seeds.len(), passed: lhs.value <= rhs + 3.0 * combined_se, lhs, per_scale, rhs, rhs_se, rhs_symmetric, rhs_symmetric_se, combined_se })
}

/// `log L_{1,1}` of the metric `e^{(γ/2)φ_{0,n}} ds` on the unit square.
///
/// A redrawn block only changes the field within `r0 2^{-j}` of the block, so
/// perturbed evaluations re-synthesize octave `j` at those nodes only.
#[derive(Debug, Clone)]
pub struct LogCrossingFunctional {
    /// `γ`.
    pub gamma: f64,
    /// Scale index `n`.
    pub n: u32,
    /// Node grid on `[0,1]²`.
    pub grid: GridSpec,
    /// Kernel radius `r0`.
    pub r0: f64,
}

impl LogCrossingFunctional {
    /// The functional on `[0,1]²` with spacing `2^{-n-2}` and padding `2 r0`.
    pub fn new(kernel: &Kernel, gamma: f64, n: u32) -> Result<Self> {
        let grid = GridSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), 2f64.powi(-(n as i32) - 2), 2.0 * kernel.r0())?;
        Ok(LogCrossingFunctional { gamma, n, grid, r0: kernel.r0() })
    }

    fn halo(&self, j: u32) -> f64 {
        self.r0 * 2f64.powi(-(j as i32))
    }

    fn log_length(&self, potential: Vec<f64>) -> Result<f64> {
        let metric = LatticeMetric::from_potential(self.grid.extent, self.grid.h, self.grid.nx(), self.grid.ny(), self.gamma, Stencil::Eight, potential)?;
        Ok(crossing_length(&metric, Orientation::LeftRight)?.length.ln())
    }
}

impl BlockFunctional for LogCrossingFunctional {
    type State = Vec<f64>;

    fn n(&self) -> u32 {
        self.n
    }

    fn blocks(&self, j: u32) -> Vec<(i64, i64)> {
        let side = 2f64.powi(-(j as i32));
        let r = self.grid.extent.inflate(self.halo(j));
        let lo = |a: f64| (a / side).floor() as i64;
        let hi = |a: f64| (a / side).ceil() as i64 - 1;
        let mut out = Vec::new();
        for by in lo(r.y0)..=hi(r.y1) {
            for bx in lo(r.x0)..=hi(r.x1) {
                out.push((bx, by));
            }
        }
        out
    }

    fn evaluate(&self, store: &NoiseStore) -> Result<(f64, Vec<f64>)> {
        let field = sample_band_field(store, 0, self.n, &self.grid)?;
        Ok((self.log_length(field.values.clone())?, field.values))
    }

    fn evaluate_resampled(&self, base: &NoiseStore, state: &Vec<f64>, resampled: &NoiseStore, j: u32, block: (i64, i64)) -> Result<f64> {
        let reach = NoiseStore::block_rect(j, block).inflate(self.halo(j) + base.cell_spacing(j));
        let (mut idx, mut pts) = (Vec::new(), Vec::new());
        for (k, (x, y)) in self.grid.nodes().into_iter().enumerate() {
            if reach.contains(x, y) {
                idx.push(k);
                pts.push((x, y));
            }
        }
        let mut values = state.clone();
        if !pts.is_empty() {
            let old = synthesize_points(base, j, j, &pts)?;
            let new = synthesize_points(resampled, j, j, &pts)?;
            for ((&k, a), b) in idx.iter().zip(old).zip(new) {
                values[k] += b - a;
            }
        }
        self.log_length(values)
    }
}

/// Largest scale accepted by [`efron_stein_report`].
pub const MAX_EFRON_STEIN_SCALE: u32 = 6;

/// Efron–Stein report for `log L_{1,1}` at `(γ, n)` with one noise store per seed.
pub fn efron_stein_report(kernel: Arc<Kernel>, seeds: &[u64], gamma: f64, n: u32, config: &NoiseConfig, plan: &BlockPlan) -> Result<EfronSteinReport> {
    if n > MAX_EFRON_STEIN_SCALE {
        return invalid(format!("Efron-Stein estimation is limited to n <= {MAX_EFRON_STEIN_SCALE}, got {n}"));
    }
    let functional = LogCrossingFunctional::new(&kernel, gamma, n)?;
    let grid = functional.grid;
    efron_stein_with(&functional, seeds, |seed| new_noise_store(kernel.clone(), seed, n, grid, *config), plan)
}
