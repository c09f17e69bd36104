//! Discretized white noise on `ℝ² × (0, 1]`, generated lazily by a
//! counter-based stream cipher so that every cell value is a pure function
//! of its coordinates and the replacement log.

use super::grid::{GridSpec, Rect};
use crate::error::{invalid, LfppError, Result};
use crate::kernel::{hex_digest, Kernel};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::sync::Arc;

/// Discretization parameters of the white noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Number `S` of log-spaced time slabs per octave.
    pub slabs_per_octave: u32,
    /// Minimum number of noise cells per kernel radius at the coarse end of
    /// each octave (so at least this many across the kernel diameter at the
    /// fine end); the actual spacing is the next smaller power of two.
    pub cells_per_radius: f64,
    /// Resource ceiling on noise cells per slab over the padded extent at the finest scale.
    pub max_cells_per_slab: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { slabs_per_octave: 4, cells_per_radius: 8.0, max_cells_per_slab: 4.0e9 }
    }
}

/// One exact block resampling: the octave-`scale` noise with cell centers in
/// the dyadic block `[bx, bx+1] × [by, by+1] · 2^{-scale}` is redrawn from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    /// Octave `j`; the block is a square of side `2^{-j}`.
    pub scale: u32,
    /// Block index `(bx, by)`.
    pub block: (i64, i64),
    /// Seed of the replacement noise.
    pub seed: u64,
}

/// Geometry of one time slab `[t_lo, t_hi]` of an octave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slab {
    /// Lower end of the slab.
    pub t_lo: f64,
    /// Upper end of the slab.
    pub t_hi: f64,
    /// Geometric midpoint used as evaluation scale.
    pub t_mid: f64,
}

impl Slab {
    /// Slab thickness `t_hi - t_lo`.
    pub fn thickness(&self) -> f64 {
        self.t_hi - self.t_lo
    }
}

/// Offset applied to pair indices so that negative cells map to valid stream positions.
const PAIR_OFFSET: i64 = 1 << 40;

/// A seeded white-noise realization organised by (octave, slab, cell).
///
/// The store never materializes noise by itself: cells are generated on
/// demand, so cloning is cheap and [`NoiseStore::resample_block`] returns a
/// new store that shares everything except a longer replacement log.
#[derive(Debug, Clone)]
pub struct NoiseStore {
    kernel: Arc<Kernel>,
    master_seed: u64,
    n_max: u32,
    grid: GridSpec,
    config: NoiseConfig,
    exponent: i32,
    replacement_log: Vec<Replacement>,
}

/// Creates a noise store after validating the configuration and resource ceilings.
pub fn new_noise_store(kernel: Arc<Kernel>, master_seed: u64, n_max: u32, grid: GridSpec, config: NoiseConfig) -> Result<NoiseStore> {
    grid.validate()?;
    if config.slabs_per_octave == 0 {
        return invalid("slabs_per_octave must be at least 1");
    }
    if !(config.cells_per_radius >= 1.0 && config.cells_per_radius.is_finite()) {
        return invalid("cells_per_radius must be at least 1");
    }
    let r0 = kernel.r0();
    if grid.padding < 2.0 * r0 * (1.0 - 1e-12) {
        return invalid(format!("grid padding {} must be at least 2 r0 = {}", grid.padding, 2.0 * r0));
    }
    if n_max > 30 {
        return invalid(format!("n_max = {n_max} is beyond the supported range (<= 30)"));
    }
    let exponent = (config.cells_per_radius / r0).log2().ceil() as i32;
    let store = NoiseStore { kernel, master_seed, n_max, grid, config, exponent, replacement_log: Vec::new() };
    let padded = grid.padded_extent();
    let nu = store.cell_spacing(n_max);
    let cells = (padded.width() / nu).ceil() * (padded.height() / nu).ceil();
    if cells > config.max_cells_per_slab {
        return Err(LfppError::Resource(format!(
            "finest-scale noise needs {cells:.3e} cells per slab ((padded width / spacing) x (padded height / spacing) with spacing 2^-(n_max+{exponent}) = {nu:e}); the ceiling is {:.3e}",
            config.max_cells_per_slab
        )));
    }
    Ok(store)
}

impl NoiseStore {
    /// The kernel whose white-noise representation this store discretizes.
    pub fn kernel(&self) -> &Arc<Kernel> {
        &self.kernel
    }

    /// Master seed.
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Finest octave index available.
    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// The grid the store was configured for.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Discretization parameters.
    pub fn config(&self) -> &NoiseConfig {
        &self.config
    }

    /// Number of slabs per octave.
    pub fn slabs_per_octave(&self) -> u32 {
        self.config.slabs_per_octave
    }

    /// Replacement log in application order.
    pub fn replacement_log(&self) -> &[Replacement] {
        &self.replacement_log
    }

    /// Noise cell spacing `ν_j = 2^{-j-a}` at octave `j`.
    pub fn cell_spacing(&self, j: u32) -> f64 {
        2f64.powi(-(j as i32) - self.exponent)
    }

    /// Number of noise cells along the side of a block of octave `j`.
    pub fn cells_per_block(&self) -> i64 {
        1i64 << self.exponent.max(0)
    }

    /// Slab `s` of octave `j`: `[2^{-j-1} 2^{s/S}, 2^{-j-1} 2^{(s+1)/S}]`.
    pub fn slab(&self, j: u32, s: u32) -> Slab {
        let base = 2f64.powi(-(j as i32) - 1);
        let inv = 1.0 / self.config.slabs_per_octave as f64;
        let t_lo = base * 2f64.powf(s as f64 * inv);
        let t_hi = base * 2f64.powf((s + 1) as f64 * inv);
        Slab { t_lo, t_hi, t_mid: base * 2f64.powf((s as f64 + 0.5) * inv) }
    }

    /// Standard deviation of a noise cell: `sqrt(cell area × slab thickness)`.
    pub fn cell_std(&self, j: u32, s: u32) -> f64 {
        self.cell_spacing(j) * self.slab(j, s).thickness().sqrt()
    }

    /// Closed square of the dyadic block `block` at octave `j`.
    pub fn block_rect(j: u32, block: (i64, i64)) -> Rect {
        let side = 2f64.powi(-(j as i32));
        Rect::from_origin(block.0 as f64 * side, block.1 as f64 * side, side, side)
    }

    /// Returns a copy whose octave-`j` noise inside block `P` is redrawn from `replacement_seed`.
    pub fn resample_block(&self, j: u32, block: (i64, i64), replacement_seed: u64) -> Result<NoiseStore> {
        if j > self.n_max {
            return invalid(format!("block scale {j} exceeds n_max = {}", self.n_max));
        }
        let rect = Self::block_rect(j, block);
        let padded = self.grid.padded_extent();
        let interior_overlap = rect.x0 < padded.x1 && padded.x0 < rect.x1 && rect.y0 < padded.y1 && padded.y0 < rect.y1;
        if !interior_overlap {
            return invalid(format!("block {block:?} at scale {j} does not intersect the padded grid {padded:?}"));
        }
        let mut out = self.clone();
        out.replacement_log.push(Replacement { scale: j, block, seed: replacement_seed });
        Ok(out)
    }

    /// Value of a single noise cell (variance `ν_j² × slab thickness`).
    pub fn noise(&self, j: u32, s: u32, cell: (i64, i64)) -> f64 {
        let mut out = [0.0];
        self.fill_standard(j, s, cell.0, cell.1, 1, 1, &mut out);
        out[0] * self.cell_std(j, s)
    }

    /// Fills a `w × h` box of standard normal draws starting at cell `(cx0, cy0)`
    /// (row-major, rows are `y`), honouring the replacement log.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn fill_standard(&self, j: u32, s: u32, cx0: i64, cy0: i64, w: usize, h: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), w * h);
        let base_key = noise_key(self.master_seed, j, s);
        for r in 0..h {
            fill_row(&base_key, cy0 + r as i64, cx0, &mut out[r * w..(r + 1) * w]);
        }
        let side = self.cells_per_block();
        for rep in self.replacement_log.iter().filter(|rep| rep.scale == j) {
            let (bx0, by0) = (rep.block.0 * side, rep.block.1 * side);
            let x_lo = bx0.max(cx0);
            let x_hi = (bx0 + side).min(cx0 + w as i64);
            let y_lo = by0.max(cy0);
            let y_hi = (by0 + side).min(cy0 + h as i64);
            if x_lo >= x_hi || y_lo >= y_hi {
                continue;
            }
            let key = noise_key(rep.seed, j, s);
            for cy in y_lo..y_hi {
                let r = (cy - cy0) as usize;
                let row = &mut out[r * w..(r + 1) * w];
                fill_row(&key, cy, x_lo, &mut row[(x_lo - cx0) as usize..(x_hi - cx0) as usize]);
            }
        }
    }

    /// Short fingerprint of the store configuration and replacement log.
    pub fn fingerprint(&self) -> String {
        let desc = serde_json::json!({
            "kernel": self.kernel.spec().hash(),
            "seed": self.master_seed,
            "n_max": self.n_max,
            "config": self.config,
            "log": self.replacement_log,
        });
        hex_digest(desc.to_string().as_bytes())
    }
}

/// ChaCha key for (seed, octave, slab).
fn noise_key(seed: u64, j: u32, s: u32) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"lfpp/white-noise/v1");
    h.update(seed.to_le_bytes());
    h.update(j.to_le_bytes());
    h.update(s.to_le_bytes());
    h.finalize().into()
}

/// Fills cells `cx0 .. cx0 + out.len()` of row `cy` with standard normal draws.
///
/// Cells are paired as `(2p, 2p + 1)`; pair `p` of row `cy` always reads the
/// same two 64-bit words of stream `cy`, so the value of a cell never depends
/// on which neighbours are generated alongside it.
fn fill_row(key: &[u8; 32], cy: i64, cx0: i64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut rng = ChaCha8Rng::from_seed(*key);
    rng.set_stream(cy as u64);
    let p0 = cx0.div_euclid(2);
    rng.set_word_pos(((p0 + PAIR_OFFSET) as u128) * 4);
    let mut cx = 2 * p0;
    let end = cx0 + out.len() as i64;
    while cx < end {
        let (z0, z1) = box_muller(rng.next_u64(), rng.next_u64());
        if cx >= cx0 {
            out[(cx - cx0) as usize] = z0;
        }
        if cx + 1 >= cx0 && cx + 1 < end {
            out[(cx + 1 - cx0) as usize] = z1;
        }
        cx += 2;
    }
}

/// Box–Muller transform of two 64-bit words into two independent standard normals.
pub(crate) fn box_muller(a: u64, b: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((a >> 11) + 1) as f64 * SCALE;
    let u2 = (b >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}
