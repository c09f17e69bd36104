//! Circulant-embedding sampler for the stationary band fields, used to
//! cross-check the white-noise synthesis.
//!
//! The covariance of `φ_{m,n}` is compactly supported in a disc of radius
//! `2 r0 2^{-m}`, so embedding the grid in a torus whose sides exceed the
//! grid side plus that radius reproduces the exact covariance on every pair
//! of grid nodes. The torus eigenvalues are the DFT of the wrapped
//! covariance; the sampler enlarges the torus until they are nonnegative.

use super::field::{FieldSample, Provenance};
use super::grid::GridSpec;
use super::noise::box_muller;
use crate::error::{invalid, LfppError, Result};
use crate::kernel::{Kernel, Scale};
use crate::numerics::{fft2d, next_fast_len};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use sha2::{Digest, Sha256};

/// Tuning of the circulant embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Initial torus side as a multiple of the minimal exact embedding side.
    pub enlargement: f64,
    /// How many times the torus may be doubled when eigenvalues are negative.
    pub max_doublings: u32,
    /// Negative eigenvalues above `-clip_tolerance × λ_max` are set to zero.
    pub clip_tolerance: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { enlargement: 1.0, max_doublings: 3, clip_tolerance: 1e-8 }
    }
}

/// Covariance `C_{m,n}` at lattice lags `(dx, dy) h` with `0 ≤ dx, dy ≤ reach`,
/// returned row-major in `dy` with stride `reach + 1`.
pub(crate) fn lag_covariance(kernel: &Kernel, m: u32, n: Scale, h: f64, reach: usize) -> Result<Vec<f64>> {
    let side = reach + 1;
    let pairs: Vec<(usize, usize)> = (0..side).flat_map(|dy| (0..=dy).map(move |dx| (dx, dy))).collect();
    let values = pairs.par_iter().map(|&(dx, dy)| kernel.band_covariance(m, n, h * (dx as f64).hypot(dy as f64))).collect::<Result<Vec<f64>>>()?;
    let mut out = vec![0.0; side * side];
    for (&(dx, dy), v) in pairs.iter().zip(values) {
        out[dy * side + dx] = v;
        out[dx * side + dy] = v;
    }
    Ok(out)
}

/// Samples `φ_{m,n}` on `grid` with the default embedding options.
pub fn spectral_sample(kernel: &Kernel, m: u32, n: u32, grid: &GridSpec, seed: u64) -> Result<FieldSample> {
    spectral_sample_with(kernel, m, n, grid, seed, &SpectralOptions::default())
}

/// Samples `φ_{m,n}` on `grid` by circulant embedding.
pub fn spectral_sample_with(kernel: &Kernel, m: u32, n: u32, grid: &GridSpec, seed: u64, options: &SpectralOptions) -> Result<FieldSample> {
    grid.validate()?;
    if m > n {
        return invalid(format!("band requires m <= n, got ({m}, {n})"));
    }
    if !(options.enlargement >= 1.0 && options.enlargement.is_finite()) {
        return invalid("torus enlargement factor must be at least 1");
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let support = 2.0 * kernel.r0() * 2f64.powi(-(m as i32));
    let reach = (support / grid.h).ceil() as usize;
    let lags = lag_covariance(kernel, m, Scale::Finite(n), grid.h, reach)?;
    let side = reach + 1;
    let lag = |d: usize| if d <= reach { Some(d) } else { None };

    let base_w = ((nx - 1 + reach + 1) as f64 * options.enlargement).ceil() as usize;
    let base_h = ((ny - 1 + reach + 1) as f64 * options.enlargement).ceil() as usize;
    let mut worst = f64::NAN;
    for doubling in 0..=options.max_doublings {
        let tw = next_fast_len(base_w << doubling);
        let th = next_fast_len(base_h << doubling);
        let mut spec = vec![Complex64::new(0.0, 0.0); tw * th];
        for y in 0..th {
            let Some(dy) = lag(y.min(th - y)) else { continue };
            for x in 0..tw {
                if let Some(dx) = lag(x.min(tw - x)) {
                    spec[y * tw + x].re = lags[dy * side + dx];
                }
            }
        }
        fft2d(&mut spec, tw, th, false);
        let lambda_max = spec.iter().map(|z| z.re).fold(0.0, f64::max);
        let lambda_min = spec.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        worst = lambda_min;
        if lambda_min < -options.clip_tolerance * lambda_max {
            continue;
        }
        let total = (tw * th) as f64;
        let mut rng = ChaCha8Rng::from_seed(spectral_key(seed, m, n));
        for z in spec.iter_mut() {
            let amp = (z.re.max(0.0) / total).sqrt();
            let (a, b) = box_muller(rng.next_u64(), rng.next_u64());
            *z = Complex64::new(amp * a, amp * b);
        }
        fft2d(&mut spec, tw, th, false);
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            values.extend(spec[j * tw..j * tw + nx].iter().map(|z| z.re));
        }
        return Ok(FieldSample {
            grid: *grid,
            band: (m, n),
            values,
            provenance: Provenance { method: "spectral".into(), seed, kernel_hash: kernel.spec().hash(), store_fingerprint: None, shifts: Vec::new() },
        });
    }
    Err(LfppError::Sampler(format!("circulant embedding is not positive semidefinite after {} doublings; most negative eigenvalue {worst:e}", options.max_doublings)))
}

/// ChaCha key of the spectral sampler for (seed, band).
fn spectral_key(seed: u64, m: u32, n: u32) -> [u8; 32] {
    let mut bytes = b"lfpp/spectral/v1".to_vec();
    bytes.extend(seed.to_le_bytes());
    bytes.extend(m.to_le_bytes());
    bytes.extend(n.to_le_bytes());
    Sha256::digest(&bytes).into()
}
