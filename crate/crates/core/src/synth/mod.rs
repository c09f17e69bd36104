//! Field synthesis: grids, lazily generated white noise, band fields,
//! a circulant-embedding cross-check sampler, Cameron–Martin shifts and
//! binary field persistence.

pub mod field;
pub mod grid;
pub mod io;
pub mod noise;
pub mod shift;
pub mod spectral;

pub use field::{sample_band_field, synthesize_points, FieldSample, Provenance};
pub use grid::{GridSpec, Rect};
pub use io::{read_field, sidecar_path, write_field};
pub use noise::{new_noise_store, NoiseConfig, NoiseStore, Replacement, Slab};
pub use shift::{bump_grid_function, cameron_martin_shift, grid_inner_product, shift_field, ShiftFunction};
pub use spectral::{spectral_sample, spectral_sample_with, SpectralOptions};
