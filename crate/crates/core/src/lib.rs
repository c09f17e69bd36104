//! Simulation lab for Liouville first-passage percolation over star-scale
//! invariant log-correlated Gaussian fields.
//!
//! The crate is organised in layers:
//!
//! * [`kernel`]: the bump function and its covariance and spectral analytics;
//! * [`synth`]: white-noise field synthesis, block resampling, a circulant
//!   embedding cross-check sampler and Cameron–Martin shifts;
//! * [`metric`]: lattice Riemannian metrics, crossing lengths, distances and
//!   diameters;
//! * [`stats`]: Monte Carlo estimators and empirical inequality checks;
//! * [`perco`]: the oriented site percolation comparison;
//! * [`expcli`]: configuration-driven experiments with CSV/JSON artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expcli;
pub mod kernel;
pub mod metric;
pub mod numerics;
pub mod perco;
pub mod sampling;
pub mod seeds;
pub mod stats;
pub mod synth;

pub use error::{LfppError, Result};
