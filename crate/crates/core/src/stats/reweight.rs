//! Radon–Nikodým reweighting of Cameron–Martin shifts and the decay of
//! `f_n − f_{n+2}`.
//!
//! For `f_n = C_{0,n} ∗ g` the law of `φ_{0,n} + f_n` has density
//! `exp(⟨φ_{0,n}, g⟩ − ½⟨f_n, g⟩)` with respect to the law of `φ_{0,n}`, so
//! `E[F(φ + f_n)]` can be estimated either directly or by reweighting
//! unshifted samples.

use super::quantile::{mean_se, Estimate};
use super::StatRow;
use crate::error::{invalid, Result};
use crate::kernel::{Kernel, Scale};
use crate::metric::{build_metric, crossing_length, Orientation};
use crate::numerics::GlRule;
use crate::seeds::derive_seed;
use crate::synth::{bump_grid_function, cameron_martin_shift, grid_inner_product, shift_field, spectral_sample, FieldSample, GridSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest variance of `log F` accepted for exponential functionals; beyond it
/// the Monte Carlo estimators have effectively infinite variance.
pub const MAX_LOG_VARIANCE: f64 = 4.0;

/// A bounded (or mildly unbounded) functional of grid fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Functional {
    /// `F ≡ 1`.
    One,
    /// `F(φ) = exp⟨φ, h⟩` for a grid function `h`.
    ExpLinear {
        /// Node values of `h`.
        h: Vec<f64>,
    },
    /// `F(φ) = 1{L(φ) ≤ threshold}` for the left-right crossing of the grid extent.
    CrossingBelow {
        /// `γ`.
        gamma: f64,
        /// Length threshold.
        threshold: f64,
    },
}

impl Functional {
    fn name(&self) -> String {
        match self {
            Functional::One => "one".into(),
            Functional::ExpLinear { .. } => "exp_linear".into(),
            Functional::CrossingBelow { threshold, .. } => format!("crossing_below_{threshold}"),
        }
    }

    fn eval(&self, field: &FieldSample) -> Result<f64> {
        match self {
            Functional::One => Ok(1.0),
            Functional::ExpLinear { h } => Ok(grid_inner_product(&field.values, h, &field.grid)?.exp()),
            Functional::CrossingBelow { gamma, threshold } => {
                let metric = build_metric(field, *gamma, field.grid.extent)?;
                Ok(f64::from(u8::from(crossing_length(&metric, Orientation::LeftRight)?.length <= *threshold)))
            }
        }
    }
}

/// Monte Carlo plan for the reweighting check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReweightPlan {
    /// Number of field samples.
    pub samples: usize,
    /// Seed of the spectral sampler.
    pub seed: u64,
}

/// The two estimators of `E[F(φ + f_n)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightReport {
    /// Functional name.
    pub functional: String,
    /// Number of paired samples.
    pub samples: usize,
    /// `Ê[F(φ + f_n)]`.
    pub shifted: Estimate,
    /// `Ê[F(φ) exp(⟨φ, g⟩ − ½⟨f_n, g⟩)]`.
    pub reweighted: Estimate,
    /// Mean of the paired differences.
    pub difference: f64,
    /// Standard error of the paired differences.
    pub difference_se: f64,
    /// Exact value when available in closed form.
    pub closed_form: Option<f64>,
    /// `⟨f_n, g⟩`.
    pub energy: f64,
    /// `|difference| ≤ 3 difference_se`.
    pub passed: bool,
}

impl ReweightReport {
    /// Rows for CSV export.
    pub fn stat_rows(&self, n: u32) -> Vec<StatRow> {
        let mut out = vec![
            self.shifted.row(n, &format!("{}:shifted", self.functional)),
            self.reweighted.row(n, &format!("{}:reweighted", self.functional)),
            StatRow { n, statistic: format!("{}:difference", self.functional), value: self.difference, se: self.difference_se, ci_low: f64::NAN, ci_high: f64::NAN },
        ];
        if let Some(c) = self.closed_form {
            out.push(StatRow { n, statistic: format!("{}:closed_form", self.functional), value: c, se: 0.0, ci_low: c, ci_high: c });
        }
        out
    }
}

/// Compares the direct and reweighted estimators of `E[F(φ_{0,n} + f_n)]`.
///
/// Fields are drawn with the circulant-embedding sampler on `grid`, whose
/// node covariance is the lattice covariance used by the shift, so the
/// density is exact on the lattice. The same samples feed both estimators
/// and the pass rule uses the standard error of the paired differences.
pub fn rn_reweighting_check(kernel: &Kernel, g: &[f64], n: u32, grid: &GridSpec, functional: &Functional, plan: &ReweightPlan) -> Result<ReweightReport> {
    if plan.samples < 2 {
        return invalid("the reweighting check needs at least two samples");
    }
    let shift = cameron_martin_shift(kernel, g, Scale::Finite(n), grid)?;
    let energy = grid_inner_product(&shift.values, g, grid)?;
    let closed_form = match functional {
        Functional::One => Some(1.0),
        Functional::ExpLinear { h } => {
            if h.len() != grid.len() || h.iter().any(|v| !v.is_finite()) {
                return invalid("h must have one finite value per grid node");
            }
            let fh = cameron_martin_shift(kernel, h, Scale::Finite(n), grid)?;
            let var = grid_inner_product(&fh.values, h, grid)?;
            if var > MAX_LOG_VARIANCE {
                return invalid(format!("exp<phi, h> is unbounded in practice: Var <phi, h> = {var} exceeds {MAX_LOG_VARIANCE}"));
            }
            Some((grid_inner_product(&shift.values, h, grid)? + 0.5 * var).exp())
        }
        Functional::CrossingBelow { gamma, threshold } => {
            if !(*gamma >= 0.0 && threshold.is_finite()) {
                return invalid("crossing functional needs gamma >= 0 and a finite threshold");
            }
            None
        }
    };
    let pairs: Vec<(f64, f64)> = (0..plan.samples)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let field = spectral_sample(kernel, 0, n, grid, derive_seed(plan.seed, "reweight", &[i as u64]))?;
            let shifted = shift_field(&field, &shift)?;
            let w = (grid_inner_product(&field.values, g, grid)? - 0.5 * energy).exp();
            Ok((functional.eval(&shifted)?, functional.eval(&field)? * w))
        })
        .collect::<Result<_>>()?;
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let d: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    let (difference, difference_se) = mean_se(&d);
    Ok(ReweightReport {
        functional: functional.name(),
        samples: plan.samples,
        shifted: Estimate::mean_of(&a),
        reweighted: Estimate::mean_of(&b),
        difference,
        difference_se,
        closed_form,
        energy,
        passed: difference.abs() <= 3.0 * difference_se,
    })
}

/// A radial mollifier bump `g(x) = height · e · exp(−1/(1 − |x − center|²/radius²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    /// Centre.
    pub center: (f64, f64),
    /// Support radius.
    pub radius: f64,
    /// Value at the centre.
    pub height: f64,
}

impl Bump {
    /// Radial profile at distance `r` from the centre.
    pub fn profile(&self, r: f64) -> f64 {
        let s2 = (r / self.radius).powi(2);
        if s2 < 1.0 {
            self.height * (1.0 - 1.0 / (1.0 - s2)).exp()
        } else {
            0.0
        }
    }

    /// Node values on a grid.
    pub fn on_grid(&self, grid: &GridSpec) -> Vec<f64> {
        bump_grid_function(grid, self.center, self.radius, self.height)
    }
}

/// `sup |f_n − f_{n+2}|` for one `n` and its ratio to the next tabulated row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    /// Scale index `n`.
    pub n: u32,
    /// `sup_x |(C_{n+1,n+2} ∗ g)(x)|`.
    pub sup_diff: f64,
    /// `sup_diff(n) / sup_diff(n + 2)` when `n + 2` is tabulated.
    pub ratio: Option<f64>,
}

/// Continuum sup norms of `f_n − f_{n+2} = C_{n+1,n+2} ∗ g` for a bump `g`.
///
/// Both `g` and the band covariance are nonnegative, radial and
/// nonincreasing in the radius, so their convolution is too and its supremum
/// is the value at the bump centre, `2π ∫ C_{n+1,n+2}(r) g(r) r dr`.
pub fn shift_decay(kernel: &Kernel, g: &Bump, ns: &[u32]) -> Result<Vec<DecayRow>> {
    if !(g.radius > 0.0 && g.height.is_finite()) {
        return invalid("bump radius must be positive and height finite");
    }
    let rule = GlRule::new(16);
    let sup = |n: u32| -> Result<f64> {
        let table = kernel.band_covariance_table(n + 1, n + 2)?;
        let reach = (2.0 * kernel.r0() * 2f64.powi(-(n as i32) - 1)).min(g.radius);
        let pieces = 64;
        let mut total = 0.0;
        for k in 0..pieces {
            let (a, b) = (reach * k as f64 / pieces as f64, reach * (k + 1) as f64 / pieces as f64);
            total += rule.integrate(a, b, |r| table.eval(r) * g.profile(r) * r);
        }
        Ok(2.0 * PI * total)
    };
    let values: Vec<(u32, f64)> = ns.iter().map(|&n| sup(n).map(|v| (n, v))).collect::<Result<_>>()?;
    Ok(values.iter().map(|&(n, v)| DecayRow { n, sup_diff: v, ratio: values.iter().find(|w| w.0 == n + 2).map(|w| v / w.1) }).collect())
}
