//! Monte Carlo estimators and empirical checks of the crossing inequalities.
//!
//! Every estimator is a pure function of sample arrays. Standard errors come
//! from 1000 bootstrap resamples with counter-based seeds, and statistical
//! checks pass iff the estimate is within three standard errors of its bound.

pub mod diagnostics;
pub mod efron_stein;
pub mod inequality;
pub mod quantile;
pub mod reweight;
pub mod tail;

pub use diagnostics::{
    concentration_diagnostics, fit_line, lemma_inequality_check, sup_field_report, ConcentrationReport, ConcentrationRow, LemmaReport, LineFit, SupReport, SupRow, SupSamples,
};
pub use efron_stein::{efron_stein_report, efron_stein_with, BlockFunctional, BlockPlan, EfronSteinReport, LogCrossingFunctional, ScaleContribution, MAX_EFRON_STEIN_SCALE};
pub use inequality::{
    fkg_check, inequality_suite, moment_method_check, product_bound_check, straight_line_check, subadditivity_check, variance_quantile_check, InequalityReport, SubCheck,
    SuiteConfig, SuiteSamples,
};
pub use quantile::{
    bootstrap, build_quantile_table, estimate_quantile, mean_se, quantile_estimate, quantile_sorted, sample_variance, Estimate, QuantileRow, QuantileTable, ScaleSamples,
    BOOTSTRAP_RESAMPLES, DEFAULT_EPSILON, MIN_TABLE_SAMPLES,
};
pub use reweight::{rn_reweighting_check, shift_decay, Bump, DecayRow, Functional, ReweightPlan, ReweightReport, MAX_LOG_VARIANCE};
pub use tail::{tail_report, TailCurve, TailFit, FIT_WINDOW, MIN_TAIL_SAMPLES, TAIL_GRID_POINTS};

use crate::error::{LfppError, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// One exported statistic: `(n, statistic)` identifies the row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    /// Scale index.
    pub n: u32,
    /// Statistic name.
    pub statistic: String,
    /// Estimate.
    pub value: f64,
    /// Standard error (NaN when not applicable).
    pub se: f64,
    /// Lower end of the interval (or the bound, for inequality rows).
    pub ci_low: f64,
    /// Upper end of the interval (or the pass flag, for inequality rows).
    pub ci_high: f64,
}

/// Header of statistic CSV exports.
pub const STAT_CSV_HEADER: [&str; 8] = ["seed", "config_hash", "n", "statistic", "value", "se", "ci_low", "ci_high"];

/// Writes statistic rows, each stamped with the seed and configuration hash.
pub fn write_stat_csv<W: Write>(w: W, rows: &[StatRow], seed: u64, config_hash: &str) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| LfppError::Serde(e.to_string());
    out.write_record(STAT_CSV_HEADER).map_err(err)?;
    for r in rows {
        out.write_record([
            seed.to_string(),
            config_hash.to_string(),
            r.n.to_string(),
            r.statistic.clone(),
            r.value.to_string(),
            r.se.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
        ])
        .map_err(err)?;
    }
    out.flush()?;
    Ok(())
}
