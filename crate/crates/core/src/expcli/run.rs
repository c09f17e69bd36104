//! The experiment runner: composes the library into one experiment per kind
//! and writes seed-stamped CSV/JSON artifacts with a checksummed manifest.

use super::checks::{
    covariance_scaling, domination_grid, domination_reports, identity_sample, sampler_agreement, spectral_formulas, variance_law, weyl_check, CheckRow, IdentityOutcome,
};
use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::{LfppError, Result};
use crate::kernel::{hex_digest, Kernel, Scale};
use crate::metric::{build_metric, crossing_length, Orientation};
use crate::perco::{perco_sweep, PercoPlan};
use crate::sampling::{crossing_samples, CrossingSample, FieldSampler};
use crate::seeds::derive_seed;
use crate::stats::{
    build_quantile_table, concentration_diagnostics, efron_stein_report, estimate_quantile, inequality_suite, rn_reweighting_check, shift_decay, sup_field_report, tail_report,
    variance_quantile_check, write_stat_csv, BlockPlan, Bump, Functional, QuantileTable, ReweightPlan, ScaleSamples, StatRow, SuiteConfig, SuiteSamples, SupSamples,
};
use crate::synth::{sidecar_path, spectral_sample, write_field, FieldSample, GridSpec, Rect};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

/// One named pass/fail outcome of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// Check name.
    pub name: String,
    /// Outcome.
    pub passed: bool,
    /// Short human-readable detail.
    pub detail: String,
}

impl Verdict {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Verdict { name: name.into(), passed, detail: detail.into() }
    }
}

/// A derived seed recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedEntry {
    /// Stream label.
    pub label: String,
    /// Seed value.
    pub seed: u64,
}

/// Provenance of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Experiment kind.
    pub kind: ExperimentKind,
    /// Hash of the effective configuration (seed excluded).
    pub config_hash: String,
    /// Crate version.
    pub code_version: String,
    /// Master seed.
    pub seed: u64,
    /// SHA-256 of every artifact, by file name.
    pub files: BTreeMap<String, String>,
    /// Wall-clock duration in seconds.
    pub wall_clock_seconds: f64,
    /// Seeds of the top-level random streams.
    pub seed_ledger: Vec<SeedEntry>,
    /// Whether every verdict passed.
    pub all_passed: bool,
    /// Names of failed verdicts.
    pub failed: Vec<String>,
}

/// Artifacts produced by one experiment before they are written.
struct Output {
    results: Vec<u8>,
    extra: Vec<(String, Vec<u8>)>,
    verdicts: Vec<Verdict>,
    report: Value,
    seeds: Vec<SeedEntry>,
    fields: Vec<FieldSample>,
}

impl Output {
    fn new(results: Vec<u8>, verdicts: Vec<Verdict>, report: Value) -> Self {
        Output { results, extra: Vec::new(), verdicts, report, seeds: Vec::new(), fields: Vec::new() }
    }
}

/// Shared state of one run.
struct Context<'a> {
    config: &'a ExperimentConfig,
    kernel: Arc<Kernel>,
    sampler: FieldSampler,
    hash: String,
}

impl Context<'_> {
    fn seed(&self, label: &str) -> u64 {
        derive_seed(self.config.seed, label, &[])
    }

    fn stat_csv(&self, rows: &[StatRow]) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_stat_csv(&mut buf, rows, self.config.seed, &self.hash)?;
        Ok(buf)
    }

    /// CSV with `seed` and `config_hash` prepended to every row.
    fn table_csv(&self, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
        let err = |e: csv::Error| LfppError::Serde(e.to_string());
        let mut out = csv::Writer::from_writer(Vec::new());
        let mut full = vec!["seed", "config_hash"];
        full.extend_from_slice(header);
        out.write_record(&full).map_err(err)?;
        for row in rows {
            let mut rec = vec![self.config.seed.to_string(), self.hash.clone()];
            rec.extend(row);
            out.write_record(&rec).map_err(err)?;
        }
        out.into_inner().map_err(|e| LfppError::Serde(e.to_string()))
    }

    fn crossing_samples(&self, n: u32) -> Result<Vec<CrossingSample>> {
        let c = self.config;
        crossing_samples(&self.sampler, c.field.gamma, n, c.h(), c.samples.count, self.seed("crossing"))
    }

    fn dump_fields(&self, extent: Rect, n: u32, label: &str) -> Result<Vec<FieldSample>> {
        (0..self.config.output.dump_fields as u64).map(|i| self.sampler.sample(n, extent, self.config.h(), derive_seed(self.config.seed, label, &[n as u64, i]))).collect()
    }
}

fn scale_samples(n: u32, samples: &[CrossingSample]) -> ScaleSamples {
    ScaleSamples { n, l13: samples.iter().map(|s| s.nested.l13).collect(), l31: samples.iter().map(|s| s.nested.l31).collect(), l11: samples.iter().map(|s| s.l11).collect() }
}

fn check_verdict(name: &str, rows: &[CheckRow]) -> Verdict {
    let failed = rows.iter().filter(|r| !r.passed).count();
    Verdict::new(name, failed == 0, format!("{failed} of {} comparisons outside tolerance", rows.len()))
}

fn field_check(ctx: &Context) -> Result<Output> {
    let c = ctx.config;
    let reps = c.samples.count;
    let variance = variance_law(&ctx.kernel, &c.scales(), reps, ctx.seed("variance-law"))?;
    let octaves: Vec<u32> = (0..=c.field_check.max_octave).collect();
    let scaling = covariance_scaling(&ctx.kernel, &octaves, c.field_check.lags, reps, ctx.seed("covariance-scaling"))?;
    let agreement = sampler_agreement(&ctx.kernel, c.field.n_max, c.h(), c.field_check.lags, reps, ctx.seed("sampler-agreement"))?;
    let mut verdicts: Vec<Verdict> =
        variance.iter().map(|r| Verdict::new(format!("variance_law_n{}", r.n), r.passed, format!("{:.5} ± {:.5} vs {:.5}", r.estimate, r.se, r.target))).collect();
    verdicts.push(check_verdict("covariance_scaling", &scaling));
    verdicts.push(check_verdict("sampler_agreement", &agreement));
    let rows: Vec<StatRow> = variance.iter().chain(&scaling).chain(&agreement).map(CheckRow::stat_row).collect();
    let mut out = Output::new(ctx.stat_csv(&rows)?, verdicts, json!({ "variance": variance, "covariance_scaling": scaling, "sampler_agreement": agreement }));
    out.seeds = ["variance-law", "covariance-scaling", "sampler-agreement"].iter().map(|l| SeedEntry { label: (*l).into(), seed: ctx.seed(l) }).collect();
    Ok(out)
}

const CROSSING_COLUMNS: [&str; 11] = ["n", "sample", "l11", "l13", "l13_tilde", "l33", "l31", "l31_tilde", "line_integral", "sup", "sample_seed"];

fn crossing(ctx: &Context) -> Result<Output> {
    let c = ctx.config;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    let mut report = serde_json::Map::new();
    for n in c.scales() {
        let samples = ctx.crossing_samples(n)?;
        let nested_bad = samples.iter().filter(|s| !(s.nested.subadditivity_holds() && s.nested.monotonicity_holds())).count();
        let line_bad = samples.iter().filter(|s| s.l11 > s.line_integral * (1.0 + 1e-12)).count();
        let ids: Vec<IdentityOutcome> = samples
            .iter()
            .take(c.crossing.identity_samples)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|s| identity_sample(&ctx.sampler, c.field.gamma, n, c.h(), c.crossing.net_spacing, s.seed))
            .collect::<Result<_>>()?;
        let ik_bad: usize = ids.iter().map(|o| o.ik_violations.len()).sum();
        let ik_checked: usize = ids.iter().map(|o| o.ik_checked).sum();
        let diam_bad = ids.iter().filter(|o| !o.diameter_dominates).count();
        let chain_bad = ids.iter().filter(|o| !o.chaining_holds).count();
        let log_l11: Vec<f64> = samples.iter().map(|s| s.l11.ln()).collect();
        let vq = variance_quantile_check(&log_l11, &SuiteConfig::default().variance_levels)?;
        let vq_bad = vq.iter().filter(|r| !r.passed).count();
        verdicts.push(Verdict::new(format!("nested_identities_n{n}"), nested_bad == 0, format!("{nested_bad} of {} samples violate subadditivity or monotonicity", samples.len())));
        verdicts.push(Verdict::new(format!("straight_line_bound_n{n}"), line_bad == 0, format!("{line_bad} samples with L11 above the straight segment")));
        verdicts.push(Verdict::new(format!("ik_lower_bound_n{n}"), ik_bad == 0, format!("{ik_bad} of {ik_checked} (sample, k) pairs violate the I_k bound")));
        verdicts.push(Verdict::new(format!("diameter_dominates_crossing_n{n}"), diam_bad == 0, format!("{diam_bad} of {} samples", ids.len())));
        verdicts.push(Verdict::new(format!("chaining_bound_n{n}"), chain_bad == 0, format!("{chain_bad} of {} samples", ids.len())));
        verdicts.push(Verdict::new(format!("variance_quantile_n{n}"), vq_bad == 0, format!("{vq_bad} of {} levels", vq.len())));
        report.insert(format!("n{n}"), json!({ "samples": samples.len(), "identity_samples": ids.len(), "variance_quantile": vq }));
        for (i, s) in samples.iter().enumerate() {
            let x = &s.nested;
            rows.push(vec![
                n.to_string(),
                i.to_string(),
                s.l11.to_string(),
                x.l13.to_string(),
                x.l13_tilde.to_string(),
                x.l33.to_string(),
                x.l31.to_string(),
                x.l31_tilde.to_string(),
                s.line_integral.to_string(),
                s.sup.to_string(),
                s.seed.to_string(),
            ]);
        }
    }
    let mut out = Output::new(ctx.table_csv(&CROSSING_COLUMNS, rows)?, verdicts, Value::Object(report));
    out.seeds.push(SeedEntry { label: "crossing".into(), seed: ctx.seed("crossing") });
    out.fields = ctx.dump_fields(Rect::new(0.0, 0.0, 3.0, 3.0), c.field.n_max, "dump")?;
    Ok(out)
}

fn quantile_table(ctx: &Context, per_scale: &[(u32, Vec<CrossingSample>)]) -> Result<QuantileTable> {
    let scales: Vec<ScaleSamples> = per_scale.iter().map(|(n, s)| scale_samples(*n, s)).collect();
    build_quantile_table(&scales, ctx.config.stats.epsilon, ctx.seed("quantile-bootstrap"))
}

fn all_scales(ctx: &Context) -> Result<Vec<(u32, Vec<CrossingSample>)>> {
    ctx.config.scales().into_iter().map(|n| ctx.crossing_samples(n).map(|s| (n, s))).collect()
}

fn quantiles(ctx: &Context) -> Result<Output> {
    let per_scale = all_scales(ctx)?;
    let table = quantile_table(ctx, &per_scale)?;
    let mut rows = table.stat_rows();
    let mut report = json!({ "table": table });
    if per_scale.len() >= 2 {
        let logs: Vec<(u32, Vec<f64>)> = per_scale.iter().map(|(n, s)| (*n, s.iter().map(|x| x.l11.ln()).collect())).collect();
        let conc = concentration_diagnostics(&logs, Some(&table), ctx.seed("concentration"))?;
        rows.extend(conc.stat_rows());
        report["concentration"] = serde_json::to_value(&conc)?;
    }
    let finite = table.rows.iter().all(|r| r.delta.is_finite() && r.l.value > 0.0);
    let verdicts = vec![Verdict::new("quantile_table", finite, format!("{} scales tabulated", table.rows.len()))];
    let mut out = Output::new(ctx.stat_csv(&rows)?, verdicts, report);
    out.seeds = ["crossing", "quantile-bootstrap", "concentration"].iter().map(|l| SeedEntry { label: (*l).into(), seed: ctx.seed(l) }).collect();
    Ok(out)
}

const RSW_COLUMNS: [&str; 14] = [
    "n",
    "l13",
    "l13_se",
    "l13_ci_low",
    "l13_ci_high",
    "l31_bar",
    "l31_bar_se",
    "l31_bar_ci_low",
    "l31_bar_ci_high",
    "delta",
    "delta_ci_low",
    "delta_ci_high",
    "epsilon",
    "n_samples",
];

fn rsw(ctx: &Context) -> Result<Output> {
    let c = ctx.config;
    let per_scale = all_scales(ctx)?;
    let table = quantile_table(ctx, &per_scale)?;
    let rows = table.rows.iter().map(|r| {
        vec![
            r.n.to_string(),
            r.l.value.to_string(),
            r.l.se.to_string(),
            r.l.ci_low.to_string(),
            r.l.ci_high.to_string(),
            r.l_bar.value.to_string(),
            r.l_bar.se.to_string(),
            r.l_bar.ci_low.to_string(),
            r.l_bar.ci_high.to_string(),
            r.delta.to_string(),
            r.delta_ci.0.to_string(),
            r.delta_ci.1.to_string(),
            table.epsilon.to_string(),
            r.samples.to_string(),
        ]
    });
    let results = ctx.table_csv(&RSW_COLUMNS, rows)?;
    let mut verdicts = Vec::new();
    let mut suite_rows = Vec::new();
    let mut suites = serde_json::Map::new();
    for (n, samples) in &per_scale {
        let suite = SuiteSamples {
            gamma: c.field.gamma,
            n: *n,
            nested: samples.iter().map(|s| s.nested).collect(),
            l11: samples.iter().map(|s| s.l11).collect(),
            line_integrals: samples.iter().map(|s| s.line_integral).collect(),
        };
        let config = SuiteConfig { seed: derive_seed(c.seed, "suite", &[*n as u64]), ..SuiteConfig::default() };
        let report = inequality_suite(&suite, &config)?;
        for id in ["a", "b", "c", "d", "e", "f"] {
            let checks: Vec<_> = report.checks.iter().filter(|k| k.id == id).collect();
            let failed = checks.iter().filter(|k| !k.passed).count();
            verdicts.push(Verdict::new(format!("inequality_{id}_n{n}"), failed == 0, format!("{failed} of {} rows failed", checks.len())));
        }
        suite_rows.extend(report.stat_rows(*n));
        suites.insert(format!("n{n}"), serde_json::to_value(&report)?);
    }
    let mut out = Output::new(results, verdicts, json!({ "table": table, "suites": suites }));
    out.extra.push(("inequalities.csv".into(), ctx.stat_csv(&suite_rows)?));
    out.seeds = ["crossing", "quantile-bootstrap"].iter().map(|l| SeedEntry { label: (*l).into(), seed: ctx.seed(l) }).collect();
    Ok(out)
}

const TAIL_COLUMNS: [&str; 4] = ["n", "s", "left", "right"];

fn tails(ctx: &Context) -> Result<Output> {
    let n = ctx.config.field.n_max;
    let samples = ctx.crossing_samples(n)?;
    let logs: Vec<f64> = samples.iter().map(|s| s.l11.ln()).collect();
    let mu = estimate_quantile(&samples.iter().map(|s| s.l11).collect::<Vec<_>>(), 0.5)?;
    let curve = tail_report(&logs, mu)?;
    let rows = curve.s.iter().zip(&curve.left).zip(&curve.right).map(|((s, l), r)| vec![n.to_string(), s.to_string(), l.to_string(), r.to_string()]);
    let results = ctx.table_csv(&TAIL_COLUMNS, rows)?;
    let verdicts = vec![Verdict::new(
        "tail_fit",
        curve.left_fit.is_some() && curve.right_fit.is_some(),
        format!("left c = {:?}, right c = {:?}", curve.left_fit.map(|f| f.c), curve.right_fit.map(|f| f.c)),
    )];
    let mut out = Output::new(results, verdicts, json!({ "n": n, "mu": mu, "left_fit": curve.left_fit, "right_fit": curve.right_fit, "samples": curve.samples }));
    out.extra.push(("tail_fits.csv".into(), ctx.stat_csv(&curve.stat_rows(n))?));
    out.seeds.push(SeedEntry { label: "crossing".into(), seed: ctx.seed("crossing") });
    Ok(out)
}

const WEYL_COLUMNS: [&str; 4] = ["n", "sample", "max_relative_error", "identical_paths"];

fn weyl(ctx: &Context) -> Result<Output> {
    let c = ctx.config;
    let n = c.field.n_max;
    let outcomes: Vec<_> = (0..c.samples.count)
        .into_par_iter()
        .map(|i| weyl_check(&ctx.sampler, c.field.gamma, n, c.h(), c.weyl.bump_width, c.weyl.bump_height, derive_seed(c.seed, "weyl", &[i as u64])))
        .collect::<Result<_>>()?;
    let worst = outcomes.iter().map(|o| o.max_relative_error).fold(0.0, f64::max);
    let different = outcomes.iter().filter(|o| !o.identical_paths).count();
    let rows = outcomes.iter().enumerate().map(|(i, o)| vec![n.to_string(), i.to_string(), o.max_relative_error.to_string(), o.identical_paths.to_string()]);
    let verdicts = vec![
        Verdict::new("weyl_edge_weights", worst <= 1e-12, format!("max relative edge-weight error {worst:e}")),
        Verdict::new("weyl_shortest_paths", different == 0, format!("{different} samples with different crossing lengths")),
    ];
    let mut out = Output::new(ctx.table_csv(&WEYL_COLUMNS, rows)?, verdicts, json!({ "max_relative_error": worst, "samples": outcomes.len() }));
    out.seeds.push(SeedEntry { label: "weyl".into(), seed: ctx.seed("weyl") });
    Ok(out)
}

/// Pilot median of the left-right crossing of the reweighting grid.
fn pilot_threshold(ctx: &Context, grid: &GridSpec, n: u32) -> Result<f64> {
    let lengths: Vec<f64> = (0..200u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let f = spectral_sample(&ctx.kernel, 0, n, grid, derive_seed(ctx.config.seed, "reweight-pilot", &[i]))?;
            Ok(crossing_length(&build_metric(&f, ctx.config.field.gamma, grid.extent)?, Orientation::LeftRight)?.length)
        })
        .collect::<Result<_>>()?;
    estimate_quantile(&lengths, 0.5)
}

fn reweight(ctx: &Context) -> Result<Output> {
    let c = ctx.config;
    let n = c.field.n_max;
    let grid = GridSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), c.h(), 0.0)?;
    let bump = Bump { center: (0.5, 0.5), radius: c.reweight.bump_radius, height: c.reweight.bump_height };
    let g = bump.on_grid(&grid);
    let threshold = if c.reweight.threshold > 0.0 { c.reweight.threshold } else { pilot_threshold(ctx, &grid, n)? };
    let functionals = [Functional::One, Functional::ExpLinear { h: g.iter().map(|v| 0.5 * v).collect() }, Functional::CrossingBelow { gamma: c.field.gamma, threshold }];
    let plan = ReweightPlan { samples: c.samples.count, seed: ctx.seed("reweight") };
    let reports = functionals.iter().map(|f| rn_reweighting_check(&ctx.kernel, &g, n, &grid, f, &plan)).collect::<Result<Vec<_>>>()?;
    let decay = shift_decay(&ctx.kernel, &bump, &c.reweight.decay_n)?;
    let mut verdicts: Vec<Verdict> =
        reports.iter().map(|r| Verdict::new(format!("reweighting_{}", r.functional), r.passed, format!("difference {:.3e} ± {:.3e}", r.difference, r.difference_se))).collect();
    let one = &reports[0];
    verdicts.push(Verdict::new(
        "reweighting_one_is_one",
        (one.reweighted.value - 1.0).abs() <= 3.0 * one.reweighted.se,
        format!("{} ± {}", one.reweighted.value, one.reweighted.se),
    ));
    let decay_rows: Vec<_> = decay.iter().filter(|d| d.n >= 4 && d.ratio.is_some()).collect();
    let slow = decay_rows.iter().filter(|d| d.ratio.is_some_and(|q| q < 8.0)).count();
    verdicts.push(Verdict::new("shift_decay", !decay_rows.is_empty() && slow == 0, format!("{slow} of {} ratios below 8", decay_rows.len())));
    let mut rows: Vec<StatRow> = reports.iter().flat_map(|r| r.stat_rows(n)).collect();
    for d in &decay {
        rows.push(StatRow { n: d.n, statistic: "sup_shift_difference".into(), value: d.sup_diff, se: 0.0, ci_low: f64::NAN, ci_high: f64::NAN });
        if let Some(q) = d.ratio {
            rows.push(StatRow { n: d.n, statistic: "decay_ratio".into(), value: q, se: 0.0, ci_low: 8.0, ci_high: f64::from(u8::from(q >= 8.0)) });
        }
    }
    let mut out = Output::new(ctx.stat_csv(&rows)?, verdicts, json!({ "threshold": threshold, "reports": reports, "decay": decay }));
    out.seeds.push(SeedEntry { label: "reweight".into(), seed: ctx.seed("reweight") });
    Ok(out)
}

fn efron_stein(ctx: &Context) -> Result<Output> {
    let c = ctx.config;
    let n = c.field.n_max;
    let seeds: Vec<u64> = (0..c.samples.count as u64).map(|i| derive_seed(c.seed, "efron-stein", &[i])).collect();
    let plan = BlockPlan {
        blocks_per_scale: (c.efron_stein.blocks_per_scale > 0).then_some(c.efron_stein.blocks_per_scale),
        resamples_per_block: c.efron_stein.resamples_per_block,
        seed: ctx.seed("efron-stein/blocks"),
    };
    let report = efron_stein_report(ctx.kernel.clone(), &seeds, c.field.gamma, n, &ctx.sampler.noise, &plan)?;
    let verdicts =
        vec![Verdict::new("efron_stein", report.passed, format!("Var = {:.4e} ± {:.1e}, RHS = {:.4e} ± {:.1e}", report.lhs.value, report.lhs.se, report.rhs, report.rhs_se))];
    let mut out = Output::new(ctx.stat_csv(&report.stat_rows(n))?, verdicts, serde_json::to_value(&report)?);
    out.seeds = ["efron-stein/blocks"].iter().map(|l| SeedEntry { label: (*l).into(), seed: ctx.seed(l) }).collect();
    Ok(out)
}

fn perco(ctx: &Context) -> Result<Output> {
    let c = ctx.config;
    let plan = PercoPlan { samples: c.samples.count, threshold_samples: c.perco.threshold_samples, h: c.h(), seed: ctx.seed("perco") };
    let curve = perco_sweep(&ctx.sampler, c.field.gamma, c.field.n_max, &c.perco.k_values, c.stats.epsilon, &plan)?;
    let mut buf = Vec::new();
    curve.write_csv(&mut buf, c.seed, &ctx.hash)?;
    let violations: usize = curve.rows.iter().map(|r| r.violations).sum();
    let (p, se) = curve.open_probability;
    let verdicts = vec![
        Verdict::new("perco_implication", violations == 0, format!("{violations} samples with an oriented crossing but L_kk > 4k threshold")),
        Verdict::new("perco_open_probability", curve.open_check_passed, format!("P(open) = {p:.4} ± {se:.4}, bound {}", 1.0 - 2.0 * c.stats.epsilon)),
    ];
    let mut out = Output::new(buf, verdicts, serde_json::to_value(&curve)?);
    out.seeds.push(SeedEntry { label: "perco".into(), seed: ctx.seed("perco") });
    Ok(out)
}

const DOMINATION_COLUMNS: [&str; 7] = ["n", "gap", "psi_gap", "xi", "lhs", "rhs", "violated"];

fn spectral_check(ctx: &Context) -> Result<Output> {
    let c = ctx.config;
    let formulas = spectral_formulas(&ctx.kernel)?;
    let comparison = {
        let mut k = c.clone();
        k.kernel.sharpness = c.spectral.comparison_sharpness;
        Kernel::new(k.kernel_spec()?)
    };
    let grid = domination_grid(ctx.kernel.r0(), c.field.n_max, c.spectral.frequencies);
    let reports = domination_reports(&ctx.kernel, &comparison, c.field.n_max, c.spectral.gap, &grid)?;
    let rows = reports.iter().flat_map(|r| {
        r.points.iter().map(move |p| vec![r.n.to_string(), r.k.to_string(), r.psi_gap.to_string(), p.xi.to_string(), p.lhs.to_string(), p.rhs.to_string(), p.violated.to_string()])
    });
    let results = ctx.table_csv(&DOMINATION_COLUMNS, rows)?;
    let mut verdicts: Vec<Verdict> = formulas.iter().map(|r| Verdict::new(r.name.clone(), r.passed, format!("{} vs {}", r.estimate, r.target))).collect();
    for r in &reports {
        let count = r.points.iter().filter(|p| p.violated).count();
        verdicts.push(Verdict::new(format!("domination_report_psi_gap_{}", r.psi_gap), true, format!("{count} of {} frequencies violated", r.points.len())));
    }
    let freqs: Vec<f64> = (0..=200).map(|i| i as f64 * 16.0 / ctx.kernel.r0() / 200.0).collect();
    let density_rows = freqs.iter().map(|&xi| -> Result<Vec<String>> {
        Ok(vec![xi.to_string(), ctx.kernel.band_spectral_density(0, Scale::Infinite, xi)?.to_string(), ctx.kernel.band_spectral_density(0, c.field.n_max, xi)?.to_string()])
    });
    let density_rows: Vec<Vec<String>> = density_rows.collect::<Result<_>>()?;
    let mut out = Output::new(results, verdicts, json!({ "formulas": formulas, "reports": reports }));
    out.extra.push(("spectral_density.csv".into(), ctx.table_csv(&["xi", "c_hat_0_inf", "c_hat_0_n"], density_rows)?));
    Ok(out)
}

fn sup_field(ctx: &Context) -> Result<Output> {
    let c = ctx.config;
    let unit = Rect::new(0.0, 0.0, 1.0, 1.0);
    let samples: Vec<SupSamples> = c
        .scales()
        .into_iter()
        .map(|n| -> Result<SupSamples> {
            let sups = (0..c.samples.count as u64)
                .into_par_iter()
                .map(|i| ctx.sampler.sample(n, unit, c.h(), derive_seed(c.seed, "sup-field", &[n as u64, i])).map(|f| f.max()))
                .collect::<Result<_>>()?;
            Ok(SupSamples { n, sups })
        })
        .collect::<Result<_>>()?;
    let report = sup_field_report(&samples, c.field.gamma, ctx.seed("sup-bootstrap"))?;
    let verdicts = vec![Verdict::new("sup_field_report", report.rows.iter().all(|r| r.mean.value.is_finite()), format!("{} scales", report.rows.len()))];
    let mut out = Output::new(ctx.stat_csv(&report.stat_rows())?, verdicts, serde_json::to_value(&report)?);
    out.seeds.push(SeedEntry { label: "sup-bootstrap".into(), seed: ctx.seed("sup-bootstrap") });
    Ok(out)
}

fn write_artifact(dir: &Path, name: &str, bytes: &[u8], files: &mut BTreeMap<String, String>) -> Result<()> {
    fs::write(dir.join(name), bytes)?;
    files.insert(name.to_string(), hex_digest(bytes));
    Ok(())
}

/// Runs one experiment and writes `results.csv`, `summary.json`,
/// `effective_config.toml`, any extra CSVs and field dumps, and `manifest.json`.
///
/// Statistical failures are recorded as verdicts in the summary and the
/// manifest; only invalid configurations and I/O problems return errors.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    config.validate()?;
    let start = Instant::now();
    fs::create_dir_all(out_dir)?;
    let kernel = Arc::new(Kernel::new(config.kernel_spec()?));
    let sampler = FieldSampler::new(kernel.clone(), config.field.sampler);
    let ctx = Context { config, kernel, sampler, hash: config.config_hash() };
    let output = match config.kind {
        ExperimentKind::FieldCheck => field_check(&ctx),
        ExperimentKind::Crossing => crossing(&ctx),
        ExperimentKind::Quantiles => quantiles(&ctx),
        ExperimentKind::Rsw => rsw(&ctx),
        ExperimentKind::Tails => tails(&ctx),
        ExperimentKind::Weyl => weyl(&ctx),
        ExperimentKind::Reweight => reweight(&ctx),
        ExperimentKind::EfronStein => efron_stein(&ctx),
        ExperimentKind::Perco => perco(&ctx),
        ExperimentKind::SpectralCheck => spectral_check(&ctx),
        ExperimentKind::SupField => sup_field(&ctx),
    }?;
    let mut files = BTreeMap::new();
    write_artifact(out_dir, "results.csv", &output.results, &mut files)?;
    for (name, bytes) in &output.extra {
        write_artifact(out_dir, name, bytes, &mut files)?;
    }
    write_artifact(out_dir, "effective_config.toml", config.to_toml().as_bytes(), &mut files)?;
    let failed: Vec<String> = output.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.clone()).collect();
    let summary = json!({
        "kind": config.kind,
        "seed": config.seed,
        "config_hash": ctx.hash,
        "all_passed": failed.is_empty(),
        "verdicts": output.verdicts,
        "report": output.report,
    });
    write_artifact(out_dir, "summary.json", serde_json::to_string_pretty(&summary)?.as_bytes(), &mut files)?;
    if !output.fields.is_empty() {
        fs::create_dir_all(out_dir.join("fields"))?;
        for (i, f) in output.fields.iter().enumerate() {
            let name = format!("fields/field_{i:04}.bin");
            let path = out_dir.join(&name);
            write_field(f, &path)?;
            files.insert(name, hex_digest(&fs::read(&path)?));
            files.insert(format!("fields/field_{i:04}.json"), hex_digest(&fs::read(sidecar_path(&path))?));
        }
    }
    let mut seed_ledger = vec![SeedEntry { label: "master".into(), seed: config.seed }];
    seed_ledger.extend(output.seeds);
    let manifest = RunManifest {
        kind: config.kind,
        config_hash: ctx.hash.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        files,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        seed_ledger,
        all_passed: failed.is_empty(),
        failed,
    };
    fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
