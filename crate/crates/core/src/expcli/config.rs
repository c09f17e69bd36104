//! Experiment configuration: TOML parsing, defaults, validation and the
//! resource ceilings checked before any computation starts.

use crate::error::{LfppError, Result};
use crate::kernel::{hex_digest, make_bump_with_resolution, KernelSpec, ProfileId, DEFAULT_QUADRATURE_RESOLUTION, DEFAULT_R0};
use crate::sampling::SamplerKind;
use crate::stats::MAX_EFRON_STEIN_SCALE;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use toml::{Table, Value};

/// The experiments the runner knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Variance law, covariance scaling and sampler agreement.
    FieldCheck,
    /// Per-sample crossing lengths and the exact lattice identities.
    Crossing,
    /// Quantile table and concentration diagnostics.
    Quantiles,
    /// Quantile ratio table and the crossing inequality suite.
    Rsw,
    /// Tail curves of `log L_{1,1}` with fitted quadratic exponents.
    Tails,
    /// Discrete Weyl identity.
    Weyl,
    /// Radon–Nikodým reweighting and shift decay.
    Reweight,
    /// Efron–Stein variance bound.
    EfronStein,
    /// Oriented site percolation sweep.
    Perco,
    /// Spectral formulas and the spectral domination report.
    SpectralCheck,
    /// Growth of the field supremum.
    SupField,
}

impl ExperimentKind {
    /// Every kind, in documentation order.
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::FieldCheck,
        ExperimentKind::Crossing,
        ExperimentKind::Quantiles,
        ExperimentKind::Rsw,
        ExperimentKind::Tails,
        ExperimentKind::Weyl,
        ExperimentKind::Reweight,
        ExperimentKind::EfronStein,
        ExperimentKind::Perco,
        ExperimentKind::SpectralCheck,
        ExperimentKind::SupField,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FieldCheck => "field-check",
            ExperimentKind::Crossing => "crossing",
            ExperimentKind::Quantiles => "quantiles",
            ExperimentKind::Rsw => "rsw",
            ExperimentKind::Tails => "tails",
            ExperimentKind::Weyl => "weyl",
            ExperimentKind::Reweight => "reweight",
            ExperimentKind::EfronStein => "efron-stein",
            ExperimentKind::Perco => "perco",
            ExperimentKind::SpectralCheck => "spectral-check",
            ExperimentKind::SupField => "sup-field",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = LfppError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            LfppError::Config(vec![format!("unknown experiment kind '{s}' (expected one of: {})", names.join(", "))])
        })
    }
}

/// `[kernel]`: the bump function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSection {
    /// Support radius `r0 ∈ (0, 1/4]`.
    pub r0: f64,
    /// Mollifier sharpness `a > 0`.
    pub sharpness: f64,
    /// Radial quadrature nodes.
    pub quadrature_resolution: usize,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection { r0: DEFAULT_R0, sharpness: 1.0, quadrature_resolution: DEFAULT_QUADRATURE_RESOLUTION }
    }
}

/// `[field]`: the field, its scale range and the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSection {
    /// `γ ≥ 0`.
    pub gamma: f64,
    /// Smallest scale index used by multi-scale experiments.
    pub n_min: u32,
    /// Largest scale index.
    pub n_max: u32,
    /// Grid nodes per unit length; the spacing is `1/grid`.
    pub grid: u32,
    /// Field sampler.
    pub sampler: SamplerKind,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection { gamma: 0.2, n_min: 0, n_max: 6, grid: 512, sampler: SamplerKind::Spectral }
    }
}

/// `[samples]`: Monte Carlo sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesSection {
    /// Independent field samples per statistic.
    pub count: usize,
}

impl Default for SamplesSection {
    fn default() -> Self {
        SamplesSection { count: 2000 }
    }
}

/// `[stats]`: estimator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSection {
    /// Quantile level `ε ∈ (0, 1/2)`.
    pub epsilon: f64,
}

impl Default for StatsSection {
    fn default() -> Self {
        StatsSection { epsilon: 0.05 }
    }
}

/// `[crossing]`: exact identity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingSection {
    /// Samples on which the chaining and diameter identities are evaluated
    /// (each needs one shortest-path tree per net point).
    pub identity_samples: usize,
    /// Net spacing of the diameter bounds.
    pub net_spacing: f64,
}

impl Default for CrossingSection {
    fn default() -> Self {
        CrossingSection { identity_samples: 50, net_spacing: 0.125 }
    }
}

/// `[field_check]`: covariance checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldCheckSection {
    /// Number of lags per covariance comparison.
    pub lags: usize,
    /// Octaves `j` of the covariance scaling check are `0..=max_octave`.
    pub max_octave: u32,
}

impl Default for FieldCheckSection {
    fn default() -> Self {
        FieldCheckSection { lags: 20, max_octave: 5 }
    }
}

/// `[perco]`: site percolation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercoSection {
    /// Domain sides `k ≥ 2`.
    pub k_values: Vec<u32>,
    /// Samples of `[0,3]²` used for the threshold quantile.
    pub threshold_samples: usize,
}

impl Default for PercoSection {
    fn default() -> Self {
        PercoSection { k_values: vec![2, 3, 4, 6, 8], threshold_samples: 1000 }
    }
}

/// `[efron_stein]`: block sampling of the right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfronSteinSection {
    /// Blocks sampled per octave and replica; 0 uses every block.
    pub blocks_per_scale: usize,
    /// Redraws per sampled block.
    pub resamples_per_block: usize,
}

impl Default for EfronSteinSection {
    fn default() -> Self {
        EfronSteinSection { blocks_per_scale: 4, resamples_per_block: 1 }
    }
}

/// `[reweight]`: Cameron–Martin shift and functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightSection {
    /// Radius of the bump `g`.
    pub bump_radius: f64,
    /// Height of the bump `g`.
    pub bump_height: f64,
    /// Threshold of the crossing functional; 0 uses the median of a pilot run.
    pub threshold: f64,
    /// Scales tabulated by the decay check.
    pub decay_n: Vec<u32>,
}

impl Default for ReweightSection {
    fn default() -> Self {
        ReweightSection { bump_radius: 0.3, bump_height: 8.0, threshold: 0.0, decay_n: vec![4, 5, 6, 7, 8] }
    }
}

/// `[weyl]`: the Gaussian bump added to the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylSection {
    /// Standard deviation of the Gaussian bump.
    pub bump_width: f64,
    /// Height of the Gaussian bump.
    pub bump_height: f64,
}

impl Default for WeylSection {
    fn default() -> Self {
        WeylSection { bump_width: 0.15, bump_height: 1.5 }
    }
}

/// `[spectral]`: frequency grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSection {
    /// Sharpness of the comparison kernel of the domination report.
    pub comparison_sharpness: f64,
    /// Scale gap `k` of the domination report.
    pub gap: u32,
    /// Frequencies of the domination grid.
    pub frequencies: usize,
}

impl Default for SpectralSection {
    fn default() -> Self {
        SpectralSection { comparison_sharpness: 2.0, gap: 2, frequencies: 200 }
    }
}

/// `[limits]`: resource ceilings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitsSection {
    /// Largest number of grid nodes of one field sample.
    pub max_grid_nodes: u64,
    /// Largest number of samples of one statistic.
    pub max_samples: usize,
}

impl Default for LimitsSection {
    fn default() -> Self {
        LimitsSection { max_grid_nodes: 50_000_000, max_samples: 1_000_000 }
    }
}

/// `[output]`: optional artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OutputSection {
    /// Number of field samples written as binary dumps.
    pub dump_fields: usize,
}

/// A validated experiment configuration with every default made explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Experiment kind.
    pub kind: ExperimentKind,
    /// Master seed.
    pub seed: u64,
    /// Kernel.
    pub kernel: KernelSection,
    /// Field and grid.
    pub field: FieldSection,
    /// Sample sizes.
    pub samples: SamplesSection,
    /// Estimators.
    pub stats: StatsSection,
    /// Crossing identities.
    pub crossing: CrossingSection,
    /// Field checks.
    pub field_check: FieldCheckSection,
    /// Percolation.
    pub perco: PercoSection,
    /// Efron–Stein.
    pub efron_stein: EfronSteinSection,
    /// Reweighting.
    pub reweight: ReweightSection,
    /// Weyl identity.
    pub weyl: WeylSection,
    /// Spectral checks.
    pub spectral: SpectralSection,
    /// Resource ceilings.
    pub limits: LimitsSection,
    /// Optional outputs.
    pub output: OutputSection,
}

impl ExperimentConfig {
    /// The default configuration of an experiment kind.
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            seed: 0,
            kernel: KernelSection::default(),
            field: FieldSection::default(),
            samples: SamplesSection::default(),
            stats: StatsSection::default(),
            crossing: CrossingSection::default(),
            field_check: FieldCheckSection::default(),
            perco: PercoSection::default(),
            efron_stein: EfronSteinSection::default(),
            reweight: ReweightSection::default(),
            weyl: WeylSection::default(),
            spectral: SpectralSection::default(),
            limits: LimitsSection::default(),
            output: OutputSection::default(),
        }
    }

    /// Grid spacing `1/grid`.
    pub fn h(&self) -> f64 {
        1.0 / self.field.grid as f64
    }

    /// The kernel specification.
    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        make_bump_with_resolution(self.kernel.r0, ProfileId::Mollifier { sharpness: self.kernel.sharpness }, self.kernel.quadrature_resolution)
    }

    /// Scale indices `n_min..=n_max`.
    pub fn scales(&self) -> Vec<u32> {
        (self.field.n_min..=self.field.n_max).collect()
    }

    /// The effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Hex SHA-256 of the effective configuration without the seed, which is
    /// recorded separately in every artifact.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.seed = 0;
        hex_digest(c.to_toml().as_bytes())
    }

    /// Checks every value range and the resource ceilings, reporting all violations.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.range_errors(&mut errors);
        if errors.is_empty() {
            self.resource_errors(&mut errors);
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(LfppError::Config(errors))
        }
    }

    fn range_errors(&self, e: &mut Vec<String>) {
        let f = &self.field;
        if !(f.gamma >= 0.0 && f.gamma.is_finite()) {
            e.push(format!("field.gamma: gamma must be ≥ 0 (got {})", f.gamma));
        }
        if f.n_min > f.n_max {
            e.push(format!("field.n_min: must not exceed n_max (got n_min = {}, n_max = {})", f.n_min, f.n_max));
        }
        if f.n_max > 20 {
            e.push(format!("field.n_max: must be at most 20 (got {})", f.n_max));
        }
        if f.grid == 0 {
            e.push("field.grid: must be positive".into());
        } else if f.n_max <= 20 {
            let needed = 1u64 << (f.n_max + 2);
            if (f.grid as u64) < needed {
                e.push(format!("field.grid: resolution rule h <= 2^-(n_max+2) violated: grid {} gives h = 1/{}, but n_max = {} needs grid >= {needed}", f.grid, f.grid, f.n_max));
            }
        }
        if !(self.kernel.r0 > 0.0 && self.kernel.r0 <= 0.25) {
            e.push(format!("kernel.r0: must lie in (0, 1/4] (got {})", self.kernel.r0));
        }
        if !(self.kernel.sharpness > 0.0 && self.kernel.sharpness.is_finite()) {
            e.push(format!("kernel.sharpness: must be positive (got {})", self.kernel.sharpness));
        }
        if self.kernel.quadrature_resolution < 8 {
            e.push(format!("kernel.quadrature_resolution: must be at least 8 (got {})", self.kernel.quadrature_resolution));
        }
        let min_count = match self.kind {
            ExperimentKind::Tails => 1000,
            ExperimentKind::Quantiles | ExperimentKind::Rsw | ExperimentKind::Crossing | ExperimentKind::Perco => 200,
            _ => 2,
        };
        if self.samples.count < min_count {
            e.push(format!("samples.count: {} needs at least {min_count} samples (got {})", self.kind, self.samples.count));
        }
        if self.kind == ExperimentKind::Perco && self.perco.threshold_samples < 200 {
            e.push(format!("perco.threshold_samples: must be at least 200 (got {})", self.perco.threshold_samples));
        }
        let eps = self.stats.epsilon;
        if !(eps > 0.0 && eps < 0.5) {
            e.push(format!("stats.epsilon: must lie in (0, 1/2) (got {eps})"));
        }
        if !(self.crossing.net_spacing > 0.0) {
            e.push(format!("crossing.net_spacing: must be positive (got {})", self.crossing.net_spacing));
        }
        if self.field_check.lags == 0 {
            e.push("field_check.lags: must be positive".into());
        }
        if self.perco.k_values.is_empty() || self.perco.k_values.iter().any(|&k| k < 2) {
            e.push(format!("perco.k_values: need at least one side, each >= 2 (got {:?})", self.perco.k_values));
        }
        if self.perco.threshold_samples < 200 {
            e.push(format!("perco.threshold_samples: must be at least 200 (got {})", self.perco.threshold_samples));
        }
        if self.efron_stein.resamples_per_block == 0 {
            e.push("efron_stein.resamples_per_block: must be positive".into());
        }
        if self.kind == ExperimentKind::EfronStein && f.n_max > MAX_EFRON_STEIN_SCALE {
            e.push(format!("field.n_max: Efron-Stein runs are limited to n_max <= {MAX_EFRON_STEIN_SCALE} (got {})", f.n_max));
        }
        let r = &self.reweight;
        if !(r.bump_radius > 0.0 && r.bump_radius <= 0.5) {
            e.push(format!("reweight.bump_radius: must lie in (0, 1/2] (got {})", r.bump_radius));
        }
        if !(r.bump_height.is_finite()) {
            e.push("reweight.bump_height: must be finite".into());
        }
        if !(r.threshold >= 0.0 && r.threshold.is_finite()) {
            e.push(format!("reweight.threshold: must be finite and >= 0 (got {})", r.threshold));
        }
        if !(self.weyl.bump_width > 0.0) || !self.weyl.bump_height.is_finite() {
            e.push("weyl: bump_width must be positive and bump_height finite".into());
        }
        if !(self.spectral.comparison_sharpness > 0.0) {
            e.push("spectral.comparison_sharpness: must be positive".into());
        }
        if self.spectral.frequencies < 2 {
            e.push("spectral.frequencies: must be at least 2".into());
        }
    }

    /// Nodes of the largest field sample the experiment draws.
    pub fn largest_field_nodes(&self) -> u64 {
        let per_unit = self.field.grid as u64;
        let side = |len: u64| (len * per_unit + 1).pow(2);
        match self.kind {
            ExperimentKind::Crossing | ExperimentKind::Quantiles | ExperimentKind::Rsw | ExperimentKind::Tails | ExperimentKind::SupField => side(3),
            ExperimentKind::Perco => side(self.perco.k_values.iter().copied().max().unwrap_or(2).max(3) as u64),
            ExperimentKind::Weyl | ExperimentKind::Reweight => side(1),
            ExperimentKind::EfronStein => {
                let n = 1u64 << (self.field.n_max + 2);
                (n + 1).pow(2)
            }
            ExperimentKind::FieldCheck | ExperimentKind::SpectralCheck => 0,
        }
    }

    fn resource_errors(&self, e: &mut Vec<String>) {
        let nodes = self.largest_field_nodes();
        if nodes > self.limits.max_grid_nodes {
            e.push(format!("limits.max_grid_nodes: a {} field needs (side * grid + 1)^2 = {nodes} nodes, above the ceiling {}", self.kind, self.limits.max_grid_nodes));
        }
        let samples = self.samples.count.max(self.perco.threshold_samples);
        if samples > self.limits.max_samples {
            e.push(format!("limits.max_samples: {samples} samples requested, above the ceiling {}", self.limits.max_samples));
        }
    }
}

/// Reads the keys of one section, collecting type errors and unknown keys.
struct SectionReader<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    known: Vec<&'static str>,
    errors: &'a mut Vec<String>,
}

impl<'a> SectionReader<'a> {
    fn get<T: DeserializeOwned>(&mut self, key: &'static str, target: &mut T) {
        self.known.push(key);
        let Some(value) = self.table.and_then(|t| t.get(key)) else {
            return;
        };
        match T::deserialize(value.clone()) {
            Ok(v) => *target = v,
            Err(err) => {
                let path = if self.name.is_empty() { key.to_string() } else { format!("{}.{key}", self.name) };
                self.errors.push(format!("{path}: {}", err.message().trim()));
            }
        }
    }

    fn finish(self) {
        if let Some(t) = self.table {
            for key in t.keys() {
                if !self.known.contains(&key.as_str()) {
                    let path = if self.name.is_empty() { key.clone() } else { format!("{}.{key}", self.name) };
                    self.errors.push(format!("{path}: unknown key"));
                }
            }
        }
    }
}

const SECTIONS: [&str; 13] = ["kernel", "field", "samples", "stats", "crossing", "field_check", "perco", "efron_stein", "reweight", "weyl", "spectral", "limits", "output"];

/// Parses, defaults and validates a configuration text.
///
/// `kind` overrides the top-level `kind` key. Every unknown key, type error
/// and out-of-range value is reported in one [`LfppError::Config`].
pub fn validate_config(text: &str, kind: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| LfppError::Config(vec![format!("TOML syntax: {}", e.message())]))?;
    let mut errors = Vec::new();
    let mut kind_name: Option<String> = None;
    let mut seed = 0u64;
    for (key, value) in &root {
        match key.as_str() {
            "kind" => match value.as_str() {
                Some(s) => kind_name = Some(s.to_string()),
                None => errors.push("kind: expected a string".into()),
            },
            "seed" => match value.as_integer() {
                Some(s) if s >= 0 => seed = s as u64,
                _ => errors.push("seed: expected a nonnegative integer".into()),
            },
            k if SECTIONS.contains(&k) => {
                if !value.is_table() {
                    errors.push(format!("{k}: expected a section"));
                }
            }
            k => errors.push(format!("{k}: unknown key")),
        }
    }
    let kind = match (kind, kind_name) {
        (Some(k), _) => k,
        (None, Some(name)) => match name.parse() {
            Ok(k) => k,
            Err(LfppError::Config(mut v)) => {
                errors.append(&mut v);
                ExperimentKind::Crossing
            }
            Err(other) => return Err(other),
        },
        (None, None) => {
            errors.push("kind: missing (give it in the file or on the command line)".into());
            ExperimentKind::Crossing
        }
    };
    let mut c = ExperimentConfig::new(kind);
    c.seed = seed;
    let section = |name: &'static str| root.get(name).and_then(Value::as_table);
    macro_rules! read {
        ($name:literal, $target:expr, [$($key:ident),*]) => {{
            let mut r = SectionReader { name: $name, table: section($name), known: Vec::new(), errors: &mut errors };
            $( r.get(stringify!($key), &mut $target.$key); )*
            r.finish();
        }};
    }
    read!("kernel", c.kernel, [r0, sharpness, quadrature_resolution]);
    read!("field", c.field, [gamma, n_min, n_max, grid, sampler]);
    read!("samples", c.samples, [count]);
    read!("stats", c.stats, [epsilon]);
    read!("crossing", c.crossing, [identity_samples, net_spacing]);
    read!("field_check", c.field_check, [lags, max_octave]);
    read!("perco", c.perco, [k_values, threshold_samples]);
    read!("efron_stein", c.efron_stein, [blocks_per_scale, resamples_per_block]);
    read!("reweight", c.reweight, [bump_radius, bump_height, threshold, decay_n]);
    read!("weyl", c.weyl, [bump_width, bump_height]);
    read!("spectral", c.spectral, [comparison_sharpness, gap, frequencies]);
    read!("limits", c.limits, [max_grid_nodes, max_samples]);
    read!("output", c.output, [dump_fields]);
    c.range_errors(&mut errors);
    if errors.is_empty() {
        c.resource_errors(&mut errors);
    }
    if errors.is_empty() {
        Ok(c)
    } else {
        Err(LfppError::Config(errors))
    }
}
