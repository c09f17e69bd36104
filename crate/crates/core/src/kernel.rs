//! The bump function `k` and every deterministic covariance or spectral
//! quantity derived from it.
//!
//! Fourier transforms use the ordinary-frequency convention
//! `f̂(ν) = ∫ f(x) e^{-2πi ν·x} dx`. Under this convention the radial
//! transform is `k̂(ν) = 2π ∫ k(ρ) J₀(2πνρ) ρ dρ`, Plancherel reads
//! `∫ k̂² dν = ∫ k² dx = 1`, the spectral density of the full field behaves
//! like `1/(2π|ν|²)` at high frequency and equals `k̂(0)²/2` at the origin.
//!
//! Scale bands `(m, n)` integrate over `t ∈ [2^{-n-1}, 2^{-m}]` (lower limit
//! `0` when `n = ∞`), so `C_{0,n}(0) = (n + 1) log 2`.

use crate::error::{invalid, LfppError, Result};
use crate::numerics::{CubicSpline, GlRule, SplineEnd};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::io::Write;
use std::sync::OnceLock;

/// Upper end of a scale band: a finite dyadic index or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    /// Finite scale index `n`; the band reaches down to `t = 2^{-n-1}`.
    Finite(u32),
    /// The band reaches all the way to `t = 0`.
    Infinite,
}

impl From<u32> for Scale {
    fn from(n: u32) -> Self {
        Scale::Finite(n)
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scale::Finite(n) => write!(f, "{n}"),
            Scale::Infinite => write!(f, "inf"),
        }
    }
}

/// Returns the `t`-interval `[lo, hi]` of band `(m, n)` after validating `m ≤ n`.
pub fn band_limits(m: u32, n: Scale) -> Result<(f64, f64)> {
    let hi = 2f64.powi(-(m as i32));
    match n {
        Scale::Finite(n) if n < m => invalid(format!("band requires m <= n, got m = {m}, n = {n}")),
        Scale::Finite(n) => Ok((2f64.powi(-(n as i32) - 1), hi)),
        Scale::Infinite => Ok((0.0, hi)),
    }
}

/// Radial profile `p(s)` on `s ∈ [0, 1)`; the kernel is `k(x) = A·p(|x|/r0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileId {
    /// Mollifier family `exp(-a/(1 - s²))`; `a = 1` is the standard mollifier.
    Mollifier {
        /// The constant `a > 0`; larger values concentrate the bump near the origin.
        sharpness: f64,
    },
    /// The identically zero profile. It is not normalizable and only exists so
    /// that the construction error can be exercised.
    Zero,
}

impl Default for ProfileId {
    fn default() -> Self {
        ProfileId::Mollifier { sharpness: 1.0 }
    }
}

impl ProfileId {
    /// Evaluates the profile; zero for `s ≥ 1`.
    pub fn eval(&self, s: f64) -> f64 {
        if !(s.abs() < 1.0) {
            return 0.0;
        }
        match *self {
            ProfileId::Mollifier { sharpness } => (-sharpness / (1.0 - s * s)).exp(),
            ProfileId::Zero => 0.0,
        }
    }
}

/// Default support radius of the bump.
pub const DEFAULT_R0: f64 = 0.125;
/// Default number of radial quadrature nodes.
pub const DEFAULT_QUADRATURE_RESOLUTION: usize = 512;

/// The bump function `k`: support radius, profile and L² normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// Support radius `r0`.
    pub r0: f64,
    /// Radial profile.
    pub profile: ProfileId,
    /// Normalization constant `A` such that `∫ k² = 1`.
    pub amplitude: f64,
    /// Number of radial quadrature nodes used for derived integrals.
    pub quadrature_resolution: usize,
}

/// Gauss–Legendre panel degree used throughout the kernel module.
const GL_DEGREE: usize = 8;

/// Builds the bump with the default radial resolution.
pub fn make_bump(r0: f64, profile: ProfileId) -> Result<KernelSpec> {
    make_bump_with_resolution(r0, profile, DEFAULT_QUADRATURE_RESOLUTION)
}

/// Builds the bump, choosing the amplitude so that `∫ k² = 1` under a radial
/// Gauss–Legendre rule with (about) `resolution` nodes.
pub fn make_bump_with_resolution(r0: f64, profile: ProfileId, resolution: usize) -> Result<KernelSpec> {
    if !(r0 > 0.0 && r0 <= 0.25) {
        return invalid(format!("r0 must lie in (0, 1/4], got {r0}"));
    }
    if resolution < GL_DEGREE {
        return invalid(format!("quadrature_resolution must be at least {GL_DEGREE}"));
    }
    if let ProfileId::Mollifier { sharpness } = profile {
        if !(sharpness > 0.0 && sharpness.is_finite()) {
            return invalid(format!("mollifier sharpness must be positive, got {sharpness}"));
        }
    }
    let rule = GlRule::new(GL_DEGREE);
    let panels = resolution.div_ceil(GL_DEGREE);
    let norm = 2.0 * PI * r0 * r0 * rule.composite(0.0, 1.0, panels, |s| profile.eval(s).powi(2) * s);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(LfppError::Construction("kernel profile is not normalizable (zero L2 norm)".into()));
    }
    Ok(KernelSpec { r0, profile, amplitude: 1.0 / norm.sqrt(), quadrature_resolution: panels * GL_DEGREE })
}

impl Default for KernelSpec {
    fn default() -> Self {
        make_bump(DEFAULT_R0, ProfileId::default()).expect("default kernel is valid")
    }
}

impl KernelSpec {
    /// Evaluates `k` at distance `rho` from the origin.
    pub fn eval(&self, rho: f64) -> f64 {
        self.amplitude * self.profile.eval(rho / self.r0)
    }

    /// Evaluates `k` at a planar point.
    pub fn eval_xy(&self, x: f64, y: f64) -> f64 {
        self.eval(x.hypot(y))
    }

    /// Radial quadrature nodes and weights on `[0, r0]`.
    fn radial_points(&self, a: f64) -> Vec<(f64, f64)> {
        let panels = self.quadrature_resolution / GL_DEGREE;
        GlRule::new(GL_DEGREE).composite_points(a, self.r0, panels.max(1))
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("kernel spec serializes");
        hex_digest(json.as_bytes())
    }

    /// `∫ k dx = k̂(0)`.
    pub fn integral(&self) -> f64 {
        2.0 * PI * self.radial_points(0.0).iter().map(|&(r, w)| w * self.eval(r) * r).sum::<f64>()
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Extrapolation rule outside the tabulated range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extrapolation {
    /// Zero beyond the last radius (compactly supported functions).
    Zero,
    /// Clamp to the nearest end value.
    Clamp,
}

/// A radial function tabulated on an ascending grid with cubic interpolation.
#[derive(Debug, Clone)]
pub struct RadialTable {
    spline: CubicSpline,
    extrapolation: Extrapolation,
}

impl RadialTable {
    /// Builds a table with clamped end slopes `(left, right)` (`None` = natural end).
    pub fn new(radii: Vec<f64>, values: Vec<f64>, slopes: (Option<f64>, Option<f64>), extrapolation: Extrapolation) -> Self {
        let end = |s: Option<f64>| s.map_or(SplineEnd::Natural, SplineEnd::Clamped);
        RadialTable { spline: CubicSpline::new(radii, values, end(slopes.0), end(slopes.1)), extrapolation }
    }

    /// Tabulated radii.
    pub fn radii(&self) -> &[f64] {
        self.spline.x()
    }

    /// Tabulated values.
    pub fn values(&self) -> &[f64] {
        self.spline.y()
    }

    /// Evaluates with cubic interpolation and the declared extrapolation.
    pub fn eval(&self, r: f64) -> f64 {
        let x = self.spline.x();
        let (lo, hi) = (x[0], x[x.len() - 1]);
        if r < lo || r > hi {
            return match self.extrapolation {
                Extrapolation::Zero => 0.0,
                Extrapolation::Clamp => {
                    if r < lo {
                        self.spline.y()[0]
                    } else {
                        self.spline.y()[x.len() - 1]
                    }
                }
            };
        }
        self.spline.eval(r)
    }

    /// Writes the table as CSV with columns `(r, value)`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_pairs_csv(w, "r", self.radii(), self.values())
    }
}

fn write_pairs_csv<W: Write>(w: W, key: &str, xs: &[f64], ys: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let map = |e: csv::Error| LfppError::Serde(e.to_string());
    wtr.write_record([key, "value"]).map_err(map)?;
    for (x, y) in xs.iter().zip(ys) {
        wtr.write_record([format!("{x:e}"), format!("{y:e}")]).map_err(map)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Number of radii used to tabulate `c = k∗k` on `[0, 2r0]`.
const COVARIANCE_TABLE_POINTS: usize = 513;

/// Direct evaluation of `c(r) = (k∗k)(r)` by polar quadrature.
pub fn covariance_direct(kernel: &KernelSpec, r: f64) -> f64 {
    let r0 = kernel.r0;
    if r >= 2.0 * r0 {
        return 0.0;
    }
    if r == 0.0 {
        return 2.0 * PI * kernel.radial_points(0.0).iter().map(|&(rho, w)| w * rho * kernel.eval(rho).powi(2)).sum::<f64>();
    }
    let theta_rule = GlRule::new(GL_DEGREE);
    let a = (r - r0).max(0.0);
    let mut acc = 0.0;
    for (rho, w) in kernel.radial_points(a) {
        let k_rho = kernel.eval(rho);
        if k_rho == 0.0 {
            continue;
        }
        let theta_max = if rho + r <= r0 {
            PI
        } else {
            let cos_max = (rho * rho + r * r - r0 * r0) / (2.0 * rho * r);
            if cos_max >= 1.0 {
                continue;
            }
            cos_max.max(-1.0).acos()
        };
        let inner = theta_rule.composite(0.0, theta_max, 16, |th| {
            let d2 = rho * rho + r * r - 2.0 * rho * r * th.cos();
            kernel.eval(d2.max(0.0).sqrt())
        });
        acc += w * rho * k_rho * 2.0 * inner;
    }
    acc
}

/// Tabulates `c = k∗k` on `[0, 2r0]`; `c` vanishes beyond `2r0`.
pub fn covariance_profile(kernel: &KernelSpec) -> RadialTable {
    use rayon::prelude::*;
    let n = COVARIANCE_TABLE_POINTS;
    let step = 2.0 * kernel.r0 / (n - 1) as f64;
    let radii: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    let mut values: Vec<f64> = radii.par_iter().map(|&r| covariance_direct(kernel, r)).collect();
    values[n - 1] = 0.0;
    RadialTable::new(radii, values, (Some(0.0), Some(0.0)), Extrapolation::Zero)
}

/// Direct evaluation of `k̂(ν) = 2π ∫₀^{r0} k(ρ) J₀(2πνρ) ρ dρ` (ordinary frequency).
pub fn hankel_direct(kernel: &KernelSpec, nu: f64) -> f64 {
    let r0 = kernel.r0;
    let panels = 32 + 2 * (nu.abs() * r0).ceil() as usize;
    let omega = 2.0 * PI * nu;
    2.0 * PI * GlRule::new(GL_DEGREE).composite(0.0, r0, panels, |rho| kernel.eval(rho) * puruspe::Jn(0, omega * rho) * rho)
}

/// Tabulated spectral quantities: `k̂` and, for band tables, `Ĉ_{m,n}`.
#[derive(Debug, Clone)]
pub struct SpectralTable {
    /// Ascending nonnegative frequencies.
    pub frequencies: Vec<f64>,
    /// Values at the frequencies.
    pub values: Vec<f64>,
    /// Scale band when the table holds a band spectral density.
    pub band: Option<(u32, Scale)>,
}

impl SpectralTable {
    /// Writes the table as CSV with columns `(xi, value)`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_pairs_csv(w, "xi", &self.frequencies, &self.values)
    }
}

/// Frequency cut-off of the `k̂` table in units of `1/r0`.
const KHAT_MAX_FREQ_R0: f64 = 64.0;
/// Table points per unit of `1/r0`.
const KHAT_POINTS_PER_R0: f64 = 128.0;

/// The transform `k̂` on a uniform frequency grid and the cumulative
/// integrals `G(u) = ∫₀^u s k̂(s)² ds` at its nodes.
#[derive(Debug, Clone)]
struct SpectralCache {
    khat: CubicSpline,
    g_cum: Vec<f64>,
}

impl SpectralCache {
    fn new(spec: &KernelSpec) -> Self {
        use rayon::prelude::*;
        let u_max = KHAT_MAX_FREQ_R0 / spec.r0;
        let n = (KHAT_MAX_FREQ_R0 * KHAT_POINTS_PER_R0) as usize + 1;
        let step = u_max / (n - 1) as f64;
        let freqs: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        let vals: Vec<f64> = freqs.par_iter().map(|&u| hankel_direct(spec, u)).collect();
        let khat = CubicSpline::new(freqs, vals, SplineEnd::Clamped(0.0), SplineEnd::Clamped(0.0));
        let rule = GlRule::new(4);
        let mut g_cum = Vec::with_capacity(n);
        let mut acc = 0.0;
        g_cum.push(0.0);
        for w in khat.x().windows(2) {
            acc += rule.integrate(w[0], w[1], |s| s * khat.eval(s).powi(2));
            g_cum.push(acc);
        }
        SpectralCache { khat, g_cum }
    }
}

/// A kernel together with its tabulated covariance `c = k∗k` and transform `k̂`.
///
/// The transform table is built on first use. Kernels are cheap to share
/// between threads and never change after construction.
#[derive(Debug, Clone)]
pub struct Kernel {
    spec: KernelSpec,
    cov: RadialTable,
    spectral: OnceLock<SpectralCache>,
}

impl Kernel {
    /// Tabulates the covariance profile of `spec`.
    pub fn new(spec: KernelSpec) -> Self {
        let cov = covariance_profile(&spec);
        Kernel { spec, cov, spectral: OnceLock::new() }
    }

    fn cache(&self) -> &SpectralCache {
        self.spectral.get_or_init(|| SpectralCache::new(&self.spec))
    }

    /// The underlying bump specification.
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Support radius `r0`.
    pub fn r0(&self) -> f64 {
        self.spec.r0
    }

    /// The tabulated covariance profile `c`.
    pub fn covariance_table(&self) -> &RadialTable {
        &self.cov
    }

    /// `c(r)` from the table.
    pub fn c(&self, r: f64) -> f64 {
        self.cov.eval(r)
    }

    /// Largest tabulated frequency of `k̂`; beyond it `k̂` is treated as zero.
    pub fn max_frequency(&self) -> f64 {
        *self.cache().khat.x().last().expect("nonempty table")
    }

    /// `k̂(u)` (ordinary frequency), interpolated from the table.
    pub fn hankel(&self, u: f64) -> f64 {
        let u = u.abs();
        if u > self.max_frequency() {
            return 0.0;
        }
        self.cache().khat.eval(u)
    }

    /// The `k̂` table.
    pub fn hankel_table(&self) -> SpectralTable {
        SpectralTable { frequencies: self.cache().khat.x().to_vec(), values: self.cache().khat.y().to_vec(), band: None }
    }

    /// `G(u) = ∫₀^u s k̂(s)² ds`.
    pub fn spectral_mass(&self, u: f64) -> f64 {
        let x = self.cache().khat.x();
        if u <= 0.0 {
            return 0.0;
        }
        if u >= self.max_frequency() {
            return *self.cache().g_cum.last().expect("nonempty");
        }
        let step = x[1] - x[0];
        let i = ((u / step).floor() as usize).min(x.len() - 2);
        let lo = x[i];
        self.cache().g_cum[i] + GlRule::new(4).integrate(lo, u, |s| s * self.cache().khat.eval(s).powi(2))
    }

    /// `C_{m,n}(r) = ∫_{2^{-n-1}}^{2^{-m}} c(r/t) dt/t` by composite
    /// Gauss–Legendre quadrature in `log t`.
    pub fn band_covariance(&self, m: u32, n: impl Into<Scale>, r: f64) -> Result<f64> {
        let n = n.into();
        let (lo, hi) = band_limits(m, n)?;
        if !(r >= 0.0) {
            return invalid(format!("lag must be nonnegative, got {r}"));
        }
        if r == 0.0 {
            return match n {
                Scale::Finite(n) => Ok((n + 1 - m) as f64 * LN_2 * self.c(0.0)),
                Scale::Infinite => Ok(f64::INFINITY),
            };
        }
        if r >= 2.0 * self.r0() {
            return Ok(0.0);
        }
        let lo = lo.max(r / (2.0 * self.r0()));
        if lo >= hi {
            return Ok(0.0);
        }
        let (a, b) = (lo.ln(), hi.ln());
        let panels = ((b - a) / (0.25 * LN_2)).ceil() as usize;
        Ok(GlRule::new(16).composite(a, b, panels, |u| self.c(r * (-u).exp())))
    }

    /// Tabulates the finite band covariance `C_{m,n}` on `[0, 2r0 2^{-m}]`
    /// with spacing fine enough to resolve its smallest scale `r0 2^{-n-1}`.
    pub fn band_covariance_table(&self, m: u32, n: u32) -> Result<RadialTable> {
        use rayon::prelude::*;
        band_limits(m, Scale::Finite(n))?;
        let reach = 2.0 * self.r0() * 2f64.powi(-(m as i32));
        let finest = self.r0() * 2f64.powi(-(n as i32) - 1);
        let points = ((64.0 * reach / finest).ceil() as usize).max(1024) + 1;
        let step = reach / (points - 1) as f64;
        let radii: Vec<f64> = (0..points).map(|i| i as f64 * step).collect();
        let mut values = radii.par_iter().map(|&r| self.band_covariance(m, n, r)).collect::<Result<Vec<_>>>()?;
        values[points - 1] = 0.0;
        Ok(RadialTable::new(radii, values, (Some(0.0), Some(0.0)), Extrapolation::Zero))
    }

    /// `∫_{ℝ²} C_{m,n}(x) dx = k̂(0)² (hi² - lo²)/2`, which equals `Ĉ_{m,n}(0)`.
    pub fn band_l1_norm(&self, m: u32, n: impl Into<Scale>) -> Result<f64> {
        self.band_spectral_density(m, n, 0.0)
    }

    /// `F(r) = C_{0,∞}(r) + log r` for `r > 0`.
    pub fn log_remainder(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return invalid("log_remainder requires r > 0 (logarithmic singularity at 0)");
        }
        if r >= 2.0 * self.r0() {
            return Ok(r.ln());
        }
        Ok(self.band_covariance(0, Scale::Infinite, r)? + r.ln())
    }

    /// Tabulates `F` on the given ascending positive radii.
    pub fn log_remainder_table(&self, radii: Vec<f64>) -> Result<RadialTable> {
        let values = radii.iter().map(|&r| self.log_remainder(r)).collect::<Result<Vec<_>>>()?;
        Ok(RadialTable::new(radii, values, (None, None), Extrapolation::Clamp))
    }

    /// `Ĉ_{m,n}(ξ) = |ξ|^{-2} ∫_{2^{-n-1}|ξ|}^{2^{-m}|ξ|} u k̂(u)² du`, with its
    /// continuous limit `k̂(0)² (hi² - lo²)/2` at `ξ = 0`.
    pub fn band_spectral_density(&self, m: u32, n: impl Into<Scale>, xi: f64) -> Result<f64> {
        let (lo, hi) = band_limits(m, n.into())?;
        if !(xi >= 0.0) {
            return invalid(format!("frequency must be nonnegative, got {xi}"));
        }
        if xi == 0.0 {
            return Ok(self.hankel(0.0).powi(2) * (hi * hi - lo * lo) / 2.0);
        }
        let mass = self.spectral_mass(hi * xi) - self.spectral_mass(lo * xi);
        Ok((mass / (xi * xi)).max(0.0))
    }

    /// Tabulates `Ĉ_{m,n}` on a frequency grid.
    pub fn spectral_density_table(&self, m: u32, n: impl Into<Scale>, freqs: Vec<f64>) -> Result<SpectralTable> {
        let n = n.into();
        let values = freqs.iter().map(|&xi| self.band_spectral_density(m, n, xi)).collect::<Result<Vec<_>>>()?;
        Ok(SpectralTable { frequencies: freqs, values, band: Some((m, n)) })
    }
}

/// Evaluation of the spectral domination inequality at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominationPoint {
    /// Frequency `|ξ|`.
    pub xi: f64,
    /// `(∫_{2^{-n-1}ξ}^{ξ} u k̂₂² - ∫_{2^{-n-1}ξ}^{ξ} u k̂₁²)₊`.
    pub lhs: f64,
    /// `∫_{2^{-n-k-1}ξ}^{2^{-n-1}ξ} u k̂₁² + g(ξ)`.
    pub rhs: f64,
    /// Whether `lhs` exceeds `rhs` beyond the numerical tolerance.
    pub violated: bool,
}

/// Per-frequency report of the spectral domination inequality.
#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    /// Finest scale index of the compared bands.
    pub n: u32,
    /// Scale gap.
    pub k: u32,
    /// Whether the low-frequency compensator `g` was included.
    pub psi_gap: bool,
    /// One entry per grid frequency.
    pub points: Vec<DominationPoint>,
    /// Largest `lhs - rhs` over the grid (can be negative when nothing is violated).
    pub max_violation: f64,
    /// Maximal runs `[ξ_start, ξ_end]` of consecutive violated grid frequencies.
    pub violation_regions: Vec<(f64, f64)>,
}

/// Absolute tolerance of the domination verdict, relative to the total spectral mass `1/(2π)`.
pub const DOMINATION_TOLERANCE: f64 = 1e-9;

/// Decides the verdict at one frequency from the two sides.
pub fn domination_verdict(lhs: f64, rhs: f64) -> bool {
    lhs - rhs > DOMINATION_TOLERANCE / (2.0 * PI)
}

/// Evaluates both sides of the spectral domination inequality on `freq_grid`.
///
/// With the band convention of this crate the field `φ_{0,n}` covers
/// `u ∈ [2^{-n-1}ξ, ξ]` and the gap band `φ_{n+1,n+k}` covers
/// `u ∈ [2^{-n-k-1}ξ, 2^{-n-1}ξ]`. The compensator is
/// `g(ξ) = |∫_ξ^∞ u k̂₁² - ∫_ξ^∞ u k̂₂²|`.
pub fn spectral_domination_report(k1: &Kernel, k2: &Kernel, n: u32, k: u32, psi_gap: bool, freq_grid: &[f64]) -> Result<DominationReport> {
    if freq_grid.iter().any(|&x| !(x >= 0.0)) || freq_grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("frequency grid must be ascending and nonnegative");
    }
    let lo_n = 2f64.powi(-(n as i32) - 1);
    let lo_nk = 2f64.powi(-((n + k) as i32) - 1);
    let tail = |kern: &Kernel, x: f64| kern.spectral_mass(f64::INFINITY) - kern.spectral_mass(x);
    let mut points = Vec::with_capacity(freq_grid.len());
    for &xi in freq_grid {
        let band2 = k2.spectral_mass(xi) - k2.spectral_mass(lo_n * xi);
        let band1 = k1.spectral_mass(xi) - k1.spectral_mass(lo_n * xi);
        let lhs = (band2 - band1).max(0.0);
        let gap = k1.spectral_mass(lo_n * xi) - k1.spectral_mass(lo_nk * xi);
        let g = if psi_gap { (tail(k1, xi) - tail(k2, xi)).abs() } else { 0.0 };
        let rhs = gap + g;
        points.push(DominationPoint { xi, lhs, rhs, violated: domination_verdict(lhs, rhs) });
    }
    Ok(summarize_domination(n, k, psi_gap, points))
}

/// Builds the report summary (maximum violation, violated regions) from per-frequency points.
pub fn summarize_domination(n: u32, k: u32, psi_gap: bool, points: Vec<DominationPoint>) -> DominationReport {
    let max_violation = points.iter().map(|p| p.lhs - p.rhs).fold(f64::NEG_INFINITY, f64::max);
    let mut regions = Vec::new();
    let mut start: Option<f64> = None;
    let mut last = 0.0;
    for p in &points {
        match (p.violated, start) {
            (true, None) => start = Some(p.xi),
            (false, Some(s)) => {
                regions.push((s, last));
                start = None;
            }
            _ => {}
        }
        last = p.xi;
    }
    if let Some(s) = start {
        regions.push((s, last));
    }
    DominationReport { n, k, psi_gap, points, max_violation, violation_regions: regions }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_profile_is_rejected() {
        let err = make_bump(0.125, ProfileId::Zero).unwrap_err();
        assert!(err.to_string().contains("not normalizable"));
    }

    #[test]
    fn radius_out_of_range_is_rejected() {
        assert!(matches!(make_bump(0.3, ProfileId::default()), Err(LfppError::Validation(_))));
        assert!(matches!(make_bump(0.0, ProfileId::default()), Err(LfppError::Validation(_))));
    }

    #[test]
    fn kernel_vanishes_on_support_boundary() {
        let k = KernelSpec::default();
        assert_eq!(k.eval(k.r0), 0.0);
        assert_eq!(k.eval(2.0 * k.r0), 0.0);
        assert!(k.eval(0.0) > 0.0);
    }

    #[test]
    fn band_order_is_validated() {
        assert!(band_limits(3, Scale::Finite(2)).is_err());
        assert_eq!(band_limits(0, Scale::Infinite).unwrap(), (0.0, 1.0));
    }
}
