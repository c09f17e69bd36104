//! Dense-quadrature oracle for the spectral domination inequality.
//!
//! Shares only the kernel profile with the crate: `k̂` comes from composite
//! Simpson quadrature of the Hankel integral and `G(u) = ∫₀^u s k̂(s)² ds` from
//! cumulative Simpson sums on a uniform frequency grid, with no splines.

use lfpp::kernel::{domination_verdict, KernelSpec};
use std::f64::consts::PI;

/// Radial Simpson intervals (even).
const RADIAL_INTERVALS: usize = 2000;
/// Frequency grid intervals per unit of `1/r0`.
const FREQ_INTERVALS_PER_R0: f64 = 512.0;
/// Frequencies beyond `64/r0` are treated as carrying no mass.
const FREQ_MAX_R0: f64 = 64.0;

fn simpson(a: f64, b: f64, intervals: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / intervals as f64;
    let inner: f64 = (1..intervals).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// `k̂(u) = 2π ∫₀^{r0} k(ρ) J₀(2πuρ) ρ dρ`.
pub fn khat(spec: &KernelSpec, u: f64) -> f64 {
    2.0 * PI * simpson(0.0, spec.r0, RADIAL_INTERVALS, |rho| spec.eval(rho) * puruspe::Jn(0, 2.0 * PI * u * rho) * rho)
}

/// Cumulative spectral mass of one kernel.
pub struct MassOracle {
    spec: KernelSpec,
    step: f64,
    cumulative: Vec<f64>,
}

impl MassOracle {
    pub fn new(spec: &KernelSpec) -> Self {
        let u_max = FREQ_MAX_R0 / spec.r0;
        // Pairs of intervals so that every node pair is one Simpson panel.
        let panels = (FREQ_MAX_R0 * FREQ_INTERVALS_PER_R0 / 2.0) as usize;
        let step = u_max / (2 * panels) as f64;
        let integrand: Vec<f64> = (0..=2 * panels)
            .map(|i| {
                let u = i as f64 * step;
                u * khat(spec, u).powi(2)
            })
            .collect();
        let mut cumulative = vec![0.0];
        for p in 0..panels {
            let (a, m, b) = (integrand[2 * p], integrand[2 * p + 1], integrand[2 * p + 2]);
            cumulative.push(cumulative[p] + (a + 4.0 * m + b) * step / 3.0);
        }
        MassOracle { spec: spec.clone(), step: 2.0 * step, cumulative }
    }

    /// `G(u)`, with `G(∞) = G(64/r0)`.
    pub fn mass(&self, u: f64) -> f64 {
        let last = self.cumulative.len() - 1;
        let i = ((u / self.step).floor() as usize).min(last);
        let lo = i as f64 * self.step;
        if i == last || u <= lo {
            return self.cumulative[i];
        }
        self.cumulative[i] + simpson(lo, u, 8, |s| s * khat(&self.spec, s).powi(2))
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }
}

/// Oracle verdicts `(lhs, rhs, violated)` at every frequency of `grid`.
pub fn oracle_domination(k1: &MassOracle, k2: &MassOracle, n: u32, k: u32, psi_gap: bool, grid: &[f64]) -> Vec<(f64, f64, bool)> {
    let lo_n = 2f64.powi(-(n as i32) - 1);
    let lo_nk = 2f64.powi(-((n + k) as i32) - 1);
    grid.iter()
        .map(|&xi| {
            let band = |o: &MassOracle| o.mass(xi) - o.mass(lo_n * xi);
            let lhs = (band(k2) - band(k1)).max(0.0);
            let gap = k1.mass(lo_n * xi) - k1.mass(lo_nk * xi);
            let g = if psi_gap { ((k1.total() - k1.mass(xi)) - (k2.total() - k2.mass(xi))).abs() } else { 0.0 };
            let rhs = gap + g;
            (lhs, rhs, domination_verdict(lhs, rhs))
        })
        .collect()
}
