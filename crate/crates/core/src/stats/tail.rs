//! Empirical left and right tails of `log L − log μ` with quadratic-exponent fits.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

use super::StatRow;

/// Minimum number of samples accepted by [`tail_report`].
pub const MIN_TAIL_SAMPLES: usize = 1000;

/// Points of the `s`-grid.
pub const TAIL_GRID_POINTS: usize = 200;

/// Probability window used by the fit.
pub const FIT_WINDOW: (f64, f64) = (1e-3, 1e-1);

/// A fitted tail `P(s) ≈ A · Q(√(2c) s)`, `Q` the standard normal survival function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Quadratic exponent: `log P(s) ≈ −c s²` for large `s`.
    pub c: f64,
    /// Log prefactor `log A`.
    pub log_prefactor: f64,
    /// Range of `s` inside the probability window.
    pub s_window: (f64, f64),
    /// Number of grid points used.
    pub points: usize,
}

/// Empirical tails of `X = log L − log μ` on an `s`-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    /// Grid `0 < s_1 < … < s_K`.
    pub s: Vec<f64>,
    /// `P̂(X ≤ −s)`.
    pub left: Vec<f64>,
    /// `P̂(X ≥ s)`.
    pub right: Vec<f64>,
    /// Left-tail fit, `None` when fewer than three grid points fall in the window.
    pub left_fit: Option<TailFit>,
    /// Right-tail fit.
    pub right_fit: Option<TailFit>,
    /// Number of samples.
    pub samples: usize,
}

/// `log Q(x)` for `x ≥ 0`, computed through the scaled complementary error function.
fn log_normal_survival(x: f64) -> f64 {
    (0.5 * puruspe::erfcx(x / std::f64::consts::SQRT_2)).ln() - 0.5 * x * x
}

/// Weighted least-squares fit of `log P = a + log Q(√(2c) s)` with weights `N P / (1 − P)`.
///
/// For fixed `c` the optimal `a` is a weighted mean; `c` is located by a scan
/// over a logarithmic grid followed by golden-section refinement.
fn fit_tail(s: &[f64], p: &[f64], n: usize) -> Option<TailFit> {
    let pts: Vec<(f64, f64, f64)> = s.iter().zip(p).filter(|&(_, &q)| q >= FIT_WINDOW.0 && q <= FIT_WINDOW.1).map(|(&x, &q)| (x, q.ln(), n as f64 * q / (1.0 - q))).collect();
    if pts.len() < 3 {
        return None;
    }
    let sse = |log_c: f64| -> (f64, f64) {
        let k = (2.0 * log_c.exp()).sqrt();
        let (mut sw, mut swr) = (0.0, 0.0);
        let resid: Vec<f64> = pts.iter().map(|&(x, y, _)| y - log_normal_survival(k * x)).collect();
        for (r, &(_, _, w)) in resid.iter().zip(&pts) {
            sw += w;
            swr += w * r;
        }
        let a = swr / sw;
        (resid.iter().zip(&pts).map(|(r, &(_, _, w))| w * (r - a).powi(2)).sum(), a)
    };
    let s_mid = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let centre = (1.0 / (s_mid * s_mid)).ln();
    let (lo, hi) = (centre - 12.0, centre + 12.0);
    let steps = 240;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=steps {
        let x = lo + (hi - lo) * i as f64 / steps as f64;
        let v = sse(x).0;
        if v < best.0 {
            best = (v, x);
        }
    }
    let h = (hi - lo) / steps as f64;
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if sse(x1).0 < sse(x2).0 {
            b = x2;
        } else {
            a = x1;
        }
    }
    let log_c = 0.5 * (a + b);
    let (_, log_prefactor) = sse(log_c);
    Some(TailFit { c: log_c.exp(), log_prefactor, s_window: (pts[0].0, pts[pts.len() - 1].0), points: pts.len() })
}

/// Empirical tails of `log L − log μ` and their quadratic-exponent fits.
pub fn tail_report(log_lengths: &[f64], mu: f64) -> Result<TailCurve> {
    if log_lengths.len() < MIN_TAIL_SAMPLES {
        return invalid(format!("tail estimation needs at least {MIN_TAIL_SAMPLES} samples, got {}", log_lengths.len()));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return invalid(format!("mu must be positive, got {mu}"));
    }
    if log_lengths.iter().any(|x| !x.is_finite()) {
        return invalid("log-length samples must be finite");
    }
    let log_mu = mu.ln();
    let mut x: Vec<f64> = log_lengths.iter().map(|v| v - log_mu).collect();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let s_max = x[0].abs().max(x[n - 1].abs());
    let s_max = if s_max > 0.0 { s_max } else { 1.0 };
    let s: Vec<f64> = (1..=TAIL_GRID_POINTS).map(|i| s_max * i as f64 / TAIL_GRID_POINTS as f64).collect();
    let left: Vec<f64> = s.iter().map(|&t| x.partition_point(|&v| v <= -t) as f64 / n as f64).collect();
    let right: Vec<f64> = s.iter().map(|&t| (n - x.partition_point(|&v| v < t)) as f64 / n as f64).collect();
    Ok(TailCurve { left_fit: fit_tail(&s, &left, n), right_fit: fit_tail(&s, &right, n), s, left, right, samples: n })
}

impl TailCurve {
    /// Fitted exponents as CSV rows for scale `n` (NaN when the fit is unavailable).
    pub fn stat_rows(&self, n: u32) -> Vec<StatRow> {
        let row = |name: &str, f: &Option<TailFit>| StatRow { n, statistic: name.into(), value: f.map_or(f64::NAN, |f| f.c), se: f64::NAN, ci_low: f64::NAN, ci_high: f64::NAN };
        vec![row("left_tail_c", &self.left_fit), row("right_tail_c", &self.right_fit)]
    }
}
