//! Rectangle families used by the crossing inequalities: the thin-direction
//! cover of a long rectangle, the short-rectangle families `I_k`, the
//! chaining systems `H_k ∪ V_k`, and the per-sample checks built on them.

use super::lattice::LatticeMetric;
use super::paths::{crossing_length, diameter, DiameterBounds, Orientation};
use crate::error::{invalid, Result};
use crate::synth::Rect;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A rectangle together with the direction in which it must be crossed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    /// The rectangle.
    pub rect: Rect,
    /// Crossing direction.
    pub orientation: Orientation,
}

/// Offsets `0, d, 2d, …` up to `last`, with `last` appended when not hit exactly.
fn stack_offsets(d: f64, last: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        let y = i as f64 * d;
        if y >= last - 1e-12 * last.max(1.0) {
            out.push(last);
            return out;
        }
        out.push(y);
        i += 1;
    }
}

/// The cover of `[0, a] × [0, b]` (with `a < b`) by rectangles isometric to
/// `[0, a/2] × [0, b/2]`: every left-right crossing of the long rectangle
/// contains a thin-direction crossing of one of them.
///
/// The cover consists of thin rectangles `[0, a/2] × [y, y + b/2]` crossed
/// left-right and squares `[0, a/2] × [y, y + a/2]` crossed bottom-top, both
/// stacked from the bottom with spacing `(b - a)/4`; the last element of each
/// stack is flush with the top side.
pub fn lemcro_cover(a: f64, b: f64) -> Result<Vec<OrientedRect>> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return invalid(format!("side lengths must be positive, got ({a}, {b})"));
    }
    if a >= b {
        return invalid(format!("the cover needs a < b, got a = {a}, b = {b}"));
    }
    let d = (b - a) / 4.0;
    let mut out: Vec<OrientedRect> =
        stack_offsets(d, b / 2.0).into_iter().map(|y| OrientedRect { rect: Rect::new(0.0, y, a / 2.0, y + b / 2.0), orientation: Orientation::LeftRight }).collect();
    out.extend(stack_offsets(d, b - a / 2.0).into_iter().map(|y| OrientedRect { rect: Rect::new(0.0, y, a / 2.0, y + a / 2.0), orientation: Orientation::BottomTop }));
    Ok(out)
}

/// Whether a run of consecutive path points inside the closed rectangle
/// touches both sides that the orientation requires.
pub fn crosses(points: &[(f64, f64)], target: &OrientedRect) -> bool {
    let r = target.rect;
    let eps = 1e-9 * (1.0 + r.width().abs() + r.height().abs());
    let inside = |&(x, y): &(f64, f64)| x >= r.x0 - eps && x <= r.x1 + eps && y >= r.y0 - eps && y <= r.y1 + eps;
    let (mut lo, mut hi) = (false, false);
    for p in points {
        if !inside(p) {
            lo = false;
            hi = false;
            continue;
        }
        let (a, b) = match target.orientation {
            Orientation::LeftRight => ((p.0 - r.x0).abs() <= eps, (p.0 - r.x1).abs() <= eps),
            Orientation::BottomTop => ((p.1 - r.y0).abs() <= eps, (p.1 - r.y1).abs() <= eps),
        };
        lo |= a;
        hi |= b;
        if lo && hi {
            return true;
        }
    }
    false
}

/// The family `I_k` of rectangles `2^{-k}(1, 3)` (vertical, crossed left-right)
/// and `2^{-k}(3, 1)` (horizontal, crossed bottom-top) with dyadic corners in
/// `base`, a translate of `[0, 1] × [0, 3]`.
pub fn ik_family(base: Rect, k: u32) -> Vec<OrientedRect> {
    let s = 2f64.powi(-(k as i32));
    let cols = (base.width() / s).round() as i64;
    let rows = (base.height() / s).round() as i64;
    let mut out = Vec::new();
    for (w, hgt, orientation) in [(1, 3, Orientation::LeftRight), (3, 1, Orientation::BottomTop)] {
        for j in 0..=rows - hgt {
            for i in 0..=cols - w {
                let (x, y) = (base.x0 + i as f64 * s, base.y0 + j as f64 * s);
                out.push(OrientedRect { rect: Rect::new(x, y, x + w as f64 * s, y + hgt as f64 * s), orientation });
            }
        }
    }
    out
}

/// Scales `k` for which the `I_k` bound is valid on `[0,1] × [0,3]`: `k = 0`
/// and every `k ≥ 2` (horizontal members need `3·2^{-k} ≤ 1`), limited to
/// rectangles at least two cells thick.
pub fn ik_scales(h: f64) -> Vec<u32> {
    (0..=30).filter(|&k| k != 1 && 2f64.powi(-(k as i32)) >= 2.0 * h * (1.0 - 1e-12)).collect()
}

/// Minimum crossing length over a family, computed in parallel.
pub fn min_crossing(metric: &LatticeMetric, family: &[OrientedRect]) -> Result<f64> {
    lengths(metric, family).map(|v| v.into_iter().fold(f64::INFINITY, f64::min))
}

/// Maximum crossing length over a family, computed in parallel.
pub fn max_crossing(metric: &LatticeMetric, family: &[OrientedRect]) -> Result<f64> {
    lengths(metric, family).map(|v| v.into_iter().fold(0.0, f64::max))
}

fn lengths(metric: &LatticeMetric, family: &[OrientedRect]) -> Result<Vec<f64>> {
    family.par_iter().map(|t| Ok(crossing_length(&metric.restrict(t.rect)?, t.orientation)?.length)).collect()
}

/// `2^k min_{P ∈ I_k} L(P)` for a metric on a translate of `[0,1] × [0,3]`.
pub fn ik_lower_bound(metric: &LatticeMetric, k: u32) -> Result<f64> {
    let r = metric.rect();
    if (r.width() - 1.0).abs() > 1e-9 || (r.height() - 3.0).abs() > 1e-9 {
        return invalid("the I_k bound is stated for a 1 x 3 rectangle");
    }
    Ok(2f64.powi(k as i32) * min_crossing(metric, &ik_family(r, k))?)
}

/// The chaining systems `H_k ∪ V_k` on a square `base` of side `s`: thin
/// rectangles of size `s 2^{-k-1}(2, 1)` tiling the square, crossed in the long direction.
pub fn chaining_family(base: Rect, k: u32) -> Vec<OrientedRect> {
    let side = base.width() * 2f64.powi(-(k as i32));
    let count = 1i64 << k;
    let mut out = Vec::new();
    for j in 0..count {
        for i in 0..count {
            let (x, y) = (base.x0 + i as f64 * side, base.y0 + j as f64 * side);
            for half in 0..2 {
                let off = half as f64 * side / 2.0;
                out.push(OrientedRect { rect: Rect::new(x, y + off, x + side, y + off + side / 2.0), orientation: Orientation::LeftRight });
                out.push(OrientedRect { rect: Rect::new(x + off, y, x + off + side / 2.0, y + side), orientation: Orientation::BottomTop });
            }
        }
    }
    out
}

/// Both sides of the chaining inequality on one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainingReport {
    /// `max_{P ∈ H_k ∪ V_k} L(P)` for `k = 0..=n`.
    pub max_per_scale: Vec<f64>,
    /// `8 Σ_k max_k + 2 · 2^{-n} e^{(γ/2) sup φ}`.
    pub bound: f64,
    /// Diameter bounds of the square.
    pub diameter: DiameterBounds,
    /// Left-right crossing length of the square.
    pub crossing: f64,
}

impl ChainingReport {
    /// Whether the diameter upper bound respects the chaining bound.
    pub fn chaining_holds(&self) -> bool {
        self.diameter.upper <= self.bound
    }

    /// Whether the diameter lower bound dominates the left-right crossing.
    pub fn diameter_dominates_crossing(&self) -> bool {
        self.diameter.lower >= self.crossing
    }
}

/// Evaluates the chaining inequality for a metric on a unit square built from `φ_{0,n}`.
pub fn chaining_report(metric: &LatticeMetric, n: u32, net_spacing: f64) -> Result<ChainingReport> {
    let r = metric.rect();
    if (r.width() - 1.0).abs() > 1e-9 || (r.height() - 1.0).abs() > 1e-9 {
        return invalid("the chaining bound is stated for a unit square");
    }
    if 2f64.powi(-(n as i32) - 1) < metric.h() * (1.0 - 1e-12) {
        return invalid(format!("scale {n} needs grid spacing at most 2^-{}", n + 1));
    }
    let max_per_scale = (0..=n).map(|k| max_crossing(metric, &chaining_family(r, k))).collect::<Result<Vec<_>>>()?;
    let sup = metric.potential().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = 8.0 * max_per_scale.iter().sum::<f64>() + 2.0 * 2f64.powi(-(n as i32)) * (0.5 * metric.gamma() * sup).exp();
    let diameter = diameter(metric, net_spacing)?;
    let crossing = crossing_length(metric, Orientation::LeftRight)?.length;
    Ok(ChainingReport { max_per_scale, bound, diameter, crossing })
}

/// The crossing lengths entering the subadditivity and monotonicity checks,
/// all measured on one sample over the square `[x0, x0+3] × [y0, y0+3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedCrossings {
    /// Left-right crossing of the left strip `[0,1] × [0,3]`.
    pub l13: f64,
    /// Left-right crossing of the right strip `[2,3] × [0,3]`.
    pub l13_tilde: f64,
    /// Left-right crossing of the square.
    pub l33: f64,
    /// Left-right crossing of the bottom strip `[0,3] × [0,1]`.
    pub l31: f64,
    /// Left-right crossing of the top strip `[0,3] × [2,3]`.
    pub l31_tilde: f64,
}

impl NestedCrossings {
    /// `L_{1,3} + L̃_{1,3} ≤ L_{3,3} ≤ min(L_{3,1}, L̃_{3,1})`.
    pub fn subadditivity_holds(&self) -> bool {
        self.l13 + self.l13_tilde <= self.l33 && self.l33 <= self.l31.min(self.l31_tilde)
    }

    /// `L_{1,3} ≤ L_{3,3} ≤ L_{3,1}`.
    pub fn monotonicity_holds(&self) -> bool {
        self.l13 <= self.l33 && self.l33 <= self.l31
    }
}

/// Measures the five nested crossings on a metric built over a 3 × 3 square.
pub fn nested_crossings(metric: &LatticeMetric) -> Result<NestedCrossings> {
    let r = metric.rect();
    if (r.width() - 3.0).abs() > 1e-9 || (r.height() - 3.0).abs() > 1e-9 {
        return invalid("nested crossings are measured on a 3 x 3 square");
    }
    let (x, y) = (r.x0, r.y0);
    let lr = |rect: Rect| -> Result<f64> { Ok(crossing_length(&metric.restrict(rect)?, Orientation::LeftRight)?.length) };
    Ok(NestedCrossings {
        l13: lr(Rect::new(x, y, x + 1.0, y + 3.0))?,
        l13_tilde: lr(Rect::new(x + 2.0, y, x + 3.0, y + 3.0))?,
        l33: crossing_length(metric, Orientation::LeftRight)?.length,
        l31: lr(Rect::new(x, y, x + 3.0, y + 1.0))?,
        l31_tilde: lr(Rect::new(x, y + 2.0, x + 3.0, y + 3.0))?,
    })
}
