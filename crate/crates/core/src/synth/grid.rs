//! Rectangles and regular node grids.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Relative tolerance used when checking that lengths are whole multiples of a step.
const ALIGN_TOL: f64 = 1e-9;

/// Returns `Some(k)` when `len / step` is (numerically) the integer `k`.
pub fn whole_steps(len: f64, step: f64) -> Option<usize> {
    let q = len / step;
    let k = q.round();
    ((q - k).abs() <= ALIGN_TOL * q.abs().max(1.0) && k >= 0.0).then_some(k as usize)
}

/// Axis-aligned closed rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    /// Left edge.
    pub x0: f64,
    /// Bottom edge.
    pub y0: f64,
    /// Right edge.
    pub x1: f64,
    /// Top edge.
    pub y1: f64,
}

impl Rect {
    /// Builds `[x0, x1] × [y0, y1]`.
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    /// `[x, x + w] × [y, y + h]`.
    pub fn from_origin(x: f64, y: f64, w: f64, h: f64) -> Self {
        Rect::new(x, y, x + w, y + h)
    }

    /// Horizontal side length.
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    /// Vertical side length.
    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    /// Whether `other` lies inside `self` (up to rounding).
    pub fn contains_rect(&self, other: &Rect) -> bool {
        let eps = 1e-12 * (1.0 + self.width().abs() + self.height().abs());
        other.x0 >= self.x0 - eps && other.x1 <= self.x1 + eps && other.y0 >= self.y0 - eps && other.y1 <= self.y1 + eps
    }

    /// Whether the point lies in the closed rectangle.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    /// The rectangle grown by `d` on every side.
    pub fn inflate(&self, d: f64) -> Rect {
        Rect::new(self.x0 - d, self.y0 - d, self.x1 + d, self.y1 + d)
    }

    /// Whether the two closed rectangles intersect.
    pub fn intersects(&self, other: &Rect) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }

    /// Euclidean distance from a point to the rectangle (zero inside).
    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        let dx = (self.x0 - x).max(0.0).max(x - self.x1);
        let dy = (self.y0 - y).max(0.0).max(y - self.y1);
        dx.hypot(dy)
    }
}

/// A regular grid of nodes `(x0 + i h, y0 + j h)` covering `extent`, with a
/// padding length describing the region whose noise influences the nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Rectangle spanned by the nodes.
    pub extent: Rect,
    /// Node spacing.
    pub h: f64,
    /// Padding length around the extent.
    pub padding: f64,
}

impl GridSpec {
    /// Builds and validates a grid.
    pub fn new(extent: Rect, h: f64, padding: f64) -> Result<Self> {
        let g = GridSpec { extent, h, padding };
        g.validate()?;
        Ok(g)
    }

    /// Checks that `h` divides both sides and that the padding is nonnegative.
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return invalid(format!("grid spacing must be positive, got {}", self.h));
        }
        let (w, ht) = (self.extent.width(), self.extent.height());
        if !(w >= 0.0 && ht >= 0.0) {
            return invalid("grid extent must have nonnegative sides");
        }
        if whole_steps(w, self.h).is_none() || whole_steps(ht, self.h).is_none() {
            return invalid(format!("grid spacing {} does not divide the extent sides ({w}, {ht})", self.h));
        }
        if !(self.padding >= 0.0) {
            return invalid("grid padding must be nonnegative");
        }
        Ok(())
    }

    /// Number of node columns.
    pub fn nx(&self) -> usize {
        whole_steps(self.extent.width(), self.h).expect("validated grid") + 1
    }

    /// Number of node rows.
    pub fn ny(&self) -> usize {
        whole_steps(self.extent.height(), self.h).expect("validated grid") + 1
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    /// Whether the grid has no nodes (never true for a validated grid).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index of node `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    /// Coordinates of node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (self.extent.x0 + i as f64 * self.h, self.extent.y0 + j as f64 * self.h)
    }

    /// All node coordinates in row-major order.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let (nx, ny) = (self.nx(), self.ny());
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push(self.node(i, j));
            }
        }
        out
    }

    /// The padded extent.
    pub fn padded_extent(&self) -> Rect {
        self.extent.inflate(self.padding)
    }

    /// Column/row index of a coordinate lying on the grid, if it does.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let i = whole_steps(x - self.extent.x0, self.h)?;
        let j = whole_steps(y - self.extent.y0, self.h)?;
        (i < self.nx() && j < self.ny()).then_some((i, j))
    }

    /// Node index range `(i0, j0, i1, j1)` (inclusive) of a grid-aligned sub-rectangle.
    pub fn sub_rect(&self, r: &Rect) -> Result<(usize, usize, usize, usize)> {
        match (self.locate(r.x0, r.y0), self.locate(r.x1, r.y1)) {
            (Some((i0, j0)), Some((i1, j1))) if i1 >= i0 && j1 >= j0 => Ok((i0, j0, i1, j1)),
            _ => invalid(format!("rectangle {r:?} is not grid-aligned inside the field extent {:?} (h = {})", self.extent, self.h)),
        }
    }
}
