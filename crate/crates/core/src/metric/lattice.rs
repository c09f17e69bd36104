//! Lattice Riemannian metrics `e^{(γ/2)φ} ds` on grid-aligned rectangles.

use crate::error::{invalid, Result};
use crate::synth::{FieldSample, GridSpec, Rect, ShiftFunction};
use serde::{Deserialize, Serialize};

/// Neighbourhood used to connect lattice nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// Axis and diagonal neighbours.
    #[default]
    Eight,
    /// The eight-neighbour stencil plus the eight knight moves.
    Sixteen,
}

const EIGHT: [(i32, i32); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
const KNIGHT: [(i32, i32); 8] = [(1, 2), (2, 1), (-1, 2), (-2, 1), (1, -2), (2, -1), (-1, -2), (-2, -1)];

impl Stencil {
    /// Node offsets `(di, dj)` of the stencil.
    pub fn offsets(&self) -> &'static [(i32, i32)] {
        const SIXTEEN: [(i32, i32); 16] = {
            let mut all = [(0, 0); 16];
            let mut k = 0;
            while k < 8 {
                all[k] = EIGHT[k];
                all[k + 8] = KNIGHT[k];
                k += 1;
            }
            all
        };
        match self {
            Stencil::Eight => &EIGHT,
            Stencil::Sixteen => &SIXTEEN,
        }
    }
}

/// An undirected lattice edge between local node indices `from < to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Smaller endpoint.
    pub from: usize,
    /// Larger endpoint.
    pub to: usize,
    /// Edge weight: Euclidean length times the mean endpoint factor.
    pub weight: f64,
}

/// The lattice metric of a field restricted to a rectangle.
///
/// Nodes are the field's grid nodes inside `rect`, indexed row-major with
/// local coordinates `(i, j)`. The node factor is `e^{(γ/2)φ(v)}` and the
/// weight of the edge `uv` is `|u - v| (f(u) + f(v))/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMetric {
    rect: Rect,
    h: f64,
    nx: usize,
    ny: usize,
    gamma: f64,
    stencil: Stencil,
    potential: Vec<f64>,
    factors: Vec<f64>,
}

/// Builds the eight-neighbour metric of `field` on `rect`.
pub fn build_metric(field: &FieldSample, gamma: f64, rect: Rect) -> Result<LatticeMetric> {
    build_metric_with(field, gamma, rect, Stencil::Eight)
}

/// Builds the metric of `field` on `rect` with the given stencil.
pub fn build_metric_with(field: &FieldSample, gamma: f64, rect: Rect, stencil: Stencil) -> Result<LatticeMetric> {
    let (i0, j0, i1, j1) = field.grid.sub_rect(&rect)?;
    let mut potential = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
    for j in j0..=j1 {
        let row = field.grid.index(i0, j);
        potential.extend_from_slice(&field.values[row..row + i1 - i0 + 1]);
    }
    LatticeMetric::from_potential(rect, field.grid.h, i1 - i0 + 1, j1 - j0 + 1, gamma, stencil, potential)
}

impl LatticeMetric {
    /// Builds a metric directly from node values of `φ` (row-major, `nx × ny`).
    pub fn from_potential(rect: Rect, h: f64, nx: usize, ny: usize, gamma: f64, stencil: Stencil, potential: Vec<f64>) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return invalid(format!("gamma must be ≥ 0, got {gamma}"));
        }
        if potential.len() != nx * ny || nx == 0 || ny == 0 {
            return invalid("potential must have one value per node");
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return invalid("field values must be finite");
        }
        let factors = potential.iter().map(|&p| (0.5 * gamma * p).exp()).collect();
        Ok(LatticeMetric { rect, h, nx, ny, gamma, stencil, potential, factors })
    }

    /// The rectangle carrying the metric.
    pub fn rect(&self) -> Rect {
        self.rect
    }

    /// Grid spacing.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Node columns.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Node rows.
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    /// Whether the metric has no nodes (never true once built).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The parameter `γ`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Stencil in use.
    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    /// Node factors `e^{(γ/2)φ}` in row-major order.
    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    /// Field values the factors were computed from.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Largest node factor.
    pub fn max_factor(&self) -> f64 {
        self.factors.iter().copied().fold(0.0, f64::max)
    }

    /// Local index of node `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Local coordinates of a node index.
    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v % self.nx, v / self.nx)
    }

    /// Planar position of a node index.
    pub fn position(&self, v: usize) -> (f64, f64) {
        let (i, j) = self.coords(v);
        (self.rect.x0 + i as f64 * self.h, self.rect.y0 + j as f64 * self.h)
    }

    /// Local node index of a grid point inside the rectangle.
    pub fn locate(&self, x: f64, y: f64) -> Option<usize> {
        let g = GridSpec { extent: self.rect, h: self.h, padding: 0.0 };
        g.locate(x, y).map(|(i, j)| self.index(i, j))
    }

    /// Weight of the edge `uv`, or `None` when `u` and `v` are not stencil neighbours.
    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        let (ui, uj) = self.coords(u);
        let (vi, vj) = self.coords(v);
        let d = (vi as i64 - ui as i64, vj as i64 - uj as i64);
        self.stencil.offsets().iter().any(|&(a, b)| (a as i64, b as i64) == d).then(|| self.weight(u, v, d.0, d.1))
    }

    #[inline]
    pub(crate) fn weight(&self, u: usize, v: usize, di: i64, dj: i64) -> f64 {
        let len = match di * di + dj * dj {
            1 => self.h,
            2 => self.h * std::f64::consts::SQRT_2,
            s => self.h * (s as f64).sqrt(),
        };
        0.5 * (self.factors[u] + self.factors[v]) * len
    }

    /// Calls `visit(v, weight)` for every stencil neighbour of `u` inside the rectangle.
    #[inline]
    pub(crate) fn for_each_neighbor(&self, u: usize, mut visit: impl FnMut(usize, f64)) {
        let (i, j) = self.coords(u);
        let (i, j) = (i as i64, j as i64);
        for &(di, dj) in self.stencil.offsets() {
            let (a, b) = (i + di as i64, j + dj as i64);
            if a < 0 || b < 0 || a >= self.nx as i64 || b >= self.ny as i64 {
                continue;
            }
            let v = b as usize * self.nx + a as usize;
            visit(v, self.weight(u, v, di as i64, dj as i64));
        }
    }

    /// Every undirected edge once, ordered by `(from, to)`.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for u in 0..self.len() {
            let mut local = Vec::new();
            self.for_each_neighbor(u, |v, weight| {
                if v > u {
                    local.push(Edge { from: u, to: v, weight });
                }
            });
            local.sort_by_key(|e| e.to);
            out.extend(local);
        }
        out
    }

    /// The metric restricted to a grid-aligned sub-rectangle (factors are copied, not recomputed).
    pub fn restrict(&self, rect: Rect) -> Result<LatticeMetric> {
        let g = GridSpec { extent: self.rect, h: self.h, padding: 0.0 };
        let (i0, j0, i1, j1) = g.sub_rect(&rect)?;
        let (nx, ny) = (i1 - i0 + 1, j1 - j0 + 1);
        let mut potential = Vec::with_capacity(nx * ny);
        let mut factors = Vec::with_capacity(nx * ny);
        for j in j0..=j1 {
            let row = self.index(i0, j);
            potential.extend_from_slice(&self.potential[row..row + nx]);
            factors.extend_from_slice(&self.factors[row..row + nx]);
        }
        Ok(LatticeMetric { rect, h: self.h, nx, ny, gamma: self.gamma, stencil: self.stencil, potential, factors })
    }

    /// The same field with another stencil.
    pub fn with_stencil(&self, stencil: Stencil) -> LatticeMetric {
        LatticeMetric { stencil, ..self.clone() }
    }
}

/// Weyl scaling: multiplies every node factor by `e^{(γ/2) f(v)}` and rebuilds the edges.
///
/// The new factors are computed as `e^{(γ/2)(φ + f)}`, so the result is
/// bitwise identical to building the metric of the shifted field.
pub fn weyl_scale(metric: &LatticeMetric, f: &ShiftFunction, gamma: f64) -> Result<LatticeMetric> {
    if gamma != metric.gamma {
        return invalid(format!("Weyl scaling with gamma {gamma} of a metric built with gamma {}", metric.gamma));
    }
    if (f.grid.h - metric.h).abs() > 1e-12 * metric.h {
        return invalid("shift function and metric use different grid spacings");
    }
    let (i0, j0, i1, j1) = f.grid.sub_rect(&metric.rect)?;
    if (i1 - i0 + 1, j1 - j0 + 1) != (metric.nx, metric.ny) {
        return invalid("shift function grid does not match the metric rectangle");
    }
    let mut potential = Vec::with_capacity(metric.len());
    for j in 0..metric.ny {
        for i in 0..metric.nx {
            potential.push(metric.potential[metric.index(i, j)] + f.values[f.grid.index(i0 + i, j0 + j)]);
        }
    }
    LatticeMetric::from_potential(metric.rect, metric.h, metric.nx, metric.ny, gamma, metric.stencil, potential)
}
