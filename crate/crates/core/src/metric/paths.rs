//! Shortest paths on lattice metrics: crossings, point distances and diameters.

use super::lattice::LatticeMetric;
use crate::error::{invalid, Result};
use crate::synth::Rect;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::Write;

/// Which pair of opposite sides a crossing joins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// From the left side to the right side.
    LeftRight,
    /// From the bottom side to the top side.
    BottomTop,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::LeftRight => "left-right",
            Orientation::BottomTop => "bottom-top",
        })
    }
}

/// A shortest crossing of a rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingResult {
    /// Total weighted length.
    pub length: f64,
    /// Local node indices from the source side to the target side.
    pub path: Vec<usize>,
    /// The crossed rectangle.
    pub rect: Rect,
    /// The pair of sides joined.
    pub orientation: Orientation,
}

/// Heap entry ordered so that the smallest distance, then smallest node index, pops first.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of a (possibly truncated) Dijkstra run.
struct Search {
    dist: Vec<f64>,
    pred: Vec<usize>,
    reached: Option<usize>,
}

const NONE: usize = usize::MAX;

/// Multi-source Dijkstra; stops at the first settled node with `is_target` when given.
fn dijkstra(metric: &LatticeMetric, sources: &[usize], is_target: Option<&dyn Fn(usize) -> bool>) -> Search {
    let n = metric.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NONE; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::with_capacity(sources.len() * 2);
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Entry { dist: 0.0, node: s });
    }
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if let Some(t) = is_target {
            if t(u) {
                return Search { dist, pred, reached: Some(u) };
            }
        }
        metric.for_each_neighbor(u, |v, w| {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = u;
                heap.push(Entry { dist: nd, node: v });
            }
        });
    }
    Search { dist, pred, reached: None }
}

fn trace(pred: &[usize], end: usize) -> Vec<usize> {
    let mut path = vec![end];
    let mut v = end;
    while pred[v] != NONE {
        v = pred[v];
        path.push(v);
    }
    path.reverse();
    path
}

/// Node indices on the source and target sides of an orientation.
pub fn sides(metric: &LatticeMetric, orientation: Orientation) -> (Vec<usize>, Vec<usize>) {
    let (nx, ny) = (metric.nx(), metric.ny());
    match orientation {
        Orientation::LeftRight => ((0..ny).map(|j| metric.index(0, j)).collect(), (0..ny).map(|j| metric.index(nx - 1, j)).collect()),
        Orientation::BottomTop => ((0..nx).map(|i| metric.index(i, 0)).collect(), (0..nx).map(|i| metric.index(i, ny - 1)).collect()),
    }
}

/// Shortest crossing between the two opposite sides of the metric's rectangle.
///
/// All nodes of the source side start at distance zero; ties are broken by
/// the smaller node index, so results are reproducible.
pub fn crossing_length(metric: &LatticeMetric, orientation: Orientation) -> Result<CrossingResult> {
    let (nx, ny) = (metric.nx(), metric.ny());
    let needed = match orientation {
        Orientation::LeftRight => nx,
        Orientation::BottomTop => ny,
    };
    if needed < 2 {
        return invalid(format!("a {orientation} crossing needs at least two node lines, the rectangle has {needed}"));
    }
    let (sources, _) = sides(metric, orientation);
    let target: Box<dyn Fn(usize) -> bool> = match orientation {
        Orientation::LeftRight => Box::new(move |v| v % nx == nx - 1),
        Orientation::BottomTop => Box::new(move |v| v / nx == ny - 1),
    };
    let search = dijkstra(metric, &sources, Some(target.as_ref()));
    let end = search.reached.expect("lattice rectangles are connected");
    Ok(CrossingResult { length: search.dist[end], path: trace(&search.pred, end), rect: metric.rect(), orientation })
}

/// Sum of edge weights along a node path; errors if consecutive nodes are not neighbours.
pub fn path_length(metric: &LatticeMetric, path: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for w in path.windows(2) {
        match metric.edge_weight(w[0], w[1]) {
            Some(x) => total += x,
            None => return invalid(format!("nodes {} and {} are not stencil neighbours", w[0], w[1])),
        }
    }
    Ok(total)
}

fn check_node(metric: &LatticeMetric, (i, j): (usize, usize)) -> Result<usize> {
    if i >= metric.nx() || j >= metric.ny() {
        return invalid(format!("node ({i}, {j}) lies outside the {}x{} metric rectangle", metric.nx(), metric.ny()));
    }
    Ok(metric.index(i, j))
}

/// Shortest-path distance between two nodes given by local coordinates.
pub fn point_distance(metric: &LatticeMetric, x: (usize, usize), y: (usize, usize)) -> Result<f64> {
    let (a, b) = (check_node(metric, x)?, check_node(metric, y)?);
    let search = dijkstra(metric, &[a], Some(&|v| v == b));
    Ok(search.dist[b])
}

/// Distances from a set of nodes to every node.
pub fn distances_from(metric: &LatticeMetric, sources: &[usize]) -> Vec<f64> {
    dijkstra(metric, sources, None).dist
}

/// Lower and upper bounds on the diameter of the metric's rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterBounds {
    /// Largest distance between two net points; a lower bound.
    pub lower: f64,
    /// `lower + 2 ρ` where `ρ` is the largest distance from a node to the net.
    pub upper: f64,
    /// Net spacing actually used (a multiple of `h`).
    pub net_spacing: f64,
    /// Number of net points.
    pub net_points: usize,
}

/// Net indices along one axis: every `step` nodes plus the last node.
fn net_axis(count: usize, step: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..count).step_by(step).collect();
    if *v.last().expect("nonempty") != count - 1 {
        v.push(count - 1);
    }
    v
}

/// Diameter bounds from an ε-net of spacing `net_spacing` (rounded down to a multiple of `h`).
///
/// The net includes the four corners. Every node lies within `ρ` of the net,
/// hence `diam ≤ lower + 2ρ`; `ρ ≤ net_spacing × max factor`.
pub fn diameter(metric: &LatticeMetric, net_spacing: f64) -> Result<DiameterBounds> {
    let h = metric.h();
    if !(net_spacing >= h * (1.0 - 1e-12)) {
        return invalid(format!("net spacing {net_spacing} must be at least the grid spacing {h}"));
    }
    let step = ((net_spacing / h) + 1e-9).floor().max(1.0) as usize;
    let xs = net_axis(metric.nx(), step);
    let ys = net_axis(metric.ny(), step);
    let net: Vec<usize> = ys.iter().flat_map(|&j| xs.iter().map(move |&i| (i, j))).map(|(i, j)| metric.index(i, j)).collect();
    use rayon::prelude::*;
    let lower = net
        .par_iter()
        .map(|&s| {
            let d = distances_from(metric, &[s]);
            net.iter().map(|&t| d[t]).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let cover = distances_from(metric, &net).into_iter().fold(0.0, f64::max);
    Ok(DiameterBounds { lower, upper: lower + 2.0 * cover, net_spacing: step as f64 * h, net_points: net.len() })
}

/// CSV header of crossing exports.
pub const CROSSING_CSV_HEADER: &str = "sample_id,n,gamma,x0,y0,x1,y1,orientation,length";

impl CrossingResult {
    /// Writes one CSV row in the [`CROSSING_CSV_HEADER`] layout.
    pub fn write_csv_row<W: Write>(&self, w: &mut W, sample_id: u64, n: u32, gamma: f64) -> Result<()> {
        let r = self.rect;
        writeln!(w, "{sample_id},{n},{gamma},{},{},{},{},{},{}", r.x0, r.y0, r.x1, r.y1, self.orientation, self.length)?;
        Ok(())
    }

    /// Writes the path as one node index per line.
    pub fn write_path<W: Write>(&self, w: &mut W) -> Result<()> {
        for v in &self.path {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}
