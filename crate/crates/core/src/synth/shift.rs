//! Cameron–Martin shifts `f_n = C_{0,n} ∗ g` of grid functions and their
//! addition to sampled fields.

use super::field::FieldSample;
use super::grid::GridSpec;
use super::spectral::lag_covariance;
use crate::error::{invalid, Result};
use crate::kernel::{Kernel, Scale};
use crate::numerics::{fft2d, next_fast_len};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A deterministic function on the nodes of a grid, typically `f = C ∗ g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftFunction {
    /// Node grid.
    pub grid: GridSpec,
    /// Row-major node values.
    pub values: Vec<f64>,
    /// Human-readable description of `g` and the band.
    pub source: String,
}

impl ShiftFunction {
    /// The zero function on `grid`.
    pub fn zero(grid: &GridSpec) -> Self {
        ShiftFunction { grid: *grid, values: vec![0.0; grid.len()], source: "zero".into() }
    }

    /// A constant function on `grid`.
    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        ShiftFunction { grid: *grid, values: vec![c; grid.len()], source: format!("constant {c}") }
    }

    /// The function multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        ShiftFunction { grid: self.grid, values: self.values.iter().map(|v| a * v).collect(), source: format!("{a} * ({})", self.source) }
    }

    /// Largest absolute node value.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `⟨a, b⟩ ≈ Σ a_i b_i h²`, the grid approximation of the `L²` inner product.
pub fn grid_inner_product(a: &[f64], b: &[f64], grid: &GridSpec) -> Result<f64> {
    if a.len() != grid.len() || b.len() != grid.len() {
        return invalid("inner product arguments must have one value per grid node");
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * grid.h * grid.h)
}

/// Mollifier bump `height · e · exp(-1/(1 - |x - center|²/radius²))` on the grid
/// nodes; equals `height` at the center and vanishes outside the disc.
pub fn bump_grid_function(grid: &GridSpec, center: (f64, f64), radius: f64, height: f64) -> Vec<f64> {
    grid.nodes()
        .into_iter()
        .map(|(x, y)| {
            let s2 = ((x - center.0).powi(2) + (y - center.1).powi(2)) / (radius * radius);
            if s2 < 1.0 {
                height * (1.0 - 1.0 / (1.0 - s2)).exp()
            } else {
                0.0
            }
        })
        .collect()
}

/// Mean of `log|x|` over the square `[-a, a]²`.
fn mean_log_over_square(a: f64) -> f64 {
    a.ln() + 0.5 * (2f64.ln() - 3.0 + 0.5 * PI)
}

/// Computes `f_n = C_{0,n} ∗ g` on the nodes of `grid` by zero-padded FFT convolution.
///
/// `g` is given on the grid nodes and must vanish on the outermost ring of
/// nodes, so that its support lies strictly inside the extent. For `n = ∞` the
/// logarithmic singularity at the origin is integrated exactly over the node cell.
pub fn cameron_martin_shift(kernel: &Kernel, g: &[f64], n: Scale, grid: &GridSpec) -> Result<ShiftFunction> {
    grid.validate()?;
    let (nx, ny) = (grid.nx(), grid.ny());
    if g.len() != nx * ny {
        return invalid(format!("g has {} values but the grid has {} nodes", g.len(), nx * ny));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return invalid("g must be finite");
    }
    let on_ring = |i: usize, j: usize| i == 0 || j == 0 || i + 1 == nx || j + 1 == ny;
    for j in 0..ny {
        for i in 0..nx {
            if on_ring(i, j) && g[grid.index(i, j)] != 0.0 {
                return invalid("support of g reaches the boundary of the grid extent");
            }
        }
    }
    let description = format!("C_(0,{n}) * g");
    if g.iter().all(|&v| v == 0.0) {
        return Ok(ShiftFunction { source: description, ..ShiftFunction::zero(grid) });
    }

    let h = grid.h;
    let reach = (2.0 * kernel.r0() / h).ceil() as usize;
    let mut lags = lag_covariance(kernel, 0, n, h, reach)?;
    if n == Scale::Infinite {
        // Cell average of -log r + F(r) over the node cell; F is smooth at 0.
        lags[0] = kernel.log_remainder(1e-6 * h)? - mean_log_over_square(0.5 * h);
    }
    let side = reach + 1;
    let tw = next_fast_len(nx + 2 * reach);
    let th = next_fast_len(ny + 2 * reach);
    let mut kern = vec![Complex64::new(0.0, 0.0); tw * th];
    for y in 0..th {
        let dy = y.min(th - y);
        if dy > reach {
            continue;
        }
        for x in 0..tw {
            let dx = x.min(tw - x);
            if dx <= reach {
                kern[y * tw + x].re = lags[dy * side + dx] * h * h;
            }
        }
    }
    let mut data = vec![Complex64::new(0.0, 0.0); tw * th];
    for j in 0..ny {
        for i in 0..nx {
            data[j * tw + i].re = g[grid.index(i, j)];
        }
    }
    fft2d(&mut kern, tw, th, false);
    fft2d(&mut data, tw, th, false);
    for (d, k) in data.iter_mut().zip(&kern) {
        *d *= k;
    }
    fft2d(&mut data, tw, th, true);
    let total = (tw * th) as f64;
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        values.extend(data[j * tw..j * tw + nx].iter().map(|z| z.re / total));
    }
    Ok(ShiftFunction { grid: *grid, values, source: description })
}

/// Returns `field + shift`, recording the shift in the provenance.
pub fn shift_field(field: &FieldSample, shift: &ShiftFunction) -> Result<FieldSample> {
    if field.grid != shift.grid {
        return invalid("shift and field live on different grids");
    }
    let mut out = field.clone();
    for (v, s) in out.values.iter_mut().zip(&shift.values) {
        *v += s;
    }
    out.provenance.shifts.push(shift.source.clone());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::GlRule;

    #[test]
    fn mean_log_matches_quadrature() {
        let rule = GlRule::new(16);
        let a = 0.3;
        let q = rule.composite(-a, a, 8, |x| rule.composite(-a, a, 8, |y| 0.5 * (x * x + y * y).ln())) / (4.0 * a * a);
        assert!((q - mean_log_over_square(a)).abs() < 1e-6, "{q}");
    }
}
