//! Small numerical building blocks: composite Gauss–Legendre quadrature and
//! clamped/natural cubic splines.

use gauss_quad::legendre::GaussLegendre;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::num::NonZeroUsize;

/// A Gauss–Legendre rule on the reference interval [-1, 1], reused by composite rules.
#[derive(Debug, Clone)]
pub struct GlRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GlRule {
    /// Builds a rule with `degree` nodes.
    pub fn new(degree: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(degree.max(1)).expect("degree >= 1"));
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        GlRule { nodes, weights }
    }

    /// Number of nodes of the reference rule.
    pub fn degree(&self) -> usize {
        self.nodes.len()
    }

    /// Integrates `f` over `[a, b]` with a single application of the rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal sub-intervals.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let panels = panels.max(1);
        let step = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + step * i as f64;
                self.integrate(lo, lo + step, &mut f)
            })
            .sum()
    }

    /// Returns the absolute nodes and weights of the composite rule on `[a, b]`.
    pub fn composite_points(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let panels = panels.max(1);
        let step = (b - a) / panels as f64;
        let half = 0.5 * step;
        let mut out = Vec::with_capacity(panels * self.degree());
        for i in 0..panels {
            let mid = a + step * i as f64 + half;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + half * x, w * half));
            }
        }
        out
    }
}

/// End condition for a cubic spline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplineEnd {
    /// Zero second derivative at the end point.
    Natural,
    /// Prescribed first derivative at the end point.
    Clamped(f64),
}

/// Interpolating cubic spline on a strictly increasing abscissa grid.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
    uniform_step: Option<f64>,
}

impl CubicSpline {
    /// Builds the spline; `x` must be strictly increasing with at least two points.
    pub fn new(x: Vec<f64>, y: Vec<f64>, left: SplineEnd, right: SplineEnd) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len(), "spline needs matching grids of length >= 2");
        assert!(x.windows(2).all(|w| w[1] > w[0]), "spline abscissae must be strictly increasing");
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        // Tridiagonal system for the second derivatives m_i.
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        match left {
            SplineEnd::Natural => {
                b[0] = 1.0;
            }
            SplineEnd::Clamped(s) => {
                b[0] = 2.0 * h[0];
                c[0] = h[0];
                d[0] = 6.0 * ((y[1] - y[0]) / h[0] - s);
            }
        }
        for i in 1..n - 1 {
            a[i] = h[i - 1];
            b[i] = 2.0 * (h[i - 1] + h[i]);
            c[i] = h[i];
            d[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
        }
        match right {
            SplineEnd::Natural => {
                b[n - 1] = 1.0;
            }
            SplineEnd::Clamped(s) => {
                a[n - 1] = h[n - 2];
                b[n - 1] = 2.0 * h[n - 2];
                d[n - 1] = 6.0 * (s - (y[n - 1] - y[n - 2]) / h[n - 2]);
            }
        }
        // Thomas algorithm.
        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = d[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
        }
        let step = h[0];
        let uniform = h.iter().all(|&hi| ((hi - step) / step).abs() < 1e-9);
        CubicSpline { x, y, m, uniform_step: uniform.then_some(step) }
    }

    /// Abscissa grid.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Ordinates at the grid points.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        if let Some(step) = self.uniform_step {
            let i = ((t - self.x[0]) / step).floor();
            return (i.max(0.0) as usize).min(n - 2);
        }
        match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            k => (k - 1).min(n - 2),
        }
    }

    /// Evaluates the spline at `t`, which should lie within the grid range.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// In-place unnormalized 2-D DFT of a row-major `w × h` array (`inverse`
/// selects the `+i` sign; no `1/(w h)` factor is applied).
pub fn fft2d(data: &mut [Complex64], w: usize, h: usize, inverse: bool) {
    assert_eq!(data.len(), w * h, "fft2d dimensions do not match the buffer");
    let mut planner = FftPlanner::new();
    let (row, col) = if inverse { (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h)) } else { (planner.plan_fft_forward(w), planner.plan_fft_forward(h)) };
    row.process(data);
    let mut column = vec![Complex64::new(0.0, 0.0); h];
    for i in 0..w {
        for j in 0..h {
            column[j] = data[j * w + i];
        }
        col.process(&mut column);
        for j in 0..h {
            data[j * w + i] = column[j];
        }
    }
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn next_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}
