//! Bellman–Ford oracle for lattice shortest paths.

use lfpp::metric::{LatticeMetric, Stencil};
use lfpp::synth::Rect;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A metric with i.i.d. uniform potentials on an `nx × ny` unit lattice.
pub fn random_metric(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> LatticeMetric {
    let pot: Vec<f64> = (0..nx * ny).map(|_| rng.random_range(-3.0..3.0)).collect();
    let rect = Rect::new(0.0, 0.0, (nx - 1) as f64, (ny - 1) as f64);
    LatticeMetric::from_potential(rect, 1.0, nx, ny, 1.0, Stencil::Eight, pot).unwrap()
}

/// Independent Bellman–Ford relaxation over the undirected edge list.
pub fn bellman_ford(metric: &LatticeMetric, sources: &[usize]) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; metric.len()];
    for &s in sources {
        d[s] = 0.0;
    }
    let edges = metric.edges();
    loop {
        let mut changed = false;
        for e in &edges {
            if d[e.from] + e.weight < d[e.to] {
                d[e.to] = d[e.from] + e.weight;
                changed = true;
            }
            if d[e.to] + e.weight < d[e.from] {
                d[e.from] = d[e.to] + e.weight;
                changed = true;
            }
        }
        if !changed {
            return d;
        }
    }
}
