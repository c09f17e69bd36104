use lfpp::kernel::{Kernel, KernelSpec};
use lfpp::metric::*;
use lfpp::synth::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

#[path = "oracles/shortest_path.rs"]
mod shortest_path;
use shortest_path::{bellman_ford, random_metric};

fn kernel() -> &'static Kernel {
    static K: OnceLock<Kernel> = OnceLock::new();
    K.get_or_init(|| Kernel::new(KernelSpec::default()))
}

fn field(extent: Rect, n: u32, seed: u64) -> FieldSample {
    let g = GridSpec::new(extent, 2f64.powi(-(n as i32) - 2), 0.25).unwrap();
    spectral_sample(kernel(), 0, n, &g, seed).unwrap()
}

fn constant_field(extent: Rect, h: f64, c: f64) -> FieldSample {
    let grid = GridSpec::new(extent, h, 0.25).unwrap();
    let provenance = Provenance { method: "constant".into(), seed: 0, kernel_hash: String::new(), store_fingerprint: None, shifts: vec![] };
    FieldSample { grid, band: (0, 0), values: vec![c; grid.len()], provenance }
}

#[test]
fn gamma_zero_gives_euclidean_weights_and_straight_crossings() {
    let f = field(Rect::new(0.0, 0.0, 1.0, 3.0), 3, 1);
    let m = build_metric(&f, 0.0, Rect::new(0.0, 0.0, 1.0, 3.0)).unwrap();
    for e in m.edges() {
        let (a, b) = (m.position(e.from), m.position(e.to));
        assert!((e.weight - (a.0 - b.0).hypot(a.1 - b.1)).abs() < 1e-15);
    }
    assert_eq!(crossing_length(&m, Orientation::LeftRight).unwrap().length, 1.0);
    assert_eq!(crossing_length(&m, Orientation::BottomTop).unwrap().length, 3.0);
    let sq = build_metric(&f, 0.0, Rect::new(0.0, 0.0, 1.0, 1.0)).unwrap();
    let d = diameter(&sq, sq.h()).unwrap();
    assert!((d.lower - 2f64.sqrt()).abs() < 1e-12 && d.upper == d.lower, "{d:?}");
}

#[test]
fn constant_and_larger_fields_scale_weights() {
    let rect = Rect::new(0.0, 0.0, 1.0, 1.0);
    let base = build_metric(&constant_field(rect, 0.125, 0.0), 0.4, rect).unwrap();
    let c = 0.7;
    let up = build_metric(&constant_field(rect, 0.125, c), 0.4, rect).unwrap();
    for (a, b) in base.edges().iter().zip(up.edges()) {
        assert!((b.weight / a.weight - (0.2 * c).exp()).abs() < 1e-14);
    }
    let f = field(rect, 3, 5);
    let mut bigger = f.clone();
    for (i, v) in bigger.values.iter_mut().enumerate() {
        *v += (i % 7) as f64 * 0.1;
    }
    let (m1, m2) = (build_metric(&f, 0.3, rect).unwrap(), build_metric(&bigger, 0.3, rect).unwrap());
    for (a, b) in m1.edges().iter().zip(m2.edges()) {
        assert!(b.weight >= a.weight);
    }
}

#[test]
fn validation_errors() {
    let f = field(Rect::new(0.0, 0.0, 1.0, 1.0), 3, 1);
    assert!(build_metric(&f, 0.2, Rect::new(0.0, 0.0, 0.3, 1.0)).is_err());
    assert!(build_metric(&f, -1.0, Rect::new(0.0, 0.0, 1.0, 1.0)).is_err());
    let m = build_metric(&f, 0.2, Rect::new(0.0, 0.0, 1.0, 1.0)).unwrap();
    assert!(point_distance(&m, (0, 0), (m.nx(), 0)).is_err());
    assert!(diameter(&m, 0.5 * m.h()).is_err());
    let line = build_metric(&f, 0.2, Rect::new(0.0, 0.0, 0.0, 1.0)).unwrap();
    assert!(crossing_length(&line, Orientation::LeftRight).is_err());
    assert!(lemcro_cover(1.0, 1.0).is_err());
    assert!(lemcro_cover(2.0, 1.0).is_err());
}

#[test]
fn dijkstra_matches_bellman_ford() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let m = random_metric(&mut rng, 6, 6);
        for orientation in [Orientation::LeftRight, Orientation::BottomTop] {
            let c = crossing_length(&m, orientation).unwrap();
            let (src, dst) = sides(&m, orientation);
            let bf = bellman_ford(&m, &src);
            let oracle = dst.iter().map(|&v| bf[v]).fold(f64::INFINITY, f64::min);
            assert_eq!(c.length, oracle);
            assert_eq!(path_length(&m, &c.path).unwrap(), c.length);
        }
        let (a, b) = ((rng.random_range(0..6), rng.random_range(0..6)), (rng.random_range(0..6), rng.random_range(0..6)));
        let bf = bellman_ford(&m, &[m.index(a.0, a.1)]);
        assert_eq!(point_distance(&m, a, b).unwrap(), bf[m.index(b.0, b.1)]);
    }
}

#[test]
fn point_distances_form_a_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f = field(Rect::new(0.0, 0.0, 1.0, 1.0), 3, 2);
    let m = build_metric(&f, 0.3, Rect::new(0.0, 0.0, 1.0, 1.0)).unwrap();
    let mut pick = || (rng.random_range(0..m.nx()), rng.random_range(0..m.ny()));
    for _ in 0..100 {
        let (x, y, z) = (pick(), pick(), pick());
        assert_eq!(point_distance(&m, x, x).unwrap(), 0.0);
        let dxy = point_distance(&m, x, y).unwrap();
        assert!((dxy - point_distance(&m, y, x).unwrap()).abs() <= 1e-12 * dxy);
        assert!(dxy <= point_distance(&m, x, z).unwrap() + point_distance(&m, z, y).unwrap() + 1e-12);
    }
}

#[test]
fn crossings_are_locally_optimal() {
    let f = field(Rect::new(0.0, 0.0, 1.0, 1.0), 4, 3);
    let m = build_metric(&f, 0.5, Rect::new(0.0, 0.0, 1.0, 1.0)).unwrap();
    let c = crossing_length(&m, Orientation::LeftRight).unwrap();
    assert!((path_length(&m, &c.path).unwrap() - c.length).abs() <= 1e-12 * c.length);
    let (first, last) = (m.position(c.path[0]), m.position(*c.path.last().unwrap()));
    assert_eq!(first.0, 0.0);
    assert_eq!(last.0, 1.0);
    for w in c.path.windows(3) {
        let here = m.edge_weight(w[0], w[1]).unwrap() + m.edge_weight(w[1], w[2]).unwrap();
        for alt in 0..m.len() {
            if let (Some(a), Some(b)) = (m.edge_weight(w[0], alt), m.edge_weight(alt, w[2])) {
                assert!(a + b >= here - 1e-12 * here);
            }
        }
    }
    let mut buf = Vec::new();
    c.write_csv_row(&mut buf, 7, 4, 0.5).unwrap();
    let line = String::from_utf8(buf).unwrap();
    assert!(line.starts_with("7,4,0.5,0,0,1,1,left-right,"));
}

#[test]
fn nested_rectangles_obey_subadditivity_and_monotonicity() {
    for seed in 0..20 {
        let f = field(Rect::new(0.0, 0.0, 3.0, 3.0), 3, seed);
        let m = build_metric(&f, 0.5, Rect::new(0.0, 0.0, 3.0, 3.0)).unwrap();
        let nc = nested_crossings(&m).unwrap();
        assert!(nc.subadditivity_holds(), "{nc:?}");
        assert!(nc.monotonicity_holds(), "{nc:?}");
    }
}

#[test]
fn ik_lower_bound_holds() {
    let h = 2f64.powi(-5);
    assert_eq!(ik_scales(h), vec![0, 2, 3, 4]);
    assert_eq!(ik_family(Rect::new(0.0, 0.0, 1.0, 3.0), 2).len(), 4 * 10 + 2 * 12);
    for seed in 0..10 {
        let f = field(Rect::new(0.0, 0.0, 1.0, 3.0), 3, 100 + seed);
        let m = build_metric(&f, 0.5, Rect::new(0.0, 0.0, 1.0, 3.0)).unwrap();
        let l13 = crossing_length(&m, Orientation::LeftRight).unwrap().length;
        for k in ik_scales(h) {
            let bound = ik_lower_bound(&m, k).unwrap();
            assert!(l13 >= bound, "seed {seed}, k {k}: {l13} < {bound}");
        }
    }
}

#[test]
fn diameter_and_chaining_bounds() {
    for seed in 0..5 {
        let n = 3;
        let f = field(Rect::new(0.0, 0.0, 1.0, 1.0), n, 300 + seed);
        let m = build_metric(&f, 0.4, Rect::new(0.0, 0.0, 1.0, 1.0)).unwrap();
        let rep = chaining_report(&m, n, 0.125).unwrap();
        assert_eq!(rep.max_per_scale.len(), (n + 1) as usize);
        assert!(rep.diameter.lower <= rep.diameter.upper);
        assert!(rep.diameter.upper <= rep.diameter.lower + 2.0 * 0.125 * m.max_factor() + 1e-12);
        assert!(rep.diameter_dominates_crossing(), "{rep:?}");
        assert!(rep.chaining_holds(), "{rep:?}");
    }
    assert_eq!(chaining_family(Rect::new(0.0, 0.0, 1.0, 1.0), 2).len(), 4 * 16);
}

#[test]
fn sixteen_neighbor_crossings_are_shorter() {
    for seed in 0..5 {
        let f = field(Rect::new(0.0, 0.0, 1.0, 1.0), 3, 500 + seed);
        let m8 = build_metric(&f, 0.5, Rect::new(0.0, 0.0, 1.0, 1.0)).unwrap();
        let m16 = build_metric_with(&f, 0.5, Rect::new(0.0, 0.0, 1.0, 1.0), Stencil::Sixteen).unwrap();
        assert!(crossing_length(&m16, Orientation::LeftRight).unwrap().length <= crossing_length(&m8, Orientation::LeftRight).unwrap().length);
    }
}

#[test]
fn weyl_identity_is_exact() {
    let rect = Rect::new(0.0, 0.0, 1.0, 1.0);
    let f = field(rect, 4, 8);
    let g = bump_grid_function(&f.grid, (0.5, 0.5), 0.3, 2.0);
    let shift = cameron_martin_shift(kernel(), &g, lfpp::kernel::Scale::Finite(4), &f.grid).unwrap();
    let gamma = 0.3;
    let m = build_metric(&f, gamma, rect).unwrap();
    let scaled = weyl_scale(&m, &shift, gamma).unwrap();
    let direct = build_metric(&shift_field(&f, &shift).unwrap(), gamma, rect).unwrap();
    for (a, b) in scaled.edges().iter().zip(direct.edges()) {
        assert!((a.weight - b.weight).abs() <= 1e-12 * b.weight);
    }
    assert_eq!(crossing_length(&scaled, Orientation::LeftRight).unwrap().length, crossing_length(&direct, Orientation::LeftRight).unwrap().length);
    assert_eq!(weyl_scale(&m, &ShiftFunction::zero(&f.grid), gamma).unwrap(), m);
    let c = 0.8;
    let shifted = weyl_scale(&m, &ShiftFunction::constant(&f.grid, c), gamma).unwrap();
    let (d0, d1) = (point_distance(&m, (0, 0), (30, 50)).unwrap(), point_distance(&shifted, (0, 0), (30, 50)).unwrap());
    assert!((d1 / d0 - (0.5 * gamma * c).exp()).abs() < 1e-12);
    assert!(weyl_scale(&m, &shift, 0.5).is_err());
}

#[test]
fn lemcro_cover_geometry() {
    let cover = lemcro_cover(1.0, 3.0).unwrap();
    assert_eq!(cover.len(), 10);
    let thin = cover.iter().filter(|c| c.orientation == Orientation::LeftRight).count();
    assert_eq!(thin, 4);
    for c in &cover {
        assert!(Rect::new(0.0, 0.0, 1.0, 3.0).contains_rect(&c.rect));
        let (w, h) = (c.rect.width(), c.rect.height());
        match c.orientation {
            Orientation::LeftRight => assert_eq!((w, h), (0.5, 1.5)),
            Orientation::BottomTop => assert_eq!((w, h), (0.5, 0.5)),
        }
    }
}

#[test]
fn geodesics_cross_a_cover_rectangle() {
    let cover = lemcro_cover(1.0, 3.0).unwrap();
    for seed in 0..1000 {
        let f = field(Rect::new(0.0, 0.0, 1.0, 3.0), 3, 10_000 + seed);
        let m = build_metric(&f, 0.2, Rect::new(0.0, 0.0, 1.0, 3.0)).unwrap();
        let c = crossing_length(&m, Orientation::LeftRight).unwrap();
        let pts: Vec<(f64, f64)> = c.path.iter().map(|&v| m.position(v)).collect();
        assert!(cover.iter().any(|r| crosses(&pts, r)), "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_walk_crossings_hit_the_cover(seed in any::<u64>(), start in 0usize..25) {
        // Random 8-neighbour walks from the left side, stopped at the right side.
        let cover = lemcro_cover(1.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nx, ny) = (9i64, 25i64);
        let (mut i, mut j) = (0i64, start as i64);
        let mut pts = vec![(0.0, j as f64 / 8.0)];
        while i < nx - 1 {
            let (di, dj) = (rng.random_range(-1..=1), rng.random_range(-1..=1));
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || b >= ny || (di, dj) == (0, 0) {
                continue;
            }
            i = a;
            j = b;
            pts.push((i as f64 / 8.0, j as f64 / 8.0));
        }
        prop_assert!(cover.iter().any(|r| crosses(&pts, r)));
    }

    #[test]
    fn crossing_lengths_scale_with_constant_shifts(c in -2.0f64..2.0, gamma in 0.0f64..1.0) {
        let rect = Rect::new(0.0, 0.0, 1.0, 1.0);
        let f = field(rect, 2, 3);
        let m = build_metric(&f, gamma, rect).unwrap();
        let s = weyl_scale(&m, &ShiftFunction::constant(&f.grid, c), gamma).unwrap();
        let (a, b) = (crossing_length(&m, Orientation::LeftRight).unwrap().length, crossing_length(&s, Orientation::LeftRight).unwrap().length);
        prop_assert!((b / a - (0.5 * gamma * c).exp()).abs() < 1e-12);
    }
}
