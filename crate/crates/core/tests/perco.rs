use lfpp::kernel::{Kernel, KernelSpec};
use lfpp::perco::*;
use lfpp::sampling::{FieldSampler, SamplerKind};
use lfpp::synth::{FieldSample, Rect};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::{Arc, OnceLock};

fn sampler() -> &'static FieldSampler {
    static S: OnceLock<FieldSampler> = OnceLock::new();
    S.get_or_init(|| FieldSampler::new(Arc::new(Kernel::new(KernelSpec::default())), SamplerKind::Spectral))
}

fn random_lattice(rng: &mut ChaCha8Rng, k: u32, p_open: f64) -> SiteLattice {
    let m = sites_per_axis(k);
    let up: Vec<f64> = (0..m * m).map(|_| if rng.random_bool(p_open) { 0.5 } else { 2.0 }).collect();
    let right = vec![0.5; m * m];
    SiteLattice::from_lengths(k, up, right, 1.0).unwrap()
}

/// Exhaustive depth-first search over oriented open paths.
fn dfs_crossing(l: &SiteLattice) -> bool {
    let m = l.m;
    let mut seen = vec![false; m * m];
    let mut stack: Vec<(usize, usize)> = (0..m).filter(|&j| l.is_open(0, j)).map(|j| (0, j)).collect();
    while let Some((i, j)) = stack.pop() {
        if seen[l.index(i, j)] {
            continue;
        }
        seen[l.index(i, j)] = true;
        if i == m - 1 {
            return true;
        }
        for (a, b) in [(i + 1, j), (i, j + 1)] {
            if a < m && b < m && l.is_open(a, b) {
                stack.push((a, b));
            }
        }
    }
    false
}

fn valid_path(l: &SiteLattice, c: &OrientedCrossing) -> bool {
    let p = &c.path;
    !p.is_empty()
        && p[0].0 == 0
        && p[p.len() - 1].0 == l.m - 1
        && p.iter().all(|&(i, j)| l.is_open(i, j))
        && p.windows(2).all(|w| (w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1) || (w[1].0 == w[0].0 && w[1].1 == w[0].1 + 1))
}

#[test]
fn crossing_matches_dfs_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut found = 0;
    for t in 0..10_000 {
        let p = 0.4 + 0.4 * (t % 5) as f64 / 4.0;
        let l = random_lattice(&mut rng, 16, p);
        let c = oriented_crossing(&l);
        assert_eq!(c.exists, dfs_crossing(&l), "lattice {t}");
        if c.exists {
            found += 1;
            assert!(valid_path(&l, &c));
        } else {
            assert!(c.path.is_empty());
        }
    }
    assert!(found > 1000 && found < 9000, "{found}");
}

#[test]
fn site_geometry() {
    assert_eq!(sites_per_axis(2), 1);
    assert_eq!(sites_per_axis(3), 2);
    assert_eq!(sites_per_axis(4), 2);
    let (right, up) = site_strips(3, 1, 0, (0.0, 0.0));
    assert_eq!(right, Rect::new(2.0, 0.0, 3.0, 1.0));
    assert_eq!(up, Rect::new(2.0, 0.0, 3.0, 3.0));
    let (right, up) = site_strips(8, 1, 2, (0.0, 0.0));
    assert_eq!(right, Rect::new(2.0, 4.0, 5.0, 5.0));
    assert_eq!(up, Rect::new(2.0, 4.0, 3.0, 7.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn crossing_monotone_in_threshold(seed in any::<u64>(), k in 2u32..14, t1 in 0.2f64..3.0, dt in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = sites_per_axis(k);
        let up: Vec<f64> = (0..m * m).map(|_| rng.random_range(0.0..4.0)).collect();
        let right: Vec<f64> = (0..m * m).map(|_| rng.random_range(0.0..4.0)).collect();
        let low = SiteLattice::from_lengths(k, up, right, t1).unwrap();
        let high = low.with_threshold(t1 + dt);
        prop_assert!(low.open.iter().zip(&high.open).all(|(a, b)| !a || *b));
        prop_assert!(!oriented_crossing(&low).exists || oriented_crossing(&high).exists);
    }
}

fn shifted(field: &FieldSample, c: f64) -> FieldSample {
    FieldSample { values: field.values.iter().map(|v| v + c).collect(), ..field.clone() }
}

#[test]
fn classification_is_monotone_in_the_field() {
    let s = sampler();
    let field = s.sample(1, Rect::new(0.0, 0.0, 4.0, 4.0), 0.125, 3).unwrap();
    let base = classify_sites(&field, 0.5, 1, 2.0).unwrap();
    assert_eq!(base.m, 2);
    for c in [0.1, 0.5, 2.0] {
        let raised = classify_sites(&shifted(&field, c), 0.5, 1, 2.0).unwrap();
        assert!(base.open.iter().zip(&raised.open).all(|(a, b)| *a || !*b));
        for (u, v) in base.up.iter().zip(&raised.up) {
            assert!((v / u - (0.25 * c).exp()).abs() < 1e-9);
        }
    }
}

#[test]
fn gamma_zero_sites_are_deterministic() {
    let field = sampler().sample(1, Rect::new(0.0, 0.0, 5.0, 5.0), 0.125, 1).unwrap();
    let l = classify_sites(&field, 0.0, 1, 3.0).unwrap();
    assert_eq!(l.m, 3);
    // Full strips have crossing length 3; the clipped last column and row have length 1.
    assert!((l.right[l.index(0, 0)] - 3.0).abs() < 1e-9);
    assert!((l.right[l.index(2, 0)] - 1.0).abs() < 1e-9);
    assert!((l.up[l.index(0, 2)] - 1.0).abs() < 1e-9);
    assert!(l.open.iter().all(|&o| o));
    assert!(!l.with_threshold(2.9).is_open(0, 0));
}

#[test]
fn classification_rejects_bad_domains() {
    let s = sampler();
    let oblong = s.sample(1, Rect::new(0.0, 0.0, 4.0, 3.0), 0.125, 0).unwrap();
    assert!(classify_sites(&oblong, 0.5, 1, 1.0).is_err());
    let field = s.sample(1, Rect::new(0.0, 0.0, 4.0, 4.0), 0.125, 0).unwrap();
    assert!(classify_sites(&field, 0.5, 2, 1.0).is_err());
    assert!(classify_sites(&field, 0.5, 1, f64::NAN).is_err());
}

#[test]
fn small_sweep_respects_implication() {
    let plan = PercoPlan { samples: 24, threshold_samples: 200, h: 0.125, seed: 8 };
    let curve = perco_sweep(sampler(), 0.4, 1, &[2, 3, 4], 0.05, &plan).unwrap();
    assert_eq!(curve.rows.len(), 3);
    assert!(curve.implication_holds(), "{:?}", curve.rows);
    assert!(curve.open_check_passed, "{:?}", curve.open_probability);
    for r in &curve.rows {
        assert!(r.p_length_bound >= r.p_crossing - 1e-12);
        assert!(r.max_path_excess <= 0.0 || r.p_crossing == 0.0, "{r:?}");
    }
    let mut buf = Vec::new();
    curve.write_csv(&mut buf, 8, "h").unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), PERCO_CSV_HEADER.join(","));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn distant_sites_are_uncorrelated() {
    let plan = PercoPlan { samples: 150, threshold_samples: 200, h: 0.125, seed: 12 };
    let curve = perco_sweep_at(sampler(), 1.0, 1, &[5], 0.25, 2.2, &plan).unwrap();
    let lattices = &curve.lattices[0];
    let open = lattices.iter().filter(|l| l.is_open(0, 0)).count() as f64 / lattices.len() as f64;
    assert!(open > 0.1 && open < 0.9, "site (0,0) open fraction {open}");
    let (corr, se) = site_correlation(lattices, (0, 0), (2, 0)).unwrap();
    assert!(corr.abs() <= 3.0 * se, "corr {corr} se {se}");
}
