use lfpp::kernel::{Kernel, KernelSpec, Scale};
use lfpp::numerics::GlRule;
use lfpp::synth::*;
use proptest::prelude::*;
use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

fn kernel() -> Arc<Kernel> {
    Arc::new(Kernel::new(KernelSpec::default()))
}

fn grid(side: f64, n_max: u32) -> GridSpec {
    GridSpec::new(Rect::new(0.0, 0.0, side, side), 2f64.powi(-(n_max as i32) - 2), 0.25).unwrap()
}

fn store(k: &Arc<Kernel>, seed: u64, n_max: u32) -> NoiseStore {
    new_noise_store(k.clone(), seed, n_max, grid(2.0, n_max), NoiseConfig::default()).unwrap()
}

/// Mean and standard error of a sample.
fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// 5 × 5 lattice of points at spacing 0.4, far enough apart to be independent.
fn sparse_points(offset: (f64, f64)) -> Vec<(f64, f64)> {
    let mut p = Vec::new();
    for j in 0..5 {
        for i in 0..5 {
            p.push((0.1 + 0.4 * i as f64 + offset.0, 0.1 + 0.4 * j as f64 + offset.1));
        }
    }
    p
}

fn assert_within(label: &str, est: (f64, f64), target: f64, extra: f64) {
    let (m, se) = est;
    assert!((m - target).abs() <= 3.0 * se + extra, "{label}: estimate {m} ± {se}, target {target}");
}

#[test]
fn same_seed_gives_identical_fields() {
    let k = kernel();
    let g = grid(0.5, 3);
    let a = sample_band_field(&store(&k, 9, 3), 0, 3, &g).unwrap();
    let b = sample_band_field(&store(&k, 9, 3), 0, 3, &g).unwrap();
    assert_eq!(a.values, b.values);
    let c = sample_band_field(&store(&k, 10, 3), 0, 3, &g).unwrap();
    assert_ne!(a.values, c.values);
    assert!(a.values.iter().all(|v| v.is_finite()));
    let s1 = spectral_sample(&k, 0, 3, &g, 4).unwrap();
    let s2 = spectral_sample(&k, 0, 3, &g, 4).unwrap();
    assert_eq!(s1.values, s2.values);
    assert_eq!(s1.provenance.method, "spectral");
    assert_eq!(a.provenance.method, "white-noise");
}

#[test]
fn band_decomposition_is_exact() {
    let k = kernel();
    let st = store(&k, 3, 4);
    let g = grid(0.5, 4);
    let full = sample_band_field(&st, 0, 4, &g).unwrap();
    let low = sample_band_field(&st, 0, 1, &g).unwrap();
    let high = sample_band_field(&st, 2, 4, &g).unwrap();
    let sum = low.add(&high).unwrap();
    assert_eq!(sum.band, (0, 4));
    let mut octaves = vec![0.0; g.len()];
    for j in 0..=4 {
        let f = sample_band_field(&st, j, j, &g).unwrap();
        for (o, v) in octaves.iter_mut().zip(&f.values) {
            *o += v;
        }
    }
    for ((f, s), o) in full.values.iter().zip(&sum.values).zip(&octaves) {
        assert!((f - s).abs() < 1e-12);
        assert!((f - o).abs() < 1e-12);
    }
}

#[test]
fn band_errors() {
    let k = kernel();
    let st = store(&k, 1, 3);
    assert!(sample_band_field(&st, 2, 1, &grid(0.5, 3)).is_err());
    assert!(sample_band_field(&st, 0, 4, &grid(0.5, 3)).is_err());
    assert!(spectral_sample(&k, 3, 2, &grid(0.5, 3), 0).is_err());
    let thin = GridSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), 0.125, 0.1).unwrap();
    assert!(new_noise_store(k.clone(), 0, 3, thin, NoiseConfig::default()).is_err());
    let tight = NoiseConfig { max_cells_per_slab: 1e4, ..NoiseConfig::default() };
    let err = new_noise_store(k.clone(), 0, 6, grid(1.0, 6), tight).unwrap_err();
    assert!(matches!(err, lfpp::LfppError::Resource(_)), "{err}");
}

#[test]
fn noise_cells_have_white_noise_variance() {
    let k = kernel();
    let st = store(&k, 5, 4);
    let (j, s) = (2, 1);
    let mut sq = Vec::with_capacity(100_000);
    for cy in 0..250 {
        for cx in 0..400 {
            sq.push(st.noise(j, s, (cx, cy)).powi(2));
        }
    }
    let target = st.cell_spacing(j).powi(2) * st.slab(j, s).thickness();
    assert_within("cell variance", mean_se(&sq), target, 0.0);
}

#[test]
fn disjoint_blocks_are_uncorrelated() {
    let k = kernel();
    let per = store(&k, 0, 2).cells_per_block();
    let mut prod = Vec::with_capacity(10_000);
    let mut sq = 0.0;
    for seed in 0..10_000u64 {
        let st = store(&k, seed, 2);
        let a = st.noise(1, 0, (3, 3)) / st.cell_std(1, 0);
        let b = st.noise(1, 0, (per + 3, 3)) / st.cell_std(1, 0);
        prod.push(a * b);
        sq += a * a;
    }
    assert!((sq / 10_000.0 - 1.0).abs() < 0.05);
    assert_within("block correlation", mean_se(&prod), 0.0, 0.0);
}

#[test]
fn pointwise_variance_and_mean() {
    let k = kernel();
    let n = 6;
    let mut vals = Vec::new();
    for seed in 0..400 {
        vals.extend(synthesize_points(&store(&k, seed, n), 0, n, &sparse_points((0.013, 0.071))).unwrap());
    }
    let target = (n + 1) as f64 * LN_2;
    assert_within("mean", mean_se(&vals), 0.0, 0.0);
    let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
    assert_within("variance", mean_se(&sq), target, 0.02 * target);
}

/// Empirical covariance `E[φ(x) φ(x + (r, 0))]` of band `(m, n)` over independent pairs.
fn pair_covariance(k: &Arc<Kernel>, m: u32, n: u32, r: f64, replicas: u64) -> (f64, f64) {
    let base = sparse_points((0.037, 0.011));
    let mut pts = base.clone();
    pts.extend(base.iter().map(|&(x, y)| (x + r, y)));
    let mut prod = Vec::new();
    for seed in 0..replicas {
        let v = synthesize_points(&store(k, 1000 + seed, n), m, n, &pts).unwrap();
        prod.extend((0..base.len()).map(|i| v[i] * v[i + base.len()]));
    }
    mean_se(&prod)
}

#[test]
fn covariance_matches_kernel_at_lag() {
    let k = kernel();
    let target = k.band_covariance(0, 4, 0.05).unwrap();
    assert_within("lag 0.05", pair_covariance(&k, 0, 4, 0.05, 400), target, 0.0);
    assert_within("lag >= 2 r0", pair_covariance(&k, 0, 4, 0.3, 200), 0.0, 0.0);
}

#[test]
fn octaves_are_self_similar() {
    let k = kernel();
    let target = k.band_covariance(0, 0, 0.1).unwrap();
    for j in 0..=6 {
        let est = pair_covariance(&k, j, j, 0.1 * 2f64.powi(-(j as i32)), 200);
        assert_within(&format!("octave {j}"), est, target, 0.0);
    }
}

#[test]
fn disjoint_bands_are_uncorrelated() {
    let k = kernel();
    let pts = sparse_points((0.0, 0.0));
    let mut prod = Vec::new();
    for seed in 0..200 {
        let st = store(&k, seed, 5);
        let a = synthesize_points(&st, 0, 2, &pts).unwrap();
        let b = synthesize_points(&st, 3, 5, &pts).unwrap();
        prod.extend(a.iter().zip(&b).map(|(x, y)| x * y));
    }
    assert_within("band correlation", mean_se(&prod), 0.0, 0.0);
}

#[test]
fn block_resampling_is_local_and_idempotent() {
    let k = kernel();
    let n = 3;
    let g = GridSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), 2f64.powi(-5), 0.25).unwrap();
    let st = new_noise_store(k.clone(), 77, n, g, NoiseConfig::default()).unwrap();
    let before = sample_band_field(&st, 0, n, &g).unwrap();
    let (j, block) = (1, (1, 0));
    let after = sample_band_field(&st.resample_block(j, block, 4242).unwrap(), 0, n, &g).unwrap();
    let reach = NoiseStore::block_rect(j, block);
    let halo = 2.0 * k.r0() * 2f64.powi(-(j as i32));
    let mut changed_inside = 0;
    for (idx, (x, y)) in g.nodes().into_iter().enumerate() {
        let d = after.values[idx] - before.values[idx];
        if reach.distance_to(x, y) >= halo {
            assert_eq!(d, 0.0, "node ({x}, {y}) changed outside the halo");
        } else if d != 0.0 {
            changed_inside += 1;
        }
    }
    assert!(changed_inside > 100);
    let same = sample_band_field(&st.resample_block(j, block, 77).unwrap(), 0, n, &g).unwrap();
    assert_eq!(same.values, before.values);
    assert_eq!(st.replacement_log().len(), 0);
    assert!(st.resample_block(1, (40, 40), 1).is_err());
    assert!(st.resample_block(n + 1, (0, 0), 1).is_err());
}

#[test]
fn resampled_field_keeps_marginal_variance() {
    let k = kernel();
    let n = 3;
    let pts = [(0.55, 0.05), (0.85, 0.05), (0.55, 0.35), (0.85, 0.35)];
    let mut sq = Vec::new();
    for seed in 0..400u64 {
        let st = store(&k, seed, n).resample_block(1, (1, 0), seed + 1_000_000).unwrap();
        sq.extend(synthesize_points(&st, 0, n, &pts).unwrap().into_iter().map(|v| v * v));
    }
    let target = (n + 1) as f64 * LN_2;
    assert_within("resampled variance", mean_se(&sq), target, 0.02 * target);
}

#[test]
fn spectral_sampler_variance_and_covariance() {
    let k = kernel();
    let g = GridSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), 2f64.powi(-5), 0.0).unwrap();
    let mut sq = Vec::new();
    let mut lag = Vec::new();
    for seed in 0..400 {
        let f = spectral_sample(&k, 0, 6, &g, seed).unwrap();
        for j in (0..=32).step_by(8) {
            for i in (0..=24).step_by(8) {
                sq.push(f.at(i, j).powi(2));
                lag.push(f.at(i, j) * f.at(i + 2, j));
            }
        }
    }
    assert_within("spectral variance", mean_se(&sq), 7.0 * LN_2, 0.0);
    assert_within("spectral lag", mean_se(&lag), k.band_covariance(0, 6, 2.0 / 32.0).unwrap(), 0.0);
}

#[test]
fn spectral_sampler_reports_indefinite_embedding() {
    let k = kernel();
    let g = GridSpec::new(Rect::new(0.0, 0.0, 0.25, 0.25), 2f64.powi(-6), 0.0).unwrap();
    let strict = SpectralOptions { max_doublings: 0, clip_tolerance: -1.0, ..SpectralOptions::default() };
    match spectral_sample_with(&k, 0, 2, &g, 0, &strict) {
        Err(lfpp::LfppError::Sampler(msg)) => assert!(msg.contains("most negative eigenvalue"), "{msg}"),
        other => panic!("expected a sampler error, got {other:?}"),
    }
    assert!(spectral_sample_with(&k, 0, 2, &g, 0, &SpectralOptions { enlargement: 0.5, ..SpectralOptions::default() }).is_err());
}

#[test]
fn white_noise_and_spectral_covariances_agree() {
    let k = kernel();
    let (n, h) = (3u32, 2f64.powi(-6));
    let rows: Vec<(f64, f64)> = (0..9).map(|i| (0.05 + 0.6 * (i % 3) as f64, 0.05 + 0.6 * (i / 3) as f64)).collect();
    let mut pts = Vec::new();
    for &(x, y) in &rows {
        pts.extend((0..=20).map(|l| (x + l as f64 * h, y)));
    }
    let replicas = 150;
    let mut direct = vec![Vec::new(); 20];
    let mut spectral = vec![Vec::new(); 20];
    let g = GridSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), h, 0.0).unwrap();
    for seed in 0..replicas {
        let v = synthesize_points(&store(&k, seed, n), 0, n, &pts).unwrap();
        let f = spectral_sample(&k, 0, n, &g, seed).unwrap();
        for l in 1..=20 {
            let d = (0..rows.len()).map(|r| v[r * 21] * v[r * 21 + l]).sum::<f64>() / rows.len() as f64;
            direct[l - 1].push(d);
            let mut acc = 0.0;
            for j in (0..=64).step_by(16) {
                for i in (0..=40).step_by(20) {
                    acc += f.at(i, j) * f.at(i + l, j);
                }
            }
            spectral[l - 1].push(acc / 15.0);
        }
    }
    for l in 0..20 {
        let (a, sa) = mean_se(&direct[l]);
        let (b, sb) = mean_se(&spectral[l]);
        assert!((a - b).abs() <= 3.0 * sa.hypot(sb), "lag {}: direct {a} ± {sa}, spectral {b} ± {sb}", l + 1);
    }
}

fn centered_grid(half: f64, h: f64) -> GridSpec {
    GridSpec::new(Rect::new(-half, -half, half, half), h, 0.25).unwrap()
}

/// `2π ∫ C(ρ) b(ρ) ρ dρ` for the unit mollifier bump of radius `radius`.
fn radial_oracle(c: impl Fn(f64) -> f64, radius: f64) -> f64 {
    let bump = |rho: f64| {
        let s2 = (rho / radius).powi(2);
        if s2 < 1.0 {
            (1.0 - 1.0 / (1.0 - s2)).exp()
        } else {
            0.0
        }
    };
    2.0 * PI * GlRule::new(16).composite(0.0, radius, 512, |rho| c(rho) * bump(rho) * rho)
}

#[test]
fn cameron_martin_shift_matches_quadrature() {
    let k = kernel();
    let g = centered_grid(0.375, 2f64.powi(-10));
    let radius = 0.25;
    let bump = bump_grid_function(&g, (0.0, 0.0), radius, 1.0);
    let (ic, jc) = g.locate(0.0, 0.0).unwrap();
    let f6 = cameron_martin_shift(&k, &bump, Scale::Finite(6), &g).unwrap();
    let oracle6 = radial_oracle(|r| k.band_covariance(0, 6, r).unwrap(), radius);
    assert!((f6.values[g.index(ic, jc)] - oracle6).abs() < 1e-6, "{} vs {oracle6}", f6.values[g.index(ic, jc)]);

    let finf = cameron_martin_shift(&k, &bump, Scale::Infinite, &g).unwrap();
    let oracle_inf = radial_oracle(|r| if r > 0.0 { k.band_covariance(0, Scale::Infinite, r).unwrap() } else { 0.0 }, radius);
    assert!((finf.values[g.index(ic, jc)] - oracle_inf).abs() < 1e-4, "{} vs {oracle_inf}", finf.values[g.index(ic, jc)]);

    let f4 = cameron_martin_shift(&k, &bump, Scale::Finite(4), &g).unwrap();
    let gap = f4.values.iter().zip(&f6.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let bound = k.band_l1_norm(5, Scale::Infinite).unwrap();
    assert!(gap > 0.0 && gap <= bound, "gap {gap} bound {bound}");
}

#[test]
fn cameron_martin_shift_contracts() {
    let k = kernel();
    let g = centered_grid(0.5, 2f64.powi(-6));
    let zero = cameron_martin_shift(&k, &vec![0.0; g.len()], Scale::Finite(3), &g).unwrap();
    assert!(zero.values.iter().all(|&v| v == 0.0));
    let mut ring = vec![0.0; g.len()];
    ring[0] = 1.0;
    assert!(cameron_martin_shift(&k, &ring, Scale::Finite(3), &g).is_err());
    assert!(cameron_martin_shift(&k, &[0.0; 3], Scale::Finite(3), &g).is_err());

    let st = new_noise_store(k.clone(), 2, 4, g, NoiseConfig::default()).unwrap();
    let field = sample_band_field(&st, 0, 4, &g).unwrap();
    assert_eq!(shift_field(&field, &ShiftFunction::zero(&g)).unwrap().values, field.values);
    let bump = bump_grid_function(&g, (0.1, -0.1), 0.2, 3.0);
    let f = cameron_martin_shift(&k, &bump, Scale::Finite(4), &g).unwrap();
    let there = shift_field(&field, &f).unwrap();
    assert_eq!(there.provenance.shifts.len(), 1);
    let back = shift_field(&there, &f.scaled(-1.0)).unwrap();
    for (a, b) in back.values.iter().zip(&field.values) {
        assert!((a - b).abs() < 1e-12);
    }
    let low = sample_band_field(&st, 0, 1, &g).unwrap();
    let high = sample_band_field(&st, 2, 4, &g).unwrap();
    let left = shift_field(&low.add(&high).unwrap(), &f).unwrap();
    let right = low.add(&shift_field(&high, &f).unwrap()).unwrap();
    for (a, b) in left.values.iter().zip(&right.values) {
        assert!((a - b).abs() < 1e-12);
    }
    let other = centered_grid(0.25, 2f64.powi(-6));
    assert!(shift_field(&field, &ShiftFunction::zero(&other)).is_err());
    let ip = grid_inner_product(&bump, &bump, &g).unwrap();
    assert!(ip > 0.0);
}

#[test]
fn binary_round_trip() {
    let k = kernel();
    let g = grid(0.5, 3);
    let field = sample_band_field(&store(&k, 8, 3), 1, 3, &g).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.bin");
    write_field(&field, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], b"LFPPGRID");
    assert_eq!(bytes.len(), 32 + 8 * g.len());
    let back = read_field(&path).unwrap();
    assert_eq!(back, field);
    let sidecar = std::fs::read_to_string(dir.path().join("field.json")).unwrap();
    assert!(sidecar.contains(&k.spec().hash()));
    std::fs::write(&path, b"NOTAGRID").unwrap();
    assert!(read_field(&path).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn resampling_only_touches_the_halo(bx in 0i64..4, by in 0i64..4, seed in any::<u64>()) {
        let k = kernel();
        let g = GridSpec::new(Rect::new(0.0, 0.0, 1.0, 1.0), 0.0625, 0.25).unwrap();
        let st = new_noise_store(k.clone(), 11, 2, g, NoiseConfig::default()).unwrap();
        let j = 2;
        let fresh = st.resample_block(j, (bx, by), seed).unwrap();
        let a = sample_band_field(&st, 0, 2, &g).unwrap();
        let b = sample_band_field(&fresh, 0, 2, &g).unwrap();
        let rect = NoiseStore::block_rect(j, (bx, by));
        let halo = 2.0 * k.r0() * 2f64.powi(-(j as i32));
        for (idx, (x, y)) in g.nodes().into_iter().enumerate() {
            if rect.distance_to(x, y) >= halo {
                prop_assert_eq!(a.values[idx], b.values[idx]);
            }
        }
    }

    #[test]
    fn noise_is_a_pure_function_of_its_index(j in 1u32..4, s in 0u32..4, cx in -100i64..100, cy in -100i64..100) {
        let k = kernel();
        let a = store(&k, 3, 3).noise(j, s, (cx, cy));
        let b = store(&k, 3, 3).resample_block(0, (1, 1), 1).unwrap().noise(j, s, (cx, cy));
        prop_assert_eq!(a, b);
    }
}
