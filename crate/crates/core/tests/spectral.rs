//! Spectral-domination report against the dense-quadrature oracle.

#[path = "oracles/domination.rs"]
mod domination;

use domination::{khat, oracle_domination, MassOracle};
use lfpp::expcli::checks::{domination_grid, domination_reports};
use lfpp::kernel::{make_bump, Kernel, ProfileId};

fn mollifier(r0: f64, sharpness: f64) -> Kernel {
    Kernel::new(make_bump(r0, ProfileId::Mollifier { sharpness }).unwrap())
}

#[test]
fn oracle_transform_matches_table() {
    let k = mollifier(0.125, 1.0);
    for u in [0.0, 1.3, 17.0, 80.0, 200.0] {
        assert!((khat(k.spec(), u) - k.hankel(u)).abs() < 1e-8, "u = {u}");
    }
}

#[test]
fn domination_reports_reproduce_oracle_verdicts() {
    let kernels = [mollifier(0.125, 1.0), mollifier(0.125, 2.0), mollifier(0.0625, 1.0)];
    let oracles: Vec<MassOracle> = kernels.iter().map(|k| MassOracle::new(k.spec())).collect();
    let mut violated = 0;
    let mut total = 0;
    for (a, b) in [(0, 1), (1, 0), (0, 2)] {
        let (k1, k2, o1, o2) = (&kernels[a], &kernels[b], &oracles[a], &oracles[b]);
        let r1 = k1.r0();
        for (n, gap) in [(2, 1), (3, 2)] {
            let grid = domination_grid(r1, n, 120);
            for report in domination_reports(k1, k2, n, gap, &grid).unwrap() {
                let oracle = oracle_domination(o1, o2, n, gap, report.psi_gap, &grid);
                for (p, (lhs, rhs, v)) in report.points.iter().zip(oracle) {
                    assert!((p.lhs - lhs).abs() < 1e-9 && (p.rhs - rhs).abs() < 1e-9, "{p:?} vs ({lhs}, {rhs})");
                    assert_eq!(p.violated, v, "pair {a}/{b}, n {n}, {p:?} vs ({lhs}, {rhs})");
                    violated += usize::from(v);
                    total += 1;
                }
            }
        }
    }
    eprintln!("{violated} of {total} oracle points violated");
    assert!(violated > 0 && violated < total);
}
