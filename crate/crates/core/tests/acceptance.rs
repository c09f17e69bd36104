//! Acceptance suite: one PASS/FAIL line per primary criterion.
//!
//! Runs at a reduced desk scale (smaller grids, fewer samples) so that the
//! whole suite finishes in minutes on one core. Tolerances are the documented
//! ones. Exits nonzero when any criterion fails.

#[path = "oracles/domination.rs"]
mod domination;
#[path = "oracles/shortest_path.rs"]
mod shortest_path;

use domination::{oracle_domination, MassOracle};
use lfpp::expcli::checks::{covariance_scaling, domination_grid, domination_reports, sampler_agreement, spectral_formulas, variance_law, CheckRow};
use lfpp::expcli::{run_experiment, validate_config, ExperimentKind, RunManifest};
use lfpp::kernel::{make_bump, Kernel, KernelSpec, ProfileId};
use lfpp::metric::{crossing_length, point_distance, sides, Orientation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use shortest_path::{bellman_ford, random_metric};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

type Outcome = Result<(bool, String), String>;

const SEED: u64 = 20241015;

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Runs an experiment and returns its manifest and summary.
    fn run(&self, name: &str, kind: ExperimentKind, toml: &str) -> Result<(RunManifest, Value), String> {
        let config = validate_config(&format!("seed = {SEED}\n{toml}"), Some(kind)).map_err(|e| e.to_string())?;
        let dir = self.path(name);
        let manifest = run_experiment(&config, &dir).map_err(|e| e.to_string())?;
        let summary = std::fs::read_to_string(dir.join("summary.json")).map_err(|e| e.to_string())?;
        Ok((manifest, serde_json::from_str(&summary).map_err(|e| e.to_string())?))
    }
}

/// Verdicts of a summary whose name starts with one of `prefixes`.
fn verdicts<'a>(summary: &'a Value, prefixes: &[&str]) -> Vec<&'a Value> {
    summary["verdicts"].as_array().map(|v| v.iter().filter(|x| prefixes.iter().any(|p| x["name"].as_str().unwrap_or("").starts_with(p))).collect()).unwrap_or_default()
}

fn summarize(vs: &[&Value]) -> (bool, String) {
    let failed: Vec<String> =
        vs.iter().filter(|v| v["passed"] != true).map(|v| format!("{} ({})", v["name"].as_str().unwrap_or("?"), v["detail"].as_str().unwrap_or(""))).collect();
    if vs.is_empty() {
        return (false, "no verdicts found".into());
    }
    if failed.is_empty() {
        (true, format!("{} verdicts passed", vs.len()))
    } else {
        (false, format!("{} of {} failed: {}", failed.len(), vs.len(), failed.join("; ")))
    }
}

fn rows_outcome(rows: &[CheckRow]) -> (bool, String) {
    let bad: Vec<&CheckRow> = rows.iter().filter(|r| !r.passed).collect();
    let worst = rows.iter().map(|r| if r.se > 0.0 { (r.estimate - r.target).abs() / r.se } else { 0.0 }).fold(0.0, f64::max);
    let detail = format!("{} of {} comparisons outside tolerance, max |z| = {worst:.2}", bad.len(), rows.len());
    if bad.is_empty() {
        (true, detail)
    } else {
        let list: Vec<String> = bad.iter().map(|r| format!("n={} p={:.4} est={:.5} se={:.5} target={:.5}", r.n, r.parameter, r.estimate, r.se, r.target)).collect();
        (false, format!("{detail}: {}", list.join("; ")))
    }
}

fn kernel() -> Arc<Kernel> {
    Arc::new(Kernel::new(KernelSpec::default()))
}

fn variance() -> Outcome {
    let ns: Vec<u32> = (0..=6).collect();
    let rows = variance_law(&kernel(), &ns, 400, SEED).map_err(|e| e.to_string())?;
    Ok(rows_outcome(&rows))
}

fn covariance() -> Outcome {
    let octaves: Vec<u32> = (0..=5).collect();
    let rows = covariance_scaling(&kernel(), &octaves, 20, 400, SEED).map_err(|e| e.to_string())?;
    Ok(rows_outcome(&rows))
}

fn samplers() -> Outcome {
    let rows = sampler_agreement(&kernel(), 4, 1.0 / 64.0, 20, 400, SEED).map_err(|e| e.to_string())?;
    Ok(rows_outcome(&rows))
}

fn crossing_toml(gamma: f64) -> String {
    format!("[field]\ngamma = {gamma}\nn_min = 1\nn_max = 3\ngrid = 32\n[samples]\ncount = 200\n[crossing]\nidentity_samples = 40\n")
}

fn identities(ws: &Workspace) -> Outcome {
    let prefixes = ["nested_identities", "ik_lower_bound", "diameter_dominates", "chaining_bound", "variance_quantile"];
    let mut all = Vec::new();
    for gamma in [0.0, 0.2, 0.3] {
        let (_, summary) = ws.run(&format!("crossing-{gamma}"), ExperimentKind::Crossing, &crossing_toml(gamma))?;
        all.push(summary);
    }
    let vs: Vec<&Value> = all.iter().flat_map(|s| verdicts(s, &prefixes)).collect();
    Ok(summarize(&vs))
}

fn weyl(ws: &Workspace) -> Outcome {
    let (_, summary) = ws.run("weyl", ExperimentKind::Weyl, "[field]\ngamma = 0.3\nn_min = 0\nn_max = 3\ngrid = 32\n[samples]\ncount = 40\n")?;
    Ok(summarize(&verdicts(&summary, &["weyl_"])))
}

fn shortest_paths() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0;
    for _ in 0..200 {
        let m = random_metric(&mut rng, 6, 6);
        for orientation in [Orientation::LeftRight, Orientation::BottomTop] {
            let c = crossing_length(&m, orientation).map_err(|e| e.to_string())?;
            let (src, dst) = sides(&m, orientation);
            let bf = bellman_ford(&m, &src);
            mismatches += usize::from(c.length != dst.iter().map(|&v| bf[v]).fold(f64::INFINITY, f64::min));
        }
        let (a, b) = ((rng.random_range(0..6), rng.random_range(0..6)), (rng.random_range(0..6), rng.random_range(0..6)));
        let bf = bellman_ford(&m, &[m.index(a.0, a.1)]);
        mismatches += usize::from(point_distance(&m, a, b).map_err(|e| e.to_string())? != bf[m.index(b.0, b.1)]);
    }
    Ok((mismatches == 0, format!("{mismatches} mismatches over 200 instances (600 queries)")))
}

/// Shared inequality-suite runs at two values of gamma.
fn rsw_runs(ws: &Workspace) -> Result<Vec<Value>, String> {
    [0.2, 0.3]
        .iter()
        .map(|g| {
            let toml = format!("[field]\ngamma = {g}\nn_min = 1\nn_max = 3\ngrid = 32\n[samples]\ncount = 1000\n");
            ws.run(&format!("rsw-{g}"), ExperimentKind::Rsw, &toml).map(|r| r.1)
        })
        .collect()
}

fn moment_line(runs: &[Value]) -> Outcome {
    let vs: Vec<&Value> = runs.iter().flat_map(|s| verdicts(s, &["inequality_e", "inequality_f"])).collect();
    Ok(summarize(&vs))
}

fn product_fkg(runs: &[Value]) -> Outcome {
    let vs: Vec<&Value> = runs.iter().flat_map(|s| verdicts(s, &["inequality_b", "inequality_d"])).collect();
    Ok(summarize(&vs))
}

fn efron_stein(ws: &Workspace) -> Outcome {
    let toml = "[field]\ngamma = 0.2\nn_min = 4\nn_max = 4\ngrid = 64\n[samples]\ncount = 100\n[efron_stein]\nblocks_per_scale = 2\n";
    let (_, summary) = ws.run("efron-stein", ExperimentKind::EfronStein, toml)?;
    Ok(summarize(&verdicts(&summary, &["efron_stein"])))
}

fn reweighting(ws: &Workspace) -> Outcome {
    let toml = "[field]\ngamma = 0.2\nn_min = 4\nn_max = 4\ngrid = 64\n[samples]\ncount = 2000\n";
    let (_, summary) = ws.run("reweight", ExperimentKind::Reweight, toml)?;
    Ok(summarize(&verdicts(&summary, &["reweighting_", "shift_decay"])))
}

fn percolation(ws: &Workspace) -> Outcome {
    let toml = "[field]\ngamma = 0.2\nn_min = 2\nn_max = 2\ngrid = 16\n[samples]\ncount = 200\n[perco]\nk_values = [2, 3, 4, 6]\nthreshold_samples = 400\n";
    let (_, summary) = ws.run("perco", ExperimentKind::Perco, toml)?;
    Ok(summarize(&verdicts(&summary, &["perco_"])))
}

fn spectral() -> Outcome {
    let k1 = Kernel::new(KernelSpec::default());
    let k2 = Kernel::new(make_bump(0.125, ProfileId::Mollifier { sharpness: 2.0 }).map_err(|e| e.to_string())?);
    let formulas = spectral_formulas(&k1).map_err(|e| e.to_string())?;
    let (formulas_ok, formulas_detail) = rows_outcome(&formulas);
    let (o1, o2) = (MassOracle::new(k1.spec()), MassOracle::new(k2.spec()));
    let mut mismatches = 0;
    let mut points = 0;
    for (a, b, oa, ob) in [(&k1, &k2, &o1, &o2), (&k2, &k1, &o2, &o1)] {
        for n in [2, 4] {
            let grid = domination_grid(a.r0(), n, 200);
            for report in domination_reports(a, b, n, 2, &grid).map_err(|e| e.to_string())? {
                let oracle = oracle_domination(oa, ob, n, 2, report.psi_gap, &grid);
                mismatches += report.points.iter().zip(&oracle).filter(|(p, o)| p.violated != o.2).count();
                points += oracle.len();
            }
        }
    }
    let ok = formulas_ok && mismatches == 0;
    Ok((ok, format!("formulas: {formulas_detail}; domination: {mismatches} verdict mismatches over {points} frequencies")))
}

fn csv_files(dir: &Path, manifest: &RunManifest) -> Result<Vec<(String, Vec<u8>)>, String> {
    manifest.files.keys().filter(|f| f.ends_with(".csv")).map(|f| std::fs::read(dir.join(f)).map(|b| (f.clone(), b)).map_err(|e| e.to_string())).collect()
}

fn determinism(ws: &Workspace) -> Outcome {
    let cases = [
        (ExperimentKind::Crossing, crossing_toml(0.3)),
        (ExperimentKind::Perco, "[field]\ngamma = 0.2\nn_min = 1\nn_max = 1\ngrid = 8\n[samples]\ncount = 200\n[perco]\nk_values = [2, 3]\nthreshold_samples = 200\n".to_string()),
        (ExperimentKind::FieldCheck, "[field]\nn_min = 0\nn_max = 2\ngrid = 32\n[samples]\ncount = 50\n[field_check]\nmax_octave = 1\nlags = 5\n".to_string()),
    ];
    let mut compared = 0;
    for (kind, toml) in cases {
        let (a, b) = (format!("det-{kind}-a"), format!("det-{kind}-b"));
        let (ma, _) = ws.run(&a, kind, &toml)?;
        let (mb, _) = ws.run(&b, kind, &toml)?;
        let (fa, fb) = (csv_files(&ws.path(&a), &ma)?, csv_files(&ws.path(&b), &mb)?);
        if fa != fb {
            return Ok((false, format!("{kind}: CSV bytes differ between identical runs")));
        }
        compared += fa.len();
    }
    Ok((true, format!("{compared} CSV files byte-identical across reruns")))
}

fn report(name: &str, failures: &mut usize, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    if !passed {
        *failures += 1;
    }
    println!("{} {name}: {detail} [{:.1}s]", if passed { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
}

fn main() {
    let ws = Workspace { dir: tempfile::tempdir().expect("temporary directory") };
    let mut failures = 0;
    report("variance law", &mut failures, variance);
    report("covariance scaling", &mut failures, covariance);
    report("sampler cross-validation", &mut failures, samplers);
    report("exact lattice identities", &mut failures, || identities(&ws));
    report("discrete Weyl identity", &mut failures, || weyl(&ws));
    report("shortest-path oracle", &mut failures, shortest_paths);
    let start = Instant::now();
    let runs = rsw_runs(&ws);
    println!("(inequality-suite runs shared by the next two criteria took {:.1}s)", start.elapsed().as_secs_f64());
    report("moment-method and straight-line bounds", &mut failures, || moment_line(runs.as_ref().map_err(Clone::clone)?));
    report("product bound and positive association", &mut failures, || product_fkg(runs.as_ref().map_err(Clone::clone)?));
    report("Efron-Stein", &mut failures, || efron_stein(&ws));
    report("Radon-Nikodym reweighting and shift decay", &mut failures, || reweighting(&ws));
    report("percolation", &mut failures, || percolation(&ws));
    report("spectral formulas and domination oracle", &mut failures, spectral);
    report("determinism", &mut failures, || determinism(&ws));
    println!("{failures} criteria failed");
    if failures > 0 {
        std::process::exit(1);
    }
}
