use clap::Parser;
use lfpp::expcli::{run_experiment, validate_config, ExperimentKind};
use std::path::PathBuf;
use std::process::ExitCode;

/// Runs one Liouville first-passage-percolation experiment.
#[derive(Debug, Parser)]
#[command(name = "lfpp", version)]
struct Cli {
    /// Experiment kind.
    kind: ExperimentKind,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the one in the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Exit nonzero when any statistical verdict fails.
    #[arg(long)]
    strict: bool,
    /// Number of worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot start {k} workers: {e}");
            return ExitCode::from(2);
        }
    }
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match validate_config(&text, Some(cli.kind)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    println!("# effective configuration (hash {})\n{}", config.config_hash(), config.to_toml());
    match run_experiment(&config, &cli.out) {
        Ok(manifest) => {
            println!("wrote {} artifacts to {} in {:.1}s", manifest.files.len(), cli.out.display(), manifest.wall_clock_seconds);
            if manifest.all_passed {
                println!("all verdicts passed");
            } else {
                println!("failed verdicts: {}", manifest.failed.join(", "));
            }
            if cli.strict && !manifest.all_passed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
