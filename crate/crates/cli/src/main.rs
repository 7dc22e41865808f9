use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use manicov::pointcloud::save_csv;
use manicov_cli::config::parse_overrides;
use manicov_cli::{run, CliError, ExperimentConfig};

/// Local-covariance manifold experiments and tools.
///
/// Experiments: spiral-geodesic, geodesic-rates, s1-eigenvalues,
/// alpha-sensitivity, eig-constant, flat-calibration.
/// Tools: sample, covgeo, eig-dist, lle, ldr-lle, dm.
///
/// Settings come from built-in defaults, then `--config <file>` (flat
/// key=value lines), then `--key value` overrides. Results go to
/// `<output_dir>/<table>.csv`.
#[derive(Parser)]
#[command(name = "manicov", version)]
struct Cli {
    /// Experiment or tool to run.
    command: String,
    /// `--config <file>` and `--key value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
    settings: Vec<String>,
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let overrides = parse_overrides(&cli.settings)?;
    let cfg = ExperimentConfig::resolve(&cli.command, &overrides)?;
    let start = Instant::now();
    let out = run(&cfg)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.clone(),
        source,
    })?;
    for table in &out.tables {
        println!("{}", table.save(dir)?.display());
    }
    for (name, cloud) in &out.clouds {
        let path = dir.join(format!("{name}.csv"));
        save_csv(cloud, &path).map_err(|e| CliError::Output {
            path: path.clone(),
            source: match e {
                manicov::Error::Io(io) => io,
                other => std::io::Error::other(other.to_string()),
            },
        })?;
        println!("{}", path.display());
    }
    // Timing stays out of the result files so reruns compare equal.
    eprintln!("{} finished in {:.2} s", cfg.command.name(), start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code())
        }
    }
}
