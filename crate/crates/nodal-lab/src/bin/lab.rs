//! `lab` — command-line front end for the spectral laboratory.
//!
//! Exit codes: 0 success, 1 acceptance-check failure, 2 configuration
//! error, 3 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nodal_lab::lab::{cmd_nodal, cmd_spectrum, cmd_sweep, cmd_validate, Config, RunContext};

#[derive(Parser)]
#[command(name = "lab", version, about = "planar Dirichlet spectral laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for results.csv, manifest.json and SVG files.
    #[arg(long, global = true, default_value = "lab_out")]
    out: PathBuf,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Override the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print the run manifest as JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured domain's lowest eigenvalues.
    Spectrum,
    /// Extract and classify one eigenfunction's nodal set.
    Nodal,
    /// Run a named experiment recipe over a parameter family.
    Sweep,
    /// Run the full acceptance suite.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }

    let cfg = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("lab: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let ctx = RunContext {
        out_dir: cli.out.clone(),
        jobs: cli.jobs,
        seed: cli.seed,
        json: cli.json,
    };

    let result = match cli.command {
        Command::Spectrum => cmd_spectrum(&cfg, &ctx),
        Command::Nodal => cmd_nodal(&cfg, &ctx),
        Command::Sweep => cmd_sweep(&cfg, &ctx),
        Command::Validate => cmd_validate(&cfg, &ctx),
    };

    match result {
        Ok(manifest) => {
            if cli.json {
                match serde_json::to_string_pretty(&manifest) {
                    Ok(text) => println!("{text}"),
                    Err(e) => {
                        eprintln!("lab: manifest serialization failed: {e}");
                        return ExitCode::from(3);
                    }
                }
            } else {
                for c in &manifest.checks {
                    println!(
                        "{} {}: {}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.detail
                    );
                }
                println!(
                    "{}: wrote {} to {}",
                    manifest.command,
                    manifest.outputs.join(", "),
                    cli.out.display()
                );
            }
            if manifest.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
