use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use electrodiff::backlund::{DEFAULT_DEPTH_CAP, DEPTH_CAP_ENV};
use electrodiff::verify::{DEFAULT_GRID_POINTS, DEFAULT_TOL};
use electrodiff_cli::{execute, Failure, ParamSource, RunManifest, Task};

const ENV_HELP: &str = "\
Environment:
  ELECTRODIFF_DEPTH_CAP  Largest |n| a ladder may be iterated to (default 16).
                         Overridden by --depth-cap.

Exit codes: 0 ok or pass, 1 verification or statistical failure, 2 bad input,
3 depth-cap violation, 4 evaluation error.";

/// Exact-solution ladders for steady two-ion electrodiffusion.
#[derive(Debug, Parser)]
#[command(name = "electrodiff", version, after_help = ENV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON parameter file (keys z, e, kT, eps, D_plus, D_minus, delta, c0, c1).
    #[arg(long, value_name = "FILE", conflicts_with = "preset")]
    params: Option<PathBuf>,
    /// Named parameter set: canonical or aqueous-cgs. Defaults to canonical.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Write the output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write the run manifest to this file.
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
    /// Largest ladder index magnitude allowed.
    #[arg(long, env = DEPTH_CAP_ENV, default_value_t = DEFAULT_DEPTH_CAP)]
    depth_cap: u32,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Flux and current table for ladder members n-min..=n-max (JSON).
    Ladder {
        #[arg(long, allow_negative_numbers = true)]
        n_min: i32,
        #[arg(long, allow_negative_numbers = true)]
        n_max: i32,
        #[command(flatten)]
        common: Common,
    },
    /// Concentration and field profiles of member n on a uniform grid (CSV).
    Profiles {
        #[arg(long, allow_negative_numbers = true)]
        n: i32,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Residuals of the governing equations for member n (JSON; exit 1 on failure).
    Verify {
        #[arg(long, allow_negative_numbers = true)]
        n: i32,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Quantized charge transfers per ladder member, in units of ze (JSON).
    Quantize {
        #[arg(long, allow_negative_numbers = true)]
        n_min: i32,
        #[arg(long, allow_negative_numbers = true)]
        n_max: i32,
        #[command(flatten)]
        common: Common,
    },
    /// Random-walk estimate of the seed flux (JSON; exit 1 if |z| >= 4).
    Simulate {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Simulated time per batch in crossing times, burn-in included.
        #[arg(long, default_value_t = 25.0)]
        duration: f64,
        #[arg(long, default_value_t = 20)]
        cells: u32,
        #[arg(long, default_value_t = 10)]
        batches: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run a saved manifest.
    Replay {
        manifest: PathBuf,
        /// Write here instead of the manifest's output path.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn write_file(path: &Path, text: &str, what: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::bad_input(format!("{what} {}: {e}", path.display())))
}

fn build(task: Task, common: Common, rng_seed: Option<u64>) -> Result<(RunManifest, Option<PathBuf>), Failure> {
    let source = ParamSource::resolve(common.params, common.preset.as_deref())?;
    let m = RunManifest::new(task, &source, common.depth_cap, common.out, rng_seed);
    Ok((m, common.manifest))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut out_override = None;
    let (manifest, manifest_path) = match cli.command {
        Command::Ladder { n_min, n_max, common } => build(Task::Ladder { n_min, n_max }, common, None)?,
        Command::Profiles { n, grid, common } => build(Task::Profiles { n, grid }, common, None)?,
        Command::Verify { n, grid, tol, common } => build(Task::Verify { n, grid, tol }, common, None)?,
        Command::Quantize { n_min, n_max, common } => build(Task::Quantize { n_min, n_max }, common, None)?,
        Command::Simulate {
            seed,
            duration,
            cells,
            batches,
            common,
        } => build(
            Task::Simulate {
                duration,
                cells,
                batches,
            },
            common,
            Some(seed),
        )?,
        Command::Replay { manifest, out } => {
            let text = std::fs::read_to_string(&manifest)
                .map_err(|e| Failure::bad_input(format!("{}: {e}", manifest.display())))?;
            out_override = out;
            (RunManifest::from_json_str(&text)?, None)
        }
    };

    eprintln!("manifest: {}", manifest.to_json_line());
    if let Some(path) = &manifest_path {
        write_file(path, &format!("{}\n", manifest.to_json_line()), "--manifest")?;
    }
    let output = execute(&manifest)?;
    match out_override.as_ref().or(manifest.out.as_ref()) {
        Some(path) => write_file(path, &output.text, "--out")?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(output.text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::bad_input(format!("stdout: {e}")))?;
        }
    }
    Ok(output.code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
