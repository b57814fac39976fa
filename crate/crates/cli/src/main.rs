use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use weakprobe_cli::config::{ConfigError, Overrides, SweepConfig};
use weakprobe_cli::golden::{run_checks, Status};
use weakprobe_cli::recipes::{figure_sweeps, Figure, TemperatureRange, DEFAULT_T_POINTS, DEFAULT_T_STOP, FIG1_TRIALS};
use weakprobe_cli::sweep::{run_all, write_csv, Row};

const EXIT_GOLDEN: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "weakprobe", version, about = "Post-selected weak measurement with a thermal Gaussian probe")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// TOML sweep configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true)]
    mass: Option<f64>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Selects the qubit family `cos(phi)|0> + i sin(phi)|1>`.
    #[arg(long, global = true)]
    phi: Option<f64>,
    #[arg(long, global = true)]
    n_trials: Option<u64>,
    #[arg(long, global = true)]
    pmax: Option<f64>,
    #[arg(long, global = true)]
    npoints: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Range {
    #[arg(long, default_value_t = 0.0)]
    t_start: f64,
    #[arg(long, default_value_t = DEFAULT_T_STOP)]
    t_stop: f64,
    #[arg(long, default_value_t = DEFAULT_T_POINTS)]
    t_points: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by --config and the flags.
    Sweep,
    /// Reproduce the reference values and report pass/fail.
    SpotCheck,
    /// SNR against temperature for every coupling and selection angle.
    Fig1(Range),
    /// Effective QFI against temperature for every coupling and selection angle.
    Fig2(Range),
    /// Print the default configuration as TOML.
    DumpDefaults,
}

fn overrides(f: &Flags) -> Overrides {
    Overrides {
        sigma: f.sigma,
        mass: f.mass,
        temperature: f.temperature,
        theta: f.theta,
        phi: f.phi,
        n_trials: f.n_trials,
        p_max: f.pmax,
        n_points: f.npoints,
        output: f.output.clone(),
    }
}

fn load(flags: &Flags, base: SweepConfig) -> Result<SweepConfig, ConfigError> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            SweepConfig::from_toml(&text)?
        }
        None => base,
    };
    cfg.apply(&overrides(flags));
    cfg.validate()?;
    Ok(cfg)
}

fn write_rows(path: &Path, rows: &[Row]) -> Result<(), ConfigError> {
    let file = File::create(path).map_err(|e| ConfigError(format!("cannot create {}: {e}", path.display())))?;
    write_csv(BufWriter::new(file), rows).map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))
}

fn run_sweeps(sweeps: &[(String, SweepConfig)], jobs: usize, path: &Path) -> Result<ExitCode, ConfigError> {
    let rows = run_all(sweeps, jobs).map_err(|e| ConfigError(format!("cannot start thread pool: {e}")))?;
    write_rows(path, &rows)?;
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    eprintln!("wrote {} rows to {}", rows.len(), path.display());
    if failed > 0 {
        eprintln!("{failed} point(s) failed; see the error column");
        return Ok(ExitCode::from(EXIT_NUMERIC));
    }
    Ok(ExitCode::SUCCESS)
}

fn figure(flags: &Flags, range: &Range, fig: Figure, default_output: &str) -> Result<ExitCode, ConfigError> {
    let mut base = SweepConfig::default();
    base.run.n_trials = FIG1_TRIALS;
    base.output = PathBuf::from(default_output);
    let base = load(flags, base)?;
    let range = TemperatureRange { start: range.t_start, stop: range.t_stop, points: range.t_points };
    let sweeps = figure_sweeps(fig, &base, range);
    for (_, cfg) in &sweeps {
        cfg.validate()?;
    }
    run_sweeps(&sweeps, flags.jobs, &base.output)
}

fn run(cli: Cli) -> Result<ExitCode, ConfigError> {
    let flags = &cli.flags;
    match &cli.command {
        Command::DumpDefaults => {
            print!("{}", SweepConfig::default().to_toml());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep => {
            let cfg = load(flags, SweepConfig::default())?;
            let label = cfg.quantity.name().to_string();
            let path = cfg.output.clone();
            run_sweeps(&[(label, cfg)], flags.jobs, &path)
        }
        Command::Fig1(r) => figure(flags, r, Figure::Snr, "fig1.csv"),
        Command::Fig2(r) => figure(flags, r, Figure::EffectiveQfi, "fig2.csv"),
        Command::SpotCheck => {
            let checks = run_checks();
            for c in &checks {
                println!("{c}");
            }
            if checks.iter().any(|c| c.status == Status::Error) {
                Ok(ExitCode::from(EXIT_NUMERIC))
            } else if checks.iter().any(|c| c.status == Status::Fail) {
                Ok(ExitCode::from(EXIT_GOLDEN))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
