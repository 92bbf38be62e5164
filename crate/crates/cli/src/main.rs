use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use delta_eita_cli::config::UnitsFlag;
use delta_eita_cli::{parse_config, run, worker_count, CliError, Mode, RunConfig};

/// Steady-state and transient spectroscopy of a Δ-configuration three-level atom.
#[derive(Parser, Debug)]
#[command(name = "delta-eita", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Overrides the `mode` key of the configuration.
    #[arg(long, value_enum)]
    mode: Option<Mode>,

    /// Output directory (overrides `[output].dir`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for parallel sweeps.
    #[arg(long, env = "DELTA_EITA_WORKERS")]
    workers: Option<usize>,

    /// Overrides `[atom].units`.
    #[arg(long, value_enum)]
    units: Option<UnitsFlag>,

    /// Print the normalised configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(&cli.config).map_err(|e| CliError::Io(format!("{}: {e}", cli.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(u) = cli.units {
        cfg.atom.units = u;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    if cli.workers.is_some() {
        cfg.output.workers = cli.workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let cfg = load(cli)?;
    if cli.dump_config {
        print!("{}", cfg.dump());
        return Ok(true);
    }
    let workers = worker_count(cli.workers, &cfg);
    let outcome = run(&cfg, cfg.output.dir.as_ref(), workers)?;
    for line in &outcome.details {
        println!("{line}");
    }
    println!("{}", outcome.summary);
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("delta-eita: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
