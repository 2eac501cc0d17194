use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use swnoon::config::SEED_ENV;
use swnoon::detection::fringe_heralds;
use swnoon::experiment::{ghz_table, herald_stats, pump_sweep, run_fringe, sweep_table};
use swnoon::herald::write_state;
use swnoon::io::fmt_f64;
use swnoon::optics::noon_network;
use swnoon::{ConfigError, ExperimentConfig};

/// Heralded spin-wave NOON interferometer simulator.
#[derive(Debug, Parser)]
#[command(name = "swnoon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set dt_grid.count=40`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory; table commands print to stdout without it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Heralding probability of the order-N network for N = 1..min(4, cutoff).
    HeraldStats {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate the configured fringe and fit it.
    Fringe {
        #[command(flatten)]
        common: Common,
    },
    /// Order-1 fringe and recovered velocity per pump power.
    PumpSweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated pump powers in mW.
        #[arg(long, value_delimiter = ',', default_value = "0,0.75,1.5,3,4.5,6")]
        powers: Vec<f64>,
    },
    /// Analytic GHZ fringe periods for N = 1..n_max.
    GhzTable {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
    },
    /// Write state and the heralded spin-wave states of the configured order.
    DumpState {
        #[command(flatten)]
        common: Common,
    },
    /// Element and detector listing of the order-`noon_n` network.
    DumpNetwork {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(ConfigError),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, ConfigError> {
    match &common.config {
        Some(path) => ExperimentConfig::load(path, &common.overrides),
        None => {
            let env = std::env::var(SEED_ENV).ok();
            ExperimentConfig::from_json("{}", &common.overrides, env.as_deref())
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Prints `contents`, or writes it to `name` inside `--out`.
fn emit(common: &Common, name: &str, contents: &str) -> anyhow::Result<()> {
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write_file(dir, name, contents)
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::HeraldStats { common } => {
            let cfg = load_config(&common).map_err(Failure::Config)?;
            let table = herald_stats(&cfg).context("herald statistics")?;
            emit(&common, "herald_stats.csv", &table.to_csv())?;
        }
        Command::Fringe { common } => {
            let cfg = load_config(&common).map_err(Failure::Config)?;
            let run = run_fringe(&cfg).context("fringe run")?;
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            write_file(&dir, "fringe.csv", &run.dataset.to_csv())?;
            write_file(&dir, "fringe.meta", &run.dataset.metadata_text())?;
            write_file(&dir, "fit.txt", &run.fit.to_text())?;
            write_file(&dir, "fit.csv", &run.fit.to_csv())?;
            write_file(&dir, "residuals.csv", &run.fit.residuals_csv())?;
            print!("{}", run.fit.to_text());
        }
        Command::PumpSweep { common, powers } => {
            let cfg = load_config(&common).map_err(Failure::Config)?;
            let rows = pump_sweep(&cfg, &powers).context("pump sweep")?;
            emit(&common, "pump_sweep.csv", &sweep_table(&rows).to_csv())?;
        }
        Command::GhzTable { common, n_max } => {
            let cfg = load_config(&common).map_err(Failure::Config)?;
            let table = ghz_table(&cfg, n_max).context("GHZ table")?;
            emit(&common, "ghz_table.csv", &table.to_csv())?;
        }
        Command::DumpState { common } => {
            let cfg = load_config(&common).map_err(Failure::Config)?;
            let mut text = String::from("# write state\n");
            text += &write_state(&cfg.write_params()).context("write state")?.to_text();
            for (i, h) in fringe_heralds(&cfg, cfg.order).context("heralding")?.iter().enumerate() {
                text += &format!("\n# herald {i}: probability {}\n", fmt_f64(h.probability));
                text += &h.state.to_text();
            }
            emit(&common, "state.txt", &text)?;
        }
        Command::DumpNetwork { common } => {
            let cfg = load_config(&common).map_err(Failure::Config)?;
            let net = noon_network(cfg.noon_n).context("building network")?;
            emit(&common, "network.txt", &net.to_text())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
