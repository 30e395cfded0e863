use clap::{Parser, Subcommand};
use driftsim_cli::plot::PlotKind;
use driftsim_cli::{cmd_plot, cmd_run, cmd_wind, exit_code, load_scenario, CliError, EXIT_CONFIG, EXIT_OK};
use std::path::PathBuf;
use std::process::ExitCode;

/// Multi-vehicle reactive planning under extreme wind: run scenarios and plot logs.
#[derive(Parser)]
#[command(name = "driftsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write runlog.csv, events.log and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace the scenario's seed (turbulence realization).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render an SVG chart from a runlog.csv.
    Plot {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(long)]
        out: PathBuf,
        /// Scenario whose obstacles are drawn under the trajectory plot.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Sample a scenario's wind field on a grid as x,y,u,v CSV.
    Wind {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        time: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DRIFTSIM_LOG_LEVEL", "error")).init();
    let cli = Cli::parse();
    let result: Result<u8, CliError> = match cli.command {
        Command::Run { config, out, seed } => cmd_run(&config, &out, seed).map(|o| {
            for v in &o.summary.vehicles {
                log::info!("vehicle {}: reached={} crashed={} drift={:?}", v.id, v.reached, v.crashed, v.drift_intervals);
            }
            exit_code(&o)
        }),
        Command::Plot { log, kind, out, scenario } => cmd_plot(&log, kind, &out, scenario.as_deref()).map(|_| EXIT_OK),
        Command::Wind { config, out, time, step, seed } => cmd_wind(&config, &out, time, step, seed).map(|_| EXIT_OK),
        Command::Validate { config } => load_scenario(&config, None).map(|sc| {
            println!("{}: ok ({} vehicles, {} obstacles)", sc.name, sc.vehicles.len(), sc.obstacles.len());
            EXIT_OK
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
