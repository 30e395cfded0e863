//! Command implementations behind the `driftsim` binary.

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod plot;

use driftsim::geom::Vec2;
use driftsim::sim::{run, ObstacleSpec, RunOutput, Scenario};
use driftsim::windfield::WindField;
use std::fs;
use std::path::Path;
use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_COLLISION: u8 = 2;
pub const EXIT_NON_FINITE: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Plot(#[from] plot::PlotError),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

pub fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    let mut sc = Scenario::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        sc.sim.seed = s;
    }
    Ok(sc)
}

/// Run a scenario and write `runlog.csv`, `events.log` and `summary.json` into `out`.
pub fn cmd_run(config: &Path, out: &Path, seed: Option<u64>) -> Result<RunOutput, CliError> {
    let sc = load_scenario(config, seed)?;
    log::info!("running {} (seed {}, {} vehicles, t_end {} s)", sc.name, sc.sim.seed, sc.vehicles.len(), sc.sim.t_end);
    let output = run(&sc).map_err(|e| CliError::Config(e.to_string()))?;
    fs::create_dir_all(out).map_err(io(out))?;
    let write = |name: &str, text: &str| {
        let p = out.join(name);
        fs::write(&p, text).map_err(io(&p))
    };
    write("runlog.csv", &output.log.to_csv())?;
    write("events.log", &output.log.events_jsonl())?;
    let summary = serde_json::to_string_pretty(&output.summary).expect("summary serializes");
    write("summary.json", &(summary + "\n"))?;
    Ok(output)
}

pub fn exit_code(output: &RunOutput) -> u8 {
    if output.non_finite() {
        EXIT_NON_FINITE
    } else if output.collided() {
        EXIT_COLLISION
    } else {
        EXIT_OK
    }
}

pub fn cmd_plot(log: &Path, kind: plot::PlotKind, out: &Path, scenario: Option<&Path>) -> Result<(), CliError> {
    let text = fs::read_to_string(log).map_err(io(log))?;
    let obstacles: Vec<ObstacleSpec> = match scenario {
        Some(p) => load_scenario(p, None)?.obstacles,
        None => Vec::new(),
    };
    let svg = plot::render(&text, kind, &obstacles)?;
    fs::write(out, svg).map_err(io(out))
}

/// Sample the scenario's wind field on a grid covering its vehicles and
/// obstacles, as `x,y,u,v` CSV.
pub fn cmd_wind(config: &Path, out: &Path, time: f64, step: f64, seed: Option<u64>) -> Result<(), CliError> {
    if !(step > 0.0) {
        return Err(CliError::Config("--step must be > 0".into()));
    }
    let sc = load_scenario(config, seed)?;
    let field = WindField::build(&sc.wind_config()).map_err(|e| CliError::Config(e.to_string()))?;
    let mut pts: Vec<Vec2> = sc.vehicles.iter().flat_map(|v| [Vec2::new(v.start.x, v.start.y), v.goal]).collect();
    for o in &sc.obstacles {
        match o {
            ObstacleSpec::Disc { center, radius, .. } => {
                pts.push(center.add_scalar(-radius));
                pts.push(center.add_scalar(*radius));
            }
            ObstacleSpec::Polygon { vertices, .. } => pts.extend(vertices),
        }
    }
    let lo = pts.iter().fold(Vec2::repeat(f64::INFINITY), |a, p| a.inf(p)).add_scalar(-10.0);
    let hi = pts.iter().fold(Vec2::repeat(f64::NEG_INFINITY), |a, p| a.sup(p)).add_scalar(10.0);
    fs::write(out, field.grid_csv(lo, hi, step, time)).map_err(io(out))
}
