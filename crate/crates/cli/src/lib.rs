//! Batch experiment driver: expands a sweep into cells, runs them and writes
//! `gamma.csv` plus `bounds.csv`.

pub mod config;
pub mod output;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use lastgen_core::{run, CoreError};
use rayon::prelude::*;

pub use config::{parse_config, parse_config_str, Cell, ExperimentPlan, Overrides, StrategySpec};
pub use output::{Row, BOUNDS_HEADER, GAMMA_HEADER, SCHEMA_VERSION};

pub const GAMMA_FILE: &str = "gamma.csv";
pub const BOUNDS_FILE: &str = "bounds.csv";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cell {index} failed ({echo}): {source}")]
    Cell { index: usize, echo: String, source: CoreError },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Cell { .. } => 2,
            Self::Io { .. } => 3,
        }
    }

    fn io(path: &Path, source: impl Into<std::io::Error>) -> Self {
        Self::Io { path: path.to_path_buf(), source: source.into() }
    }
}

fn run_cell(cell: &Cell) -> Result<Row, CliError> {
    let report = run(&cell.config).map_err(|source| CliError::Cell {
        index: cell.index,
        echo: format!("{:?}", cell.config),
        source,
    })?;
    Ok(Row::from_report(cell, &report))
}

/// Runs every cell and returns rows in cell order.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Vec<Row>, CliError> {
    let cells = plan.cells()?;
    for cell in &cells {
        cell.config.validate().map_err(|source| CliError::Cell {
            index: cell.index,
            echo: format!("{:?}", cell.config),
            source,
        })?;
    }
    let work = || cells.par_iter().map(run_cell).collect::<Result<Vec<_>, _>>();
    match plan.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("jobs: {e}")))?
            .install(work),
        None => work(),
    }
}

pub struct Outcome {
    pub rows: Vec<Row>,
    pub gamma_csv: PathBuf,
    pub bounds_csv: PathBuf,
}

pub fn write_outputs(rows: &[Row], dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let gamma = dir.join(GAMMA_FILE);
    let bounds = dir.join(BOUNDS_FILE);
    let f = File::create(&gamma).map_err(|e| CliError::io(&gamma, e))?;
    output::write_gamma_csv(rows, BufWriter::new(f)).map_err(|e| CliError::io(&gamma, e))?;
    let f = File::create(&bounds).map_err(|e| CliError::io(&bounds, e))?;
    output::write_bounds_csv(rows, BufWriter::new(f)).map_err(|e| CliError::io(&bounds, e))?;
    Ok((gamma, bounds))
}

/// Checks the output directory first so a bad path fails before any cell runs.
pub fn execute(plan: &ExperimentPlan) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(&plan.out_dir).map_err(|e| CliError::io(&plan.out_dir, e))?;
    let rows = run_plan(plan)?;
    let (gamma_csv, bounds_csv) = write_outputs(&rows, &plan.out_dir)?;
    Ok(Outcome { rows, gamma_csv, bounds_csv })
}

pub fn summary_table(rows: &[Row]) -> String {
    output::summary_table(rows)
}
