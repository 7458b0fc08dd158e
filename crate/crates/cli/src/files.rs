//! Reading inputs and writing artifacts, with errors mapped to exit codes.

use std::fs;
use std::path::Path;

use helixseek_core::config::{ConfigError, RunConfig};
use helixseek_core::io::{read_trajectory_csv, write_columns, write_trajectory_csv};
use helixseek_core::{SwimmerParams, Trajectory};
use serde::Serialize;

use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::User(format!("cannot read {}: {e}", path.display())))
}

pub fn config_error(path: &Path, e: ConfigError) -> CliError {
    CliError::User(format!("{}: {e}", path.display()))
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    RunConfig::from_json_str(&read_text(path)?).map_err(|e| config_error(path, e))
}

pub fn load_trajectory(path: &Path, swimmer: &SwimmerParams) -> Result<Trajectory, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::User(format!("cannot read {}: {e}", path.display())))?;
    read_trajectory_csv(file, swimmer).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::User(format!("cannot create {}: {e}", dir.display())))
}

fn write_failed(path: &Path, e: std::io::Error) -> CliError {
    CliError::User(format!("cannot write {}: {e}", path.display()))
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|e| write_failed(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| write_failed(path, e))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    write_trajectory_csv(traj, create(path)?).map_err(|e| write_failed(path, e))
}

pub fn write_series<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    write_columns(create(path)?, header, rows).map_err(|e| write_failed(path, e))
}
