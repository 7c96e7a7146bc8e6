//! TOML configuration files for scenarios and sweeps. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::equalizer::EqualizerConfig;
use crate::link::ScenarioSpec;
use crate::sweep::{StoppingRule, SweepConfig};
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    scenario: Option<String>,
    scenario_file: Option<PathBuf>,
    equalizers: Vec<String>,
    ebno_db: Option<Vec<f64>>,
    min_errors: u64,
    max_blocks: u64,
    #[serde(default)]
    allow_few_errors: bool,
    #[serde(default)]
    seed: u64,
    threads: Option<usize>,
    output: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec> {
    let spec: ScenarioSpec = toml::from_str(&read(path)?).map_err(|e| parse_error(path, e))?;
    spec.validate()?;
    Ok(spec)
}

pub fn scenario_to_toml(spec: &ScenarioSpec) -> String {
    toml::to_string(spec).expect("scenario specs always serialize")
}

/// Parses a sweep file. Relative `scenario_file` paths resolve against
/// `base_dir`.
pub fn parse_sweep(text: &str, base_dir: &Path) -> Result<SweepConfig> {
    let file: SweepFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let scenario = match (&file.scenario, &file.scenario_file) {
        (Some(name), None) => ScenarioSpec::builtin_named(name)
            .ok_or_else(|| Error::Config(format!("unknown built-in scenario {name:?}")))?,
        (None, Some(path)) => load_scenario(&base_dir.join(path))?,
        _ => return Err(Error::Config("set exactly one of `scenario` and `scenario_file`".into())),
    };
    let equalizers = file
        .equalizers
        .iter()
        .map(|s| s.parse::<EqualizerConfig>())
        .collect::<Result<Vec<_>>>()?;
    let cfg = SweepConfig {
        ebno_db: file.ebno_db.unwrap_or_else(|| scenario.ebno_db.clone()),
        scenario,
        equalizers,
        stopping: StoppingRule {
            min_errors: file.min_errors,
            max_blocks: file.max_blocks,
        },
        seed: file.seed,
        threads: file.threads,
        output: file.output,
    };
    cfg.validate_with_override(file.allow_few_errors)?;
    Ok(cfg)
}

pub fn load_sweep(path: &Path) -> Result<SweepConfig> {
    let base = path.parent().unwrap_or(Path::new("."));
    parse_sweep(&read(path)?, base).map_err(|e| match e {
        Error::Config(m) => parse_error(path, m),
        other => other,
    })
}
