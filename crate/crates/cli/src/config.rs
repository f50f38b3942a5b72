use std::path::{Path, PathBuf};

use apiknow::report::ReportFormat;
use apiknow::synth::GenConfig;
use serde::Deserialize;

/// Default input and output locations. Command-line flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub docs: Option<PathBuf>,
    pub transactions: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub patterns: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub feedback: Option<PathBuf>,
}

/// Contents of a `--config` TOML file.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub min_support: u64,
    pub min_confidence: f64,
    pub format: ReportFormat,
    pub gen: GenConfig,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            paths: Paths::default(),
            min_support: 2,
            min_confidence: 0.5,
            format: ReportFormat::Text,
            gen: GenConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Ok(RunConfig::parse(&text)?)
    }
}
