//! Flat `key = value` run configuration files.
//!
//! One entry per line; blank lines and `#` comments are skipped. Unknown
//! and duplicate keys are rejected so typos fail loudly instead of
//! silently falling back to defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use renewal_core::model::{LossMode, Statistic};

use crate::error::CliError;

pub const DEFAULT_HIDDEN: usize = 36;
pub const DEFAULT_K_MAX: f64 = 10.0;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;
pub const DEFAULT_ITERATIONS: usize = 100;
pub const DEFAULT_CLIP: f64 = 5.0;
pub const DEFAULT_TAU: u32 = 78;
pub const DEFAULT_GAMMA: u32 = 4;
pub const DEFAULT_SUBJECTS: usize = 100;

/// Parsed key/value lines, consumed key by key so leftovers can be
/// reported as unknown.
struct Pairs(BTreeMap<String, String>);

impl Pairs {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Parse(format!(
                    "config line {}: expected key = value, got {line:?}",
                    idx + 1
                )));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Parse(format!("config line {}: empty key", idx + 1)));
            }
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Parse(format!(
                    "config line {}: duplicate key {key:?}",
                    idx + 1
                )));
            }
        }
        Ok(Self(map))
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn value<T>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Parse(format!("config key {key}: {e} (got {raw:?})"))),
        }
    }

    fn list<T>(&mut self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|e| {
                        CliError::Parse(format!("config key {key}: {e} (got {item:?})"))
                    })
                })
                .collect::<Result<Vec<T>, CliError>>()
                .map(Some),
        }
    }

    /// Errors if any keys were never consumed.
    fn finish(self) -> Result<(), CliError> {
        match self.0.into_keys().next() {
            None => Ok(()),
            Some(key) => Err(CliError::Parse(format!("unknown config key {key:?}"))),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("config {}: {e}", path.display())))
}

/// Configuration for `train`, `predict`, and `evaluate`.
///
/// `mode`, `hidden`, and `k_max` stay optional so the prediction commands
/// can tell "left at default" apart from "explicitly set": an explicit
/// value that contradicts the checkpoint is a shape error, a missing one
/// defers to the checkpoint.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub mode: Option<LossMode>,
    pub hidden: Option<usize>,
    pub k_max: Option<f64>,
    pub learning_rate: f64,
    pub iterations: usize,
    pub clip: f64,
    /// Last training step; features and targets are built from `1..=tau`.
    pub tau: u32,
    /// Forecast horizon after `tau`.
    pub gamma: u32,
    pub statistic: Statistic,
    pub seed: u64,
    /// Optional training-segment length; the full span when absent.
    pub window: Option<usize>,
    pub stride: usize,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        Self::parse_str(&read(path)?)
    }

    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut pairs = Pairs::parse(text)?;
        let input = pairs
            .take("input")
            .map(PathBuf::from)
            .ok_or_else(|| CliError::Parse("config is missing required key \"input\"".into()))?;
        let mode = match pairs.take("mode") {
            None => None,
            Some(raw) => Some(LossMode::parse(&raw)?),
        };
        let statistic = match pairs.take("statistic") {
            None => Statistic::Mode,
            Some(raw) => Statistic::parse(&raw)?,
        };
        let cfg = Self {
            input,
            mode,
            hidden: pairs.value("hidden")?,
            k_max: pairs.value("k_max")?,
            learning_rate: pairs.value("learning_rate")?.unwrap_or(DEFAULT_LEARNING_RATE),
            iterations: pairs.value("iterations")?.unwrap_or(DEFAULT_ITERATIONS),
            clip: pairs.value("clip")?.unwrap_or(DEFAULT_CLIP),
            tau: pairs.value("tau")?.unwrap_or(DEFAULT_TAU),
            gamma: pairs.value("gamma")?.unwrap_or(DEFAULT_GAMMA),
            statistic,
            seed: pairs.value("seed")?.unwrap_or(0),
            window: pairs.value("window")?,
            stride: pairs.value("stride")?.unwrap_or(1),
        };
        pairs.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.tau < 2 {
            return Err(CliError::Parse(format!("tau must be >= 2, got {}", self.tau)));
        }
        if self.gamma < 1 {
            return Err(CliError::Parse("gamma must be >= 1".into()));
        }
        if self.hidden == Some(0) {
            return Err(CliError::Parse("hidden must be >= 1".into()));
        }
        if self.stride == 0 {
            return Err(CliError::Parse("stride must be >= 1".into()));
        }
        if self.window == Some(0) {
            return Err(CliError::Parse("window must be >= 1".into()));
        }
        Ok(())
    }

    pub fn mode_or_default(&self) -> LossMode {
        self.mode.unwrap_or(LossMode::MatRnn)
    }

    pub fn hidden_or_default(&self) -> usize {
        self.hidden.unwrap_or(DEFAULT_HIDDEN)
    }

    pub fn k_max_or_default(&self) -> f64 {
        self.k_max.unwrap_or(DEFAULT_K_MAX)
    }
}

/// Configuration for `generate`. The process count is the length of
/// `scales`; `shapes` and `betas` default to 1 and 0 per process.
#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub subjects: usize,
    pub tau: u32,
    pub scales: Vec<f64>,
    pub shapes: Vec<f64>,
    pub betas: Vec<f64>,
    pub coupling: f64,
    pub seed: u64,
}

impl GenerateConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        Self::parse_str(&read(path)?)
    }

    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut pairs = Pairs::parse(text)?;
        let scales: Vec<f64> = pairs
            .list("scales")?
            .ok_or_else(|| CliError::Parse("config is missing required key \"scales\"".into()))?;
        let p = scales.len();
        let shapes = pairs.list("shapes")?.unwrap_or_else(|| vec![1.0; p]);
        let betas = pairs.list("betas")?.unwrap_or_else(|| vec![0.0; p]);
        let cfg = Self {
            subjects: pairs.value("subjects")?.unwrap_or(DEFAULT_SUBJECTS),
            tau: pairs.value("tau")?.unwrap_or(DEFAULT_TAU),
            scales,
            shapes,
            betas,
            coupling: pairs.value("coupling")?.unwrap_or(0.0),
            seed: pairs.value("seed")?.unwrap_or(0),
        };
        pairs.finish()?;
        if cfg.shapes.len() != p || cfg.betas.len() != p {
            return Err(CliError::Parse(format!(
                "scales, shapes, and betas must have matching lengths, got {}/{}/{}",
                p,
                cfg.shapes.len(),
                cfg.betas.len()
            )));
        }
        Ok(cfg)
    }
}
