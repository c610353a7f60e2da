//! Experiment configuration files (TOML).

use std::fmt;
use std::path::{Path, PathBuf};

use geosum_core::diagnostics::{CfGrid, Target};
use geosum_core::engine::SimConfig;
use geosum_core::sequence::{SequenceSpec, DEFAULT_ALPHA_GRID};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A validation failure tied to a location in the config file.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn invalid<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        path: path.into(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub trials: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lifetime: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchFormat {
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<BatchFormat>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("geosum-out")
}

fn default_formats() -> Vec<BatchFormat> {
    vec![BatchFormat::Csv]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out_dir(),
            formats: default_formats(),
        }
    }
}

fn default_epsilon_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.5]
}

fn default_alpha_grid() -> Vec<f64> {
    DEFAULT_ALPHA_GRID.to_vec()
}

fn default_n_max() -> u64 {
    100_000
}

fn default_tail_fraction() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Strictly decreasing.
    pub p_grid: Vec<f64>,
    #[serde(default = "default_epsilon_grid")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cf_grid: Option<CfGrid>,
    /// Overrides the target estimated from the profiles' Cesàro limits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    pub spec: SequenceSpec,
    pub sim: SimSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line overrides of scalar fields.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).or_else(|e| invalid(path.display().to_string(), e.to_string()))?;
        let mut cfg = Self::parse(&text)?;
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let path = match e.span() {
                Some(span) => format!("config (line {})", text[..span.start].matches('\n').count() + 1),
                None => "config".to_string(),
            };
            ConfigError {
                path,
                message: e.message().trim().to_string(),
            }
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.sim.seed = seed;
        }
        if let Some(w) = o.workers {
            self.sim.workers = Some(w);
        }
        if let Some(dir) = &o.out_dir {
            self.output.dir = dir.clone();
        }
    }

    /// Fills defaults that depend on other fields.
    pub fn resolve(&mut self) {
        self.sim.workers.get_or_insert(1);
        if self.cf_grid.is_none() {
            self.cf_grid = Some(CfGrid::default_for(self.spec.dim()));
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.p_grid.is_empty() {
            return invalid("p_grid", "must be nonempty");
        }
        for (i, p) in self.p_grid.iter().enumerate() {
            if !(*p > 0.0 && *p < 1.0) {
                return invalid(format!("p_grid[{i}]"), format!("must lie in (0, 1), got {p}"));
            }
            if i > 0 && *p >= self.p_grid[i - 1] {
                return invalid(format!("p_grid[{i}]"), "p_grid must be strictly decreasing");
            }
        }
        if self.epsilon_grid.is_empty() {
            return invalid("epsilon_grid", "must be nonempty");
        }
        for (i, e) in self.epsilon_grid.iter().enumerate() {
            if !(*e > 0.0 && e.is_finite()) {
                return invalid(format!("epsilon_grid[{i}]"), format!("must be positive, got {e}"));
            }
        }
        if self.alpha_grid.is_empty() {
            return invalid("alpha_grid", "must be nonempty");
        }
        for (i, a) in self.alpha_grid.iter().enumerate() {
            if !(*a > 0.0 && *a < 1.0) {
                return invalid(format!("alpha_grid[{i}]"), format!("must lie in (0, 1), got {a}"));
            }
        }
        if self.n_max < 100 {
            return invalid("n_max", format!("must be at least 100, got {}", self.n_max));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction < 0.5) {
            return invalid("tail_fraction", format!("must lie in (0, 0.5), got {}", self.tail_fraction));
        }
        if let Some(g) = &self.cf_grid {
            g.validate(self.spec.dim()).or_else(|e| invalid("cf_grid", e.to_string()))?;
        }
        if let Some(t) = &self.target {
            if t.dim() != self.spec.dim() {
                return invalid(
                    "target",
                    format!("dimension {} does not match spec dimension {}", t.dim(), self.spec.dim()),
                );
            }
        }
        if self.sim.trials == 0 {
            return invalid("sim.trials", "must be positive");
        }
        if self.sim.workers == Some(0) {
            return invalid("sim.workers", "must be positive");
        }
        if self.sim.max_lifetime == Some(0) {
            return invalid("sim.max_lifetime", "must be positive");
        }
        if self.output.formats.is_empty() {
            return invalid("output.formats", "must name at least one format");
        }
        Ok(())
    }

    pub fn sim_config(&self, p: f64) -> SimConfig {
        SimConfig {
            p,
            trials: self.sim.trials,
            seed: self.sim.seed,
            workers: self.sim.workers.unwrap_or(1),
            max_lifetime: self.sim.max_lifetime,
        }
    }

    /// SHA-256 of the experiment with execution-only fields (workers, output) removed,
    /// so runs that must agree byte for byte share it.
    pub fn fingerprint(&self) -> String {
        let mut canon = self.clone();
        canon.sim.workers = None;
        canon.output = OutputSection::default();
        hex::encode(Sha256::digest(serde_json::to_vec(&canon).expect("config serializes")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    /// Creates the output directory and proves it writable before any work starts.
    pub fn prepare_out_dir(&self) -> Result<(), ConfigError> {
        let dir = &self.output.dir;
        let fail = |e: std::io::Error| invalid::<()>("output.dir", format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).or_else(fail)?;
        let probe = dir.join(".geosum-write-probe");
        std::fs::write(&probe, b"").or_else(fail)?;
        std::fs::remove_file(&probe).or_else(fail)
    }
}
