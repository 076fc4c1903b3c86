//! Run configuration: a flat `key = value` file merged under command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{ImputationMode, DEFAULT_REPETITIONS};
use crate::forest::DEFAULT_TREES;
use crate::impute::DEFAULT_BAGS;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ORDRISK_OUT";
pub const DEFAULT_OUT_DIR: &str = "ordrisk-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaChoice {
    Stemcell7,
    Wedge15,
    Custom,
}

impl SchemaChoice {
    /// Required predictor count, if fixed.
    pub fn width(self) -> Option<usize> {
        match self {
            SchemaChoice::Stemcell7 => Some(7),
            SchemaChoice::Wedge15 => Some(15),
            SchemaChoice::Custom => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub schema: SchemaChoice,
    pub learners: Vec<String>,
    pub seed: u64,
    pub trees: usize,
    pub replicates: usize,
    pub repetitions: usize,
    pub threshold: f64,
    pub control: Option<String>,
    pub imputation: ImputationMode,
    pub imputer_bags: usize,
    pub importance_learner: String,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub per_category: usize,
    pub obs_per_drug: usize,
    pub noise_sd: f64,
    pub nonlinear: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let out = std::env::var_os(OUT_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from);
        Self {
            input: None,
            schema: SchemaChoice::Custom,
            learners: vec!["logistic".into(), "forest".into()],
            seed: 0,
            trees: DEFAULT_TREES,
            replicates: 1000,
            repetitions: DEFAULT_REPETITIONS,
            threshold: 0.25,
            control: None,
            imputation: ImputationMode::PerFold,
            imputer_bags: DEFAULT_BAGS,
            importance_learner: "forest".into(),
            out,
            output: None,
            per_category: 6,
            obs_per_drug: 8,
            noise_sd: 0.5,
            nonlinear: false,
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidArgument(format!("bad value for `{key}`: `{value}`"))
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

impl RunConfig {
    /// Apply one setting. Keys accept `-` or `_` as separator.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "input" => self.input = Some(PathBuf::from(value)),
            "schema" => {
                self.schema = match value.to_ascii_lowercase().as_str() {
                    "stemcell7" => SchemaChoice::Stemcell7,
                    "wedge15" => SchemaChoice::Wedge15,
                    "custom" => SchemaChoice::Custom,
                    _ => return Err(bad(&key, value)),
                }
            }
            "learners" | "learner" => {
                self.learners = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "seed" => self.seed = parse(&key, value)?,
            "trees" | "b" => self.trees = parse(&key, value)?,
            "replicates" | "r" => self.replicates = parse(&key, value)?,
            "repetitions" | "g" => self.repetitions = parse(&key, value)?,
            "threshold" => self.threshold = parse(&key, value)?,
            "control" => self.control = Some(value.to_string()),
            "imputation" => {
                self.imputation = match value {
                    "per-fold" | "per_fold" => ImputationMode::PerFold,
                    "global-leaky" | "global_leaky" => ImputationMode::GlobalLeaky,
                    _ => return Err(bad(&key, value)),
                }
            }
            "imputer_bags" => self.imputer_bags = parse(&key, value)?,
            "importance_learner" => self.importance_learner = value.to_string(),
            "out" => self.out = PathBuf::from(value),
            "output" => self.output = Some(PathBuf::from(value)),
            "per_category" => self.per_category = parse(&key, value)?,
            "obs_per_drug" => self.obs_per_drug = parse(&key, value)?,
            "noise_sd" => self.noise_sd = parse(&key, value)?,
            "nonlinear" => self.nonlinear = parse_bool(&key, value)?,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key `{key}`"
                )))
            }
        }
        Ok(())
    }

    /// Parse config text. Blank lines and `#` comments are skipped.
    pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("config line {}: expected key = value", n + 1))
            })?;
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(out)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
        })?;
        for (k, v) in Self::parse_text(&text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("trees", self.trees),
            ("replicates", self.replicates),
            ("repetitions", self.repetitions),
            ("imputer_bags", self.imputer_bags),
            ("per_category", self.per_category),
            ("obs_per_drug", self.obs_per_drug),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("`{name}` must be positive")));
            }
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument(
                "`threshold` must lie in (0, 1)".into(),
            ));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidArgument(
                "`noise_sd` must be a non-negative number".into(),
            ));
        }
        if self.learners.is_empty() {
            return Err(Error::InvalidArgument("no learners requested".into()));
        }
        let paths = [Some(&self.out), self.input.as_ref(), self.output.as_ref()];
        if paths
            .into_iter()
            .flatten()
            .any(|p| p.as_os_str().is_empty())
        {
            return Err(Error::InvalidArgument("paths must be non-empty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut c = RunConfig::default();
        let text =
            "# run\nseed = 7\ntrees=50 # fewer\nlearners = forest, logistic\nnonlinear = yes\n";
        for (k, v) in RunConfig::parse_text(text).unwrap() {
            c.set(&k, &v).unwrap();
        }
        assert_eq!((c.seed, c.trees, c.nonlinear), (7, 50, true));
        assert_eq!(c.learners, ["forest", "logistic"]);
        c.set("seed", "9").unwrap();
        assert_eq!(c.seed, 9);
        c.set("imputation", "global-leaky").unwrap();
        assert_eq!(c.imputation, ImputationMode::GlobalLeaky);
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = RunConfig::default();
        assert!(c.set("colour", "red").is_err());
        assert!(c.set("seed", "-1").is_err());
        assert!(RunConfig::parse_text("seed 3").is_err());
        c.threshold = 1.0;
        assert!(c.validate().is_err());
        c.threshold = 0.25;
        c.replicates = 0;
        assert!(c.validate().is_err());
    }
}
