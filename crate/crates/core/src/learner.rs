//! Pluggable binary base learners, registered by name.
//!
//! The ordinal reduction only needs something that turns rows and 0/1 labels
//! into a probability model; [`BinaryLearner`] is that contract. The built-in
//! registry knows `logistic` and `forest`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forest::{fit_forest, RandomForest, DEFAULT_TREES};
use crate::logistic::{fit_logistic, LogisticConfig, LogisticModel};

/// A fitted binary classifier that reports `P(positive | x)`.
pub trait BinaryModel: Send + Sync + fmt::Debug {
    fn predict_proba(&self, x: &[f64]) -> f64;
}

pub trait BinaryLearner: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Fit on complete rows. `seed` feeds any internal randomness.
    fn fit(&self, rows: &[Vec<f64>], labels: &[bool], seed: u64) -> Result<Box<dyn BinaryModel>>;
}

impl BinaryModel for LogisticModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        LogisticModel::predict_proba(self, x)
    }
}

impl BinaryModel for RandomForest {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        RandomForest::predict_proba(self, x)
    }
}

#[derive(Debug, Clone, Default)]
pub struct LogisticLearner {
    pub config: LogisticConfig,
}

impl BinaryLearner for LogisticLearner {
    fn name(&self) -> &str {
        "logistic"
    }

    fn fit(&self, rows: &[Vec<f64>], labels: &[bool], _seed: u64) -> Result<Box<dyn BinaryModel>> {
        Ok(Box::new(fit_logistic(rows, labels, &self.config)?))
    }
}

#[derive(Debug, Clone)]
pub struct ForestLearner {
    pub n_trees: usize,
}

impl Default for ForestLearner {
    fn default() -> Self {
        Self {
            n_trees: DEFAULT_TREES,
        }
    }
}

impl BinaryLearner for ForestLearner {
    fn name(&self) -> &str {
        "forest"
    }

    fn fit(&self, rows: &[Vec<f64>], labels: &[bool], seed: u64) -> Result<Box<dyn BinaryModel>> {
        Ok(Box::new(fit_forest(rows, labels, self.n_trees, seed)?))
    }
}

/// Hyperparameters handed to learner factories.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerSettings {
    pub trees: usize,
    pub logistic: LogisticConfig,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        Self {
            trees: DEFAULT_TREES,
            logistic: LogisticConfig::default(),
        }
    }
}

pub type LearnerFactory = fn(&LearnerSettings) -> Arc<dyn BinaryLearner>;

#[derive(Clone)]
pub struct LearnerRegistry {
    factories: BTreeMap<String, LearnerFactory>,
}

impl fmt::Debug for LearnerRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl LearnerRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("logistic", |s| {
            Arc::new(LogisticLearner { config: s.logistic })
        });
        r.register("forest", |s| Arc::new(ForestLearner { n_trees: s.trees }));
        r
    }

    /// Register (or replace) a factory under `name`.
    pub fn register(&mut self, name: &str, factory: LearnerFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn create(&self, name: &str, settings: &LearnerSettings) -> Result<Arc<dyn BinaryLearner>> {
        self.factories
            .get(name)
            .map(|f| f(settings))
            .ok_or_else(|| Error::UnknownLearner(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }
}

impl Default for LearnerRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
