//! Two-classifier ordinal reduction.
//!
//! `f1` separates Low from Intermediate-or-High and `f2` separates High from
//! Low-or-Intermediate. For an observation, `pL = f1(x)`, `pH = f2(x)` and
//! `pM = (1 - pL) - pH`. Because the two classifiers are fitted
//! independently, `pL + pH` can exceed 1; the raw `pM` is then negative and
//! the triple is clamped to `(pL, 0, pH) / (pL + pH)`. Each clamp is counted.
//!
//! Drug-level probabilities are the means of the observation triples.
//! Argmax ties resolve toward the higher-risk category.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, RiskCategory};
use crate::error::{Error, Result};
use crate::learner::{BinaryLearner, BinaryModel};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskProbabilities {
    pub low: f64,
    pub intermediate: f64,
    pub high: f64,
}

impl RiskProbabilities {
    pub fn new(low: f64, intermediate: f64, high: f64) -> Self {
        Self {
            low,
            intermediate,
            high,
        }
    }

    /// Combine the two binary probabilities; the flag reports a clamp.
    pub fn from_binary(p_low: f64, p_high: f64) -> (Self, bool) {
        let raw_mid = (1.0 - p_low) - p_high;
        if raw_mid < 0.0 {
            let s = p_low + p_high;
            (Self::new(p_low / s, 0.0, p_high / s), true)
        } else {
            (Self::new(p_low, raw_mid, p_high), false)
        }
    }

    pub fn get(&self, c: RiskCategory) -> f64 {
        match c {
            RiskCategory::Low => self.low,
            RiskCategory::Intermediate => self.intermediate,
            RiskCategory::High => self.high,
        }
    }

    pub fn sum(&self) -> f64 {
        self.low + self.intermediate + self.high
    }

    /// Most probable category; exact ties go to the higher risk.
    pub fn argmax(&self) -> RiskCategory {
        let mut best = RiskCategory::Low;
        for c in RiskCategory::ALL {
            if self.get(c) >= self.get(best) {
                best = c;
            }
        }
        best
    }

    /// Expected ordinal rank `1 pL + 2 pM + 3 pH`.
    pub fn expected_rank(&self) -> f64 {
        self.low + 2.0 * self.intermediate + 3.0 * self.high
    }

    /// `P(Intermediate or High) = 1 - pL`.
    pub fn mid_or_high(&self) -> f64 {
        1.0 - self.low
    }

    /// Componentwise arithmetic mean.
    pub fn mean(items: &[RiskProbabilities]) -> Option<Self> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let (l, m, h) = items.iter().fold((0.0, 0.0, 0.0), |(l, m, h), p| {
            (l + p.low, m + p.intermediate, h + p.high)
        });
        Some(Self::new(l / n, m / n, h / n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probabilities: RiskProbabilities,
    pub category: RiskCategory,
}

/// Average observation triples of one drug and take the argmax.
pub fn aggregate_drug(observations: &[RiskProbabilities]) -> Result<Prediction> {
    let probabilities = RiskProbabilities::mean(observations)
        .ok_or_else(|| Error::InvalidArgument("drug has no observations".into()))?;
    Ok(Prediction {
        probabilities,
        category: probabilities.argmax(),
    })
}

#[derive(Debug)]
pub struct OrdinalModel {
    learner: String,
    low: Box<dyn BinaryModel>,
    high: Box<dyn BinaryModel>,
    clamps: AtomicU64,
}

fn check_binarization(labels: &[RiskCategory], target: RiskCategory, what: &str) -> Result<()> {
    let pos = labels.iter().filter(|&&l| l == target).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::SingleClass(what.to_string()));
    }
    Ok(())
}

/// Fit `f1` on `1{y = Low}` and `f2` on `1{y = High}` over the same rows.
pub fn fit_ordinal(
    train: &Dataset,
    learner: &dyn BinaryLearner,
    seed: u64,
) -> Result<OrdinalModel> {
    if train.n_observations() == 0 {
        return Err(Error::EmptyTraining);
    }
    let rows = train.complete_rows()?;
    let labels = train.observation_labels();
    check_binarization(&labels, RiskCategory::Low, "low vs intermediate-or-high")?;
    check_binarization(&labels, RiskCategory::High, "high vs low-or-intermediate")?;
    let is_low: Vec<bool> = labels.iter().map(|&l| l == RiskCategory::Low).collect();
    let is_high: Vec<bool> = labels.iter().map(|&l| l == RiskCategory::High).collect();
    let low = learner.fit(&rows, &is_low, derive_seed(seed, &[1]))?;
    let high = learner.fit(&rows, &is_high, derive_seed(seed, &[2]))?;
    Ok(OrdinalModel::from_parts(learner.name(), low, high))
}

impl OrdinalModel {
    pub fn from_parts(
        learner: &str,
        low: Box<dyn BinaryModel>,
        high: Box<dyn BinaryModel>,
    ) -> Self {
        Self {
            learner: learner.to_string(),
            low,
            high,
            clamps: AtomicU64::new(0),
        }
    }

    pub fn learner(&self) -> &str {
        &self.learner
    }

    /// Uncombined `(f1(x), f2(x))`.
    pub fn binary_probabilities(&self, x: &[f64]) -> (f64, f64) {
        (self.low.predict_proba(x), self.high.predict_proba(x))
    }

    pub fn predict_observation(&self, x: &[f64]) -> Prediction {
        let (pl, ph) = self.binary_probabilities(x);
        let (probabilities, clamped) = RiskProbabilities::from_binary(pl, ph);
        if clamped {
            self.clamps.fetch_add(1, Ordering::Relaxed);
        }
        Prediction {
            probabilities,
            category: probabilities.argmax(),
        }
    }

    pub fn predict_drug(&self, rows: &[Vec<f64>]) -> Result<(Vec<Prediction>, Prediction)> {
        let obs: Vec<Prediction> = rows.iter().map(|x| self.predict_observation(x)).collect();
        let triples: Vec<RiskProbabilities> = obs.iter().map(|p| p.probabilities).collect();
        let drug = aggregate_drug(&triples)?;
        Ok((obs, drug))
    }

    /// Number of observation predictions whose raw `pM` was negative.
    pub fn clamp_count(&self) -> u64 {
        self.clamps.load(Ordering::Relaxed)
    }
}
