use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapReport;
use super::lodo::Level;
use super::stream;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::BinaryLearner;
use crate::metrics::Metric;
use crate::ordinal::{fit_ordinal, OrdinalModel};
use crate::rng::{self, derive_seed};

pub const DEFAULT_REPETITIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorImportance {
    pub predictor: String,
    pub imp: f64,
    /// `imp / max imp`; absent when no predictor has positive importance.
    pub nimp: Option<f64>,
    pub permuted_accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub learner: String,
    /// Reference accuracy the permuted accuracies are subtracted from.
    pub baseline: f64,
    /// Observation accuracy of the fitted model on the unpermuted data.
    pub unpermuted_accuracy: f64,
    pub repetitions: usize,
    pub seed: u64,
    /// False when every `imp` is non-positive and `nimp` is undefined.
    pub normalized: bool,
    /// In schema order.
    pub predictors: Vec<PredictorImportance>,
}

impl ImportanceReport {
    /// Predictors by decreasing `nimp` (or `imp` when unnormalized); ties keep schema order.
    pub fn sorted(&self) -> Vec<&PredictorImportance> {
        let mut v: Vec<&PredictorImportance> = self.predictors.iter().collect();
        v.sort_by(|a, b| b.imp.total_cmp(&a.imp));
        v
    }

    pub fn get(&self, predictor: &str) -> Option<&PredictorImportance> {
        self.predictors.iter().find(|p| p.predictor == predictor)
    }
}

/// Upper end of the 95% interval for bootstrap observation accuracy.
pub fn baseline_from_bootstrap(report: &BootstrapReport) -> Result<f64> {
    report
        .summary(Level::Observations, Metric::Accuracy)
        .map(|s| s.ci_high)
        .ok_or_else(|| {
            Error::InvalidArgument("bootstrap report has no observation accuracy".into())
        })
}

fn accuracy(model: &OrdinalModel, rows: &[Vec<f64>], dataset: &Dataset) -> f64 {
    let hits = rows
        .iter()
        .zip(dataset.observations())
        .filter(|(x, o)| model.predict_observation(x).category == dataset.drugs()[o.drug].label)
        .count();
    hits as f64 / rows.len() as f64
}

/// Permutation importance of every predictor.
///
/// Fits once on the whole (complete) dataset, then for each predictor `j` and
/// repetition `g` shuffles column `j` across all observations and records the
/// observation-level accuracy. `imp_j = baseline - mean_g acc_{g,j}`.
pub fn permutation_importance(
    dataset: &Dataset,
    learner: &dyn BinaryLearner,
    baseline: f64,
    repetitions: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument(
            "importance needs at least one repetition".into(),
        ));
    }
    if !baseline.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "baseline accuracy {baseline}"
        )));
    }
    let rows = dataset.complete_rows()?;
    let model = fit_ordinal(dataset, learner, derive_seed(seed, &[stream::MODEL]))?;
    let unpermuted = accuracy(&model, &rows, dataset);
    let p = dataset.n_predictors();

    let cells: Vec<(usize, usize)> = (0..p)
        .flat_map(|j| (0..repetitions).map(move |g| (j, g)))
        .collect();
    let accs: Vec<f64> = cells
        .par_iter()
        .map(|&(j, g)| {
            let mut column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            column.shuffle(&mut rng::stream(
                seed,
                &[stream::PERMUTE, j as u64, g as u64],
            ));
            let permuted: Vec<Vec<f64>> = rows
                .iter()
                .zip(column)
                .map(|(r, v)| {
                    let mut r = r.clone();
                    r[j] = v;
                    r
                })
                .collect();
            accuracy(&model, &permuted, dataset)
        })
        .collect();

    let mut predictors: Vec<PredictorImportance> = dataset
        .schema()
        .names()
        .enumerate()
        .map(|(j, name)| {
            let permuted_accuracies = accs[j * repetitions..(j + 1) * repetitions].to_vec();
            let mean = permuted_accuracies.iter().sum::<f64>() / repetitions as f64;
            PredictorImportance {
                predictor: name.to_string(),
                imp: baseline - mean,
                nimp: None,
                permuted_accuracies,
            }
        })
        .collect();
    let max = predictors
        .iter()
        .map(|p| p.imp)
        .fold(f64::NEG_INFINITY, f64::max);
    let normalized = max > 0.0;
    if normalized {
        for p in &mut predictors {
            p.nimp = Some(p.imp / max);
        }
    }
    Ok(ImportanceReport {
        learner: learner.name().to_string(),
        baseline,
        unpermuted_accuracy: unpermuted,
        repetitions,
        seed,
        normalized,
        predictors,
    })
}
