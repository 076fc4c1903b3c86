use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lodo::{lodo_cv, EvalOptions, EvaluationReport, Level};
use super::outliers::DrugRate;
use super::stream;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::BinaryLearner;
use crate::metrics::Metric;
use crate::rng::{self, derive_seed};

/// Resample each drug's rows with replacement, keeping every drug's row count.
pub fn stratified_resample<R: Rng + ?Sized>(dataset: &Dataset, rng: &mut R) -> Result<Dataset> {
    let mut observations = Vec::with_capacity(dataset.n_observations());
    for k in 0..dataset.n_drugs() {
        let rows = dataset.drug_rows(k);
        for _ in 0..rows.len() {
            let i = rows[rng.random_range(0..rows.len())];
            observations.push(dataset.observations()[i].clone());
        }
    }
    dataset.with_observations(observations)
}

/// The resample used by replicate `r` of a bootstrap run with master `seed`.
pub fn replicate_dataset(dataset: &Dataset, seed: u64, r: usize) -> Result<Dataset> {
    stratified_resample(
        dataset,
        &mut rng::stream(seed, &[stream::RESAMPLE, r as u64]),
    )
}

/// Type-7 (linear interpolation) sample percentile, `p` in `[0, 1]`.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Replicates where the metric was defined.
    pub n: usize,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            ci_low: percentile(values, 0.025)?,
            ci_high: percentile(values, 0.975)?,
            n: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub replicate: usize,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub level: Level,
    pub metric: Metric,
    pub summary: Option<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub learner: String,
    pub seed: u64,
    pub requested: usize,
    /// Successful replicates in index order.
    pub replicates: Vec<ReplicateReport>,
    /// Replicates dropped because a fold lost one of the binary classes.
    pub failed: Vec<usize>,
    pub summaries: Vec<SummaryRow>,
    /// Fraction of successful replicates predicting each drug correctly.
    pub correct_rates: Vec<DrugRate>,
}

impl BootstrapReport {
    pub fn summary(&self, level: Level, metric: Metric) -> Option<MetricSummary> {
        self.summaries
            .iter()
            .find(|r| r.level == level && r.metric == metric)
            .and_then(|r| r.summary)
    }

    /// Defined values of one metric across successful replicates.
    pub fn values(&self, level: Level, metric: Metric) -> Vec<f64> {
        self.replicates
            .iter()
            .filter_map(|r| r.report.level(level).get(metric))
            .collect()
    }

    pub fn correct_rate(&self, drug: &str) -> Option<f64> {
        self.correct_rates
            .iter()
            .find(|r| r.drug == drug)
            .map(|r| r.rate)
    }
}

/// Stratified bootstrap of LODO-CV: `replicates` resamples, each evaluated
/// with its own derived seed.
pub fn stratified_bootstrap(
    dataset: &Dataset,
    learner: &dyn BinaryLearner,
    opts: &EvalOptions,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapReport> {
    if replicates == 0 {
        return Err(Error::InvalidArgument(
            "bootstrap needs at least one replicate".into(),
        ));
    }
    let runs = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let wrap = |e| Error::Replicate {
                replicate: r,
                source: Box::new(e),
            };
            let resample = replicate_dataset(dataset, seed, r).map_err(wrap)?;
            match lodo_cv(
                &resample,
                learner,
                opts,
                derive_seed(seed, &[stream::REPLICATE, r as u64]),
            ) {
                Ok(report) => Ok(Some(ReplicateReport {
                    replicate: r,
                    report,
                })),
                Err(e) if e.is_single_class() => Ok(None),
                Err(e) => Err(wrap(e)),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Some(rep) => ok.push(rep),
            None => failed.push(r),
        }
    }

    let mut report = BootstrapReport {
        learner: learner.name().to_string(),
        seed,
        requested: replicates,
        replicates: ok,
        failed,
        summaries: Vec::new(),
        correct_rates: Vec::new(),
    };
    for level in Level::ALL {
        for metric in Metric::ALL {
            let summary = MetricSummary::from_values(&report.values(level, metric));
            report.summaries.push(SummaryRow {
                level,
                metric,
                summary,
            });
        }
    }
    let done = report.replicates.len();
    report.correct_rates = dataset
        .drugs()
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let hits = report
                .replicates
                .iter()
                .filter(|r| {
                    let p = &r.report.drug_predictions[k];
                    debug_assert_eq!(p.drug, d.id);
                    p.predicted == p.truth
                })
                .count();
            DrugRate {
                drug: d.id.clone(),
                truth: d.label,
                rate: if done == 0 {
                    0.0
                } else {
                    hits as f64 / done as f64
                },
            }
        })
        .collect();
    Ok(report)
}
