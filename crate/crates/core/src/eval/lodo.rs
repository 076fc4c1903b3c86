use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stream;
use crate::dataset::{split_lodo, Dataset, RiskCategory};
use crate::error::{Error, Result};
use crate::impute::{fit_imputer, fit_imputer_columns, missing_columns, DEFAULT_BAGS};
use crate::learner::BinaryLearner;
use crate::metrics::{MetricSet, PredictionSet, UnitPrediction};
use crate::ordinal::{aggregate_drug, fit_ordinal, Prediction, RiskProbabilities};
use crate::rng::{self, derive_seed};

/// Where imputation statistics come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImputationMode {
    /// Fit the imputer on each fold's training drugs only.
    PerFold,
    /// Impute the whole table once before splitting. Leaks held-out
    /// predictor values into training; kept for like-for-like replication.
    GlobalLeaky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub imputation: ImputationMode,
    pub imputer_bags: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            imputation: ImputationMode::PerFold,
            imputer_bags: DEFAULT_BAGS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Observations,
    Drugs,
}

impl Level {
    pub const ALL: [Level; 2] = [Level::Observations, Level::Drugs];

    pub fn name(self) -> &'static str {
        match self {
            Level::Observations => "observations",
            Level::Drugs => "drugs",
        }
    }
}

/// Held-out predictions for one drug.
#[derive(Debug, Clone, PartialEq)]
pub struct DrugOutcome {
    pub drug: String,
    pub truth: RiskCategory,
    pub observations: Vec<Prediction>,
    pub prediction: Prediction,
}

impl DrugOutcome {
    pub fn is_correct(&self) -> bool {
        self.prediction.category == self.truth
    }

    fn result(&self) -> DrugResult {
        DrugResult {
            drug: self.drug.clone(),
            truth: self.truth,
            predicted: self.prediction.category,
            probabilities: self.prediction.probabilities,
            observations: self.observations.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugResult {
    pub drug: String,
    pub truth: RiskCategory,
    pub predicted: RiskCategory,
    pub probabilities: RiskProbabilities,
    /// Held-out observations behind the drug-level prediction.
    pub observations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub learner: String,
    pub folds: usize,
    pub observations: MetricSet,
    pub drugs: MetricSet,
    pub drug_predictions: Vec<DrugResult>,
    /// Observation predictions whose raw intermediate probability was negative.
    pub clamp_count: u64,
}

impl EvaluationReport {
    pub fn level(&self, level: Level) -> &MetricSet {
        match level {
            Level::Observations => &self.observations,
            Level::Drugs => &self.drugs,
        }
    }

    pub(crate) fn from_outcomes(learner: &str, outcomes: &[DrugOutcome], clamps: u64) -> Self {
        let (obs, drugs) = pool(outcomes);
        Self {
            learner: learner.to_string(),
            folds: outcomes.len(),
            observations: MetricSet::compute(&obs),
            drugs: MetricSet::compute(&drugs),
            drug_predictions: outcomes.iter().map(DrugOutcome::result).collect(),
            clamp_count: clamps,
        }
    }
}

/// Observation- and drug-level prediction sets from held-out outcomes.
pub(crate) fn pool(outcomes: &[DrugOutcome]) -> (PredictionSet, PredictionSet) {
    let mut obs = Vec::new();
    let mut drugs = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        for (j, p) in o.observations.iter().enumerate() {
            obs.push(UnitPrediction {
                id: format!("{}#{j}", o.drug),
                truth: o.truth,
                probabilities: p.probabilities,
                predicted: p.category,
            });
        }
        drugs.push(UnitPrediction {
            id: o.drug.clone(),
            truth: o.truth,
            probabilities: o.prediction.probabilities,
            predicted: o.prediction.category,
        });
    }
    // ids are unique by construction
    (
        PredictionSet::new(obs).expect("unique observation ids"),
        PredictionSet::new(drugs).expect("unique drug ids"),
    )
}

/// Fit on `train` (imputing per fold when needed) and predict every drug in
/// `tests`. Returns one outcome per test drug and the model's clamp count.
pub fn run_fold(
    train: &Dataset,
    tests: &[Dataset],
    learner: &dyn BinaryLearner,
    opts: &EvalOptions,
    seed: u64,
) -> Result<(Vec<DrugOutcome>, u64)> {
    let mut all: Vec<&Dataset> = vec![train];
    all.extend(tests.iter());
    let gaps = missing_columns(&all);
    let (train, tests): (Dataset, Vec<Dataset>) = if gaps.is_empty() {
        (train.clone(), tests.to_vec())
    } else {
        let imputer = fit_imputer_columns(
            train,
            &gaps,
            opts.imputer_bags,
            derive_seed(seed, &[stream::IMPUTE]),
        )?;
        (
            imputer.impute(train)?,
            tests
                .iter()
                .map(|t| imputer.impute(t))
                .collect::<Result<_>>()?,
        )
    };
    let model = fit_ordinal(&train, learner, derive_seed(seed, &[stream::MODEL]))?;
    let mut outcomes = Vec::new();
    for test in &tests {
        let rows = test.complete_rows()?;
        for (k, drug) in test.drugs().iter().enumerate() {
            let drug_rows: Vec<Vec<f64>> = test
                .drug_rows(k)
                .into_iter()
                .map(|i| rows[i].clone())
                .collect();
            let (observations, prediction) = model.predict_drug(&drug_rows)?;
            outcomes.push(DrugOutcome {
                drug: drug.id.clone(),
                truth: drug.label,
                observations,
                prediction,
            });
        }
    }
    Ok((outcomes, model.clamp_count()))
}

/// Impute the full table up front when running in leaky global mode.
pub(crate) fn prepare(dataset: &Dataset, opts: &EvalOptions, seed: u64) -> Result<Dataset> {
    if opts.imputation == ImputationMode::GlobalLeaky && dataset.has_missing() {
        let imputer = fit_imputer(
            dataset,
            opts.imputer_bags,
            derive_seed(seed, &[stream::GLOBAL_IMPUTE]),
        )?;
        imputer.impute(dataset)
    } else {
        Ok(dataset.clone())
    }
}

/// Leave-one-drug-out cross-validation.
pub fn lodo_cv(
    dataset: &Dataset,
    learner: &dyn BinaryLearner,
    opts: &EvalOptions,
    seed: u64,
) -> Result<EvaluationReport> {
    if dataset.n_drugs() < 2 {
        return Err(Error::InvalidArgument(
            "cross-validation needs at least two drugs".into(),
        ));
    }
    let dataset = prepare(dataset, opts, seed)?;
    let folds = (0..dataset.n_drugs())
        .into_par_iter()
        .map(|k| {
            let (train, test) = split_lodo(&dataset, k)?;
            run_fold(
                &train,
                &[test],
                learner,
                opts,
                derive_seed(seed, &[stream::FOLD, k as u64]),
            )
            .map_err(|e| Error::Fold {
                fold: k,
                drug: dataset.drugs()[k].id.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let clamps = folds.iter().map(|(_, c)| c).sum();
    let outcomes: Vec<DrugOutcome> = folds.into_iter().flat_map(|(o, _)| o).collect();
    Ok(EvaluationReport::from_outcomes(
        learner.name(),
        &outcomes,
        clamps,
    ))
}

/// Naive k-fold cross-validation over observations, ignoring drug grouping.
///
/// Observations of one drug land in both training and test folds. This is the
/// leaky contrast to [`lodo_cv`]; drug-level predictions average each drug's
/// held-out observation triples across folds.
pub fn observation_kfold_cv(
    dataset: &Dataset,
    learner: &dyn BinaryLearner,
    folds: usize,
    opts: &EvalOptions,
    seed: u64,
) -> Result<EvaluationReport> {
    let n = dataset.n_observations();
    if folds < 2 || folds > n {
        return Err(Error::InvalidArgument(format!(
            "{folds} folds for {n} observations"
        )));
    }
    let dataset = prepare(dataset, opts, seed)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, &[stream::KFOLD]));
    let fold_of: Vec<usize> = {
        let mut f = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            f[i] = pos % folds;
        }
        f
    };
    let results = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train_rows: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
            let test_rows: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
            let train = dataset.select_rows(&train_rows);
            let test = dataset.select_rows(&test_rows);
            let (outcomes, clamps) = run_fold(
                &train,
                &[test],
                learner,
                opts,
                derive_seed(seed, &[stream::FOLD, f as u64]),
            )?;
            Ok((outcomes, clamps))
        })
        .collect::<Result<Vec<_>>>()?;

    // regroup held-out observation predictions by drug in dataset order
    let mut per_drug: Vec<Vec<Prediction>> = vec![Vec::new(); dataset.n_drugs()];
    let mut clamps = 0;
    for (outcomes, c) in results {
        clamps += c;
        for o in outcomes {
            let k = dataset.drug_index(&o.drug).expect("drug from this dataset");
            per_drug[k].extend(o.observations);
        }
    }
    let outcomes = dataset
        .drugs()
        .iter()
        .zip(per_drug)
        .map(|(d, observations)| {
            let triples: Vec<_> = observations.iter().map(|p| p.probabilities).collect();
            Ok(DrugOutcome {
                drug: d.id.clone(),
                truth: d.label,
                prediction: aggregate_drug(&triples)?,
                observations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport::from_outcomes(
        learner.name(),
        &outcomes,
        clamps,
    ))
}
