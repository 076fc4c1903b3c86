//! Bagged-tree imputation of missing predictor cells.
//!
//! For each target column an ensemble of trees is grown on bootstrap
//! resamples of the complete-case rows, predicting that column from all the
//! other predictors. Risk labels are never read. Continuous columns take the
//! ensemble mean, binary columns the majority vote (ties impute 1). Inputs
//! that are themselves missing are replaced by the column fallback (mean, or
//! mode for binary columns) before the ensemble is consulted.

use rand::Rng;
use rayon::prelude::*;

use crate::cart::{grow_tree, DecisionTree, TreeMode, TreeParams};
use crate::dataset::{Dataset, Observation, PredictorKind, PredictorSchema};
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_BAGS: usize = 25;
pub const LEAF_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnEnsemble {
    pub column: usize,
    pub kind: PredictorKind,
    pub trees: Vec<DecisionTree>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaggedTreeImputer {
    schema: PredictorSchema,
    bags: usize,
    fallbacks: Vec<f64>,
    ensembles: Vec<ColumnEnsemble>,
}

/// Binary majority rule: positive when at least half the votes are positive.
pub fn majority_vote(positive: usize, total: usize) -> f64 {
    if 2 * positive >= total {
        1.0
    } else {
        0.0
    }
}

fn fallback(kind: PredictorKind, observed: &[f64]) -> f64 {
    match kind {
        PredictorKind::Continuous => observed.iter().sum::<f64>() / observed.len() as f64,
        PredictorKind::Binary => {
            let ones = observed.iter().filter(|&&v| v == 1.0).count();
            majority_vote(ones, observed.len())
        }
    }
}

/// Fit ensembles for every column that has a missing cell in `dataset`.
pub fn fit_imputer(dataset: &Dataset, bags: usize, seed: u64) -> Result<BaggedTreeImputer> {
    let mut targets = vec![false; dataset.n_predictors()];
    for obs in dataset.observations() {
        for (j, v) in obs.values.iter().enumerate() {
            targets[j] |= v.is_none();
        }
    }
    let targets: Vec<usize> = (0..targets.len()).filter(|&j| targets[j]).collect();
    fit_imputer_columns(dataset, &targets, bags, seed)
}

/// Fit ensembles for the given target columns. Used when the rows to be
/// imputed later have gaps in columns that are complete in `dataset`.
pub fn fit_imputer_columns(
    dataset: &Dataset,
    targets: &[usize],
    bags: usize,
    seed: u64,
) -> Result<BaggedTreeImputer> {
    if bags == 0 {
        return Err(Error::InvalidArgument(
            "bag count must be at least 1".into(),
        ));
    }
    let schema = dataset.schema().clone();
    let p = schema.len();
    if let Some(&bad) = targets.iter().find(|&&j| j >= p) {
        return Err(Error::InvalidArgument(format!("column {bad} out of range")));
    }

    let mut fallbacks = Vec::with_capacity(p);
    for j in 0..p {
        let observed: Vec<f64> = dataset
            .observations()
            .iter()
            .filter_map(|o| o.values[j])
            .collect();
        if observed.is_empty() {
            return Err(Error::ColumnAllMissing(schema.get(j).name.clone()));
        }
        fallbacks.push(fallback(schema.get(j).kind, &observed));
    }

    let complete: Vec<Vec<f64>> = dataset
        .observations()
        .iter()
        .filter(|o| o.is_complete())
        .map(|o| o.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect())
        .collect();

    let ensembles = if complete.is_empty() || p < 2 {
        Vec::new()
    } else {
        targets
            .par_iter()
            .map(|&c| {
                let kind = schema.get(c).kind;
                let mode = match kind {
                    PredictorKind::Continuous => TreeMode::Regress,
                    PredictorKind::Binary => TreeMode::Classify,
                };
                let params = TreeParams {
                    mode,
                    leaf_size: LEAF_SIZE,
                    feature_subset_size: p - 1,
                };
                let n = complete.len();
                let trees = (0..bags)
                    .map(|b| {
                        let mut rng = rng::stream(seed, &[c as u64, b as u64]);
                        let (x, y): (Vec<Vec<f64>>, Vec<f64>) = (0..n)
                            .map(|_| {
                                let row = &complete[rng.random_range(0..n)];
                                (without(row, c), row[c])
                            })
                            .unzip();
                        grow_tree(&x, &y, params, &mut rng)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ColumnEnsemble {
                    column: c,
                    kind,
                    trees,
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(BaggedTreeImputer {
        schema,
        bags,
        fallbacks,
        ensembles,
    })
}

fn without(row: &[f64], c: usize) -> Vec<f64> {
    row.iter()
        .enumerate()
        .filter(|&(j, _)| j != c)
        .map(|(_, &v)| v)
        .collect()
}

impl BaggedTreeImputer {
    pub fn bags(&self) -> usize {
        self.bags
    }

    pub fn fallbacks(&self) -> &[f64] {
        &self.fallbacks
    }

    pub fn ensembles(&self) -> &[ColumnEnsemble] {
        &self.ensembles
    }

    fn ensemble(&self, c: usize) -> Option<&ColumnEnsemble> {
        self.ensembles.iter().find(|e| e.column == c)
    }

    fn impute_cell(&self, obs: &Observation, c: usize) -> f64 {
        let Some(ens) = self.ensemble(c).filter(|e| !e.trees.is_empty()) else {
            return self.fallbacks[c];
        };
        let x: Vec<f64> = obs
            .values
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != c)
            .map(|(j, v)| v.unwrap_or(self.fallbacks[j]))
            .collect();
        match ens.kind {
            PredictorKind::Continuous => {
                ens.trees.iter().map(|t| t.predict(&x)).sum::<f64>() / ens.trees.len() as f64
            }
            PredictorKind::Binary => {
                let votes = ens.trees.iter().filter(|t| t.vote(&x)).count();
                majority_vote(votes, ens.trees.len())
            }
        }
    }

    /// Fill every missing cell; observed cells are copied unchanged.
    pub fn impute(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.schema() != &self.schema {
            return Err(Error::Schema(
                "dataset schema differs from the imputer's".into(),
            ));
        }
        let observations = dataset
            .observations()
            .iter()
            .map(|obs| {
                let values = (0..obs.values.len())
                    .map(|c| Some(obs.values[c].unwrap_or_else(|| self.impute_cell(obs, c))))
                    .collect();
                Observation {
                    drug: obs.drug,
                    values,
                }
            })
            .collect();
        dataset.with_observations(observations)
    }
}

/// Columns with at least one missing cell in any of `datasets`.
pub fn missing_columns(datasets: &[&Dataset]) -> Vec<usize> {
    let p = datasets.first().map_or(0, |d| d.n_predictors());
    (0..p)
        .filter(|&j| {
            datasets
                .iter()
                .any(|d| d.observations().iter().any(|o| o.values[j].is_none()))
        })
        .collect()
}
