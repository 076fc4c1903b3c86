use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lodo::{pool, prepare, run_fold, DrugOutcome, EvalOptions};
use super::stream;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learner::BinaryLearner;
use crate::metrics::MetricSet;
use crate::rng::derive_seed;

/// Metrics pooled over a subset of control-analysis folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlArm {
    pub n_drugs: usize,
    pub observations: MetricSet,
    pub drugs: MetricSet,
}

impl ControlArm {
    fn from_outcomes(outcomes: &[DrugOutcome]) -> Self {
        let (obs, drugs) = pool(outcomes);
        Self {
            n_drugs: outcomes.len(),
            observations: MetricSet::compute(&obs),
            drugs: MetricSet::compute(&drugs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlFold {
    pub test_drug: String,
    pub test_correct: bool,
    pub control_correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlReport {
    pub learner: String,
    pub control: String,
    pub folds: Vec<ControlFold>,
    /// Share of folds in which the control drug was predicted correctly.
    pub control_correct_rate: f64,
    pub without_control: ControlArm,
    /// `None` when the control was never predicted correctly.
    pub with_control: Option<ControlArm>,
}

/// For every drug other than `control`, train on the remaining drugs and
/// predict both the test drug and the control.
pub fn control_analysis(
    dataset: &Dataset,
    control: &str,
    learner: &dyn BinaryLearner,
    opts: &EvalOptions,
    seed: u64,
) -> Result<ControlReport> {
    let c = dataset
        .drug_index(control)
        .ok_or_else(|| Error::UnknownDrug(control.to_string()))?;
    if dataset.n_drugs() < 3 {
        return Err(Error::InvalidArgument(
            "control analysis needs at least three drugs".into(),
        ));
    }
    let dataset = prepare(dataset, opts, seed)?;
    let n = dataset.n_drugs();
    let results = (0..n)
        .filter(|&k| k != c)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| {
            let train: Vec<usize> = (0..n).filter(|&i| i != k && i != c).collect();
            let tests = [dataset.select_drugs(&[k]), dataset.select_drugs(&[c])];
            let (mut outcomes, _) = run_fold(
                &dataset.select_drugs(&train),
                &tests,
                learner,
                opts,
                derive_seed(seed, &[stream::FOLD, k as u64]),
            )
            .map_err(|e| Error::Fold {
                fold: k,
                drug: dataset.drugs()[k].id.clone(),
                source: Box::new(e),
            })?;
            let control_outcome = outcomes.pop().expect("control outcome");
            let test_outcome = outcomes.pop().expect("test outcome");
            Ok((test_outcome, control_outcome.is_correct()))
        })
        .collect::<Result<Vec<_>>>()?;

    let all: Vec<DrugOutcome> = results.iter().map(|(o, _)| o.clone()).collect();
    let kept: Vec<DrugOutcome> = results
        .iter()
        .filter(|(_, ok)| *ok)
        .map(|(o, _)| o.clone())
        .collect();
    let folds: Vec<ControlFold> = results
        .iter()
        .map(|(o, ok)| ControlFold {
            test_drug: o.drug.clone(),
            test_correct: o.is_correct(),
            control_correct: *ok,
        })
        .collect();
    Ok(ControlReport {
        learner: learner.name().to_string(),
        control: control.to_string(),
        control_correct_rate: kept.len() as f64 / folds.len() as f64,
        folds,
        without_control: ControlArm::from_outcomes(&all),
        with_control: (!kept.is_empty()).then(|| ControlArm::from_outcomes(&kept)),
    })
}
