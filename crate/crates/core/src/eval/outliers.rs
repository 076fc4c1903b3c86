use serde::{Deserialize, Serialize};

use super::lodo::{lodo_cv, EvalOptions, EvaluationReport};
use crate::dataset::{Dataset, RiskCategory};
use crate::error::{Error, Result};
use crate::learner::BinaryLearner;

/// Bootstrap correct rate of one drug under one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugRate {
    pub drug: String,
    pub truth: RiskCategory,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierDrug {
    pub drug: String,
    pub truth: RiskCategory,
    pub rate_a: f64,
    pub rate_b: f64,
    pub average: f64,
}

/// Drugs whose correct rate is below `threshold` under both models.
///
/// Both rate lists must cover the same drugs; output follows the order of `a`.
pub fn detect_outliers(a: &[DrugRate], b: &[DrugRate], threshold: f64) -> Result<Vec<OutlierDrug>> {
    if !threshold.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "outlier threshold {threshold}"
        )));
    }
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "rate lists cover {} and {} drugs",
            a.len(),
            b.len()
        )));
    }
    let mut out = Vec::new();
    for ra in a {
        let rb = b.iter().find(|r| r.drug == ra.drug).ok_or_else(|| {
            Error::InvalidArgument(format!("drug `{}` missing from second rate list", ra.drug))
        })?;
        if ra.rate < threshold && rb.rate < threshold {
            out.push(OutlierDrug {
                drug: ra.drug.clone(),
                truth: ra.truth,
                rate_a: ra.rate,
                rate_b: rb.rate,
                average: (ra.rate + rb.rate) / 2.0,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityArm {
    pub learner: String,
    pub before: EvaluationReport,
    pub after: EvaluationReport,
}

/// Rerun LODO-CV for each learner with the `outliers` removed.
///
/// Both runs use the same seed, so an empty outlier list reproduces `before`.
pub fn sensitivity(
    dataset: &Dataset,
    outliers: &[String],
    learners: &[&dyn BinaryLearner],
    opts: &EvalOptions,
    seed: u64,
) -> Result<Vec<SensitivityArm>> {
    let reduced = dataset.without_drugs(outliers)?;
    let counts = reduced.category_counts();
    for (c, n) in RiskCategory::ALL.into_iter().zip(counts) {
        if n == 0 {
            return Err(Error::EmptyCategory(c));
        }
    }
    learners
        .iter()
        .map(|l| {
            Ok(SensitivityArm {
                learner: l.name().to_string(),
                before: lodo_cv(dataset, *l, opts, seed)?,
                after: lodo_cv(&reduced, *l, opts, seed)?,
            })
        })
        .collect()
}
