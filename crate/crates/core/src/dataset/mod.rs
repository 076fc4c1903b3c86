//! Grouped tabular data: drugs with one ordinal risk label each and a
//! variable number of observations per drug.

mod io;
mod synthetic;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{infer_schema, load_csv, write_csv};
pub use synthetic::{generate_synthetic, Synthetic, SyntheticConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskCategory {
    Low,
    Intermediate,
    High,
}

impl RiskCategory {
    pub const ALL: [RiskCategory; 3] = [Self::Low, Self::Intermediate, Self::High];

    /// Ordinal rank: Low=1, Intermediate=2, High=3.
    pub fn rank(self) -> u8 {
        match self {
            Self::Low => 1,
            Self::Intermediate => 2,
            Self::High => 3,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Intermediate => "intermediate",
            Self::High => "high",
        }
    }
}

impl fmt::Display for RiskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for RiskCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Self::Low),
            "intermediate" => Ok(Self::Intermediate),
            "high" => Ok(Self::High),
            other => Err(Error::InvalidArgument(format!(
                "unknown risk token `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predictor {
    pub name: String,
    pub kind: PredictorKind,
}

impl Predictor {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: PredictorKind::Continuous,
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: PredictorKind::Binary,
        }
    }
}

/// Ordered, uniquely named predictor columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictorSchema {
    predictors: Vec<Predictor>,
}

impl PredictorSchema {
    pub fn new(predictors: Vec<Predictor>) -> Result<Self> {
        if predictors.is_empty() {
            return Err(Error::Schema("at least one predictor is required".into()));
        }
        let mut seen = HashMap::new();
        for (i, p) in predictors.iter().enumerate() {
            if p.name.is_empty() {
                return Err(Error::Schema(format!("predictor {i} has an empty name")));
            }
            if p.name == "drug" || p.name == "risk" {
                return Err(Error::Schema(format!(
                    "predictor name `{}` is reserved",
                    p.name
                )));
            }
            if seen.insert(p.name.as_str(), i).is_some() {
                return Err(Error::Schema(format!("duplicate predictor `{}`", p.name)));
            }
        }
        Ok(Self { predictors })
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }

    pub fn predictors(&self) -> &[Predictor] {
        &self.predictors
    }

    pub fn get(&self, j: usize) -> &Predictor {
        &self.predictors[j]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.predictors.iter().map(|p| p.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.predictors.iter().position(|p| p.name == name)
    }

    /// Schema with extra predictors appended.
    pub fn extended(&self, extra: impl IntoIterator<Item = Predictor>) -> Result<Self> {
        let mut predictors = self.predictors.clone();
        predictors.extend(extra);
        Self::new(predictors)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Drug {
    pub id: String,
    pub label: RiskCategory,
}

/// One row: an index into the dataset's drug list and `P` cells, `None` when missing.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub drug: usize,
    pub values: Vec<Option<f64>>,
}

impl Observation {
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

/// An immutable grouped table. Rows keep their insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: PredictorSchema,
    drugs: Vec<Drug>,
    observations: Vec<Observation>,
}

impl Dataset {
    pub fn new(
        schema: PredictorSchema,
        drugs: Vec<Drug>,
        observations: Vec<Observation>,
    ) -> Result<Self> {
        let mut ids = HashMap::new();
        for (k, d) in drugs.iter().enumerate() {
            if ids.insert(d.id.as_str(), k).is_some() {
                return Err(Error::Schema(format!("drug `{}` listed twice", d.id)));
            }
        }
        let mut counts = vec![0usize; drugs.len()];
        for (i, obs) in observations.iter().enumerate() {
            if obs.drug >= drugs.len() {
                return Err(Error::Schema(format!(
                    "observation {i} refers to unknown drug"
                )));
            }
            if obs.values.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "observation {i} has {} values, schema has {}",
                    obs.values.len(),
                    schema.len()
                )));
            }
            for (j, v) in obs.values.iter().enumerate() {
                if let Some(v) = v {
                    check_cell(schema.get(j), *v)
                        .map_err(|m| Error::Schema(format!("observation {i}: {m}")))?;
                }
            }
            counts[obs.drug] += 1;
        }
        if let Some(k) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Schema(format!(
                "drug `{}` has no observations",
                drugs[k].id
            )));
        }
        Ok(Self {
            schema,
            drugs,
            observations,
        })
    }

    pub fn schema(&self) -> &PredictorSchema {
        &self.schema
    }

    pub fn drugs(&self) -> &[Drug] {
        &self.drugs
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn n_drugs(&self) -> usize {
        self.drugs.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn n_predictors(&self) -> usize {
        self.schema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drugs.is_empty()
    }

    pub fn drug_index(&self, id: &str) -> Option<usize> {
        self.drugs.iter().position(|d| d.id == id)
    }

    /// Per-drug observation counts `J_k`, in drug order.
    pub fn drug_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.drugs.len()];
        for obs in &self.observations {
            counts[obs.drug] += 1;
        }
        counts
    }

    /// Row indices belonging to drug `k`, in stored order.
    pub fn drug_rows(&self, k: usize) -> Vec<usize> {
        self.observations
            .iter()
            .enumerate()
            .filter(|(_, o)| o.drug == k)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn observation_label(&self, i: usize) -> RiskCategory {
        self.drugs[self.observations[i].drug].label
    }

    pub fn observation_labels(&self) -> Vec<RiskCategory> {
        self.observations
            .iter()
            .map(|o| self.drugs[o.drug].label)
            .collect()
    }

    pub fn has_missing(&self) -> bool {
        self.observations.iter().any(|o| !o.is_complete())
    }

    pub fn missing_count(&self) -> usize {
        self.observations
            .iter()
            .map(|o| o.values.iter().filter(|v| v.is_none()).count())
            .sum()
    }

    /// Dense row matrix; fails if any cell is missing.
    pub fn complete_rows(&self) -> Result<Vec<Vec<f64>>> {
        self.observations
            .iter()
            .map(|o| {
                o.values
                    .iter()
                    .map(|v| v.ok_or(Error::MissingValues))
                    .collect()
            })
            .collect()
    }

    /// Keep the given drugs (by index, in the given order) and their rows.
    pub fn select_drugs(&self, keep: &[usize]) -> Dataset {
        let mut remap = vec![None; self.drugs.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = Some(new);
        }
        let drugs = keep.iter().map(|&k| self.drugs[k].clone()).collect();
        let observations = self
            .observations
            .iter()
            .filter_map(|o| {
                remap[o.drug].map(|d| Observation {
                    drug: d,
                    values: o.values.clone(),
                })
            })
            .collect();
        Dataset {
            schema: self.schema.clone(),
            drugs,
            observations,
        }
    }

    /// Keep the given rows (by index, in the given order). Drugs left without
    /// rows are dropped; the remaining drugs keep their relative order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let mut used = vec![false; self.drugs.len()];
        for &i in rows {
            used[self.observations[i].drug] = true;
        }
        let mut remap = vec![usize::MAX; self.drugs.len()];
        let mut drugs = Vec::new();
        for (k, d) in self.drugs.iter().enumerate() {
            if used[k] {
                remap[k] = drugs.len();
                drugs.push(d.clone());
            }
        }
        let observations = rows
            .iter()
            .map(|&i| {
                let o = &self.observations[i];
                Observation {
                    drug: remap[o.drug],
                    values: o.values.clone(),
                }
            })
            .collect();
        Dataset {
            schema: self.schema.clone(),
            drugs,
            observations,
        }
    }

    /// Drop drugs by id. Unknown ids are an error.
    pub fn without_drugs(&self, ids: &[String]) -> Result<Dataset> {
        let mut drop = vec![false; self.drugs.len()];
        for id in ids {
            let k = self
                .drug_index(id)
                .ok_or_else(|| Error::UnknownDrug(id.clone()))?;
            drop[k] = true;
        }
        let keep: Vec<usize> = (0..self.drugs.len()).filter(|&k| !drop[k]).collect();
        Ok(self.select_drugs(&keep))
    }

    /// Same rows, new per-drug labels (in drug order).
    pub fn with_labels(&self, labels: &[RiskCategory]) -> Result<Dataset> {
        if labels.len() != self.drugs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} drugs",
                labels.len(),
                self.drugs.len()
            )));
        }
        let mut out = self.clone();
        for (d, &l) in out.drugs.iter_mut().zip(labels) {
            d.label = l;
        }
        Ok(out)
    }

    /// Same drugs, replaced rows. Used by resampling and imputation.
    pub fn with_observations(&self, observations: Vec<Observation>) -> Result<Dataset> {
        Dataset::new(self.schema.clone(), self.drugs.clone(), observations)
    }

    /// Append predictor columns; `values[i]` holds the new cells for row `i`.
    pub fn with_extra_columns(
        &self,
        extra: Vec<Predictor>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Dataset> {
        if values.len() != self.observations.len() {
            return Err(Error::InvalidArgument(
                "one value row per observation required".into(),
            ));
        }
        let schema = self.schema.extended(extra)?;
        let observations = self
            .observations
            .iter()
            .zip(values)
            .map(|(o, extra)| {
                let mut values = o.values.clone();
                values.extend(extra);
                Observation {
                    drug: o.drug,
                    values,
                }
            })
            .collect();
        Dataset::new(schema, self.drugs.clone(), observations)
    }

    pub fn category_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for d in &self.drugs {
            counts[d.label.rank() as usize - 1] += 1;
        }
        counts
    }
}

pub(crate) fn check_cell(p: &Predictor, v: f64) -> std::result::Result<(), String> {
    if !v.is_finite() {
        return Err(format!("non-finite value in `{}`", p.name));
    }
    if p.kind == PredictorKind::Binary && v != 0.0 && v != 1.0 {
        return Err(format!("binary column `{}` holds {v}", p.name));
    }
    Ok(())
}

/// Leave-one-drug-out split: `test` holds drug `k`, `train` the rest.
///
/// A single-drug dataset yields an empty `train`; callers can check
/// [`Dataset::is_empty`] and the downstream fit will refuse it.
pub fn split_lodo(dataset: &Dataset, k: usize) -> Result<(Dataset, Dataset)> {
    if k >= dataset.n_drugs() {
        return Err(Error::InvalidArgument(format!(
            "drug index {k} out of range for {} drugs",
            dataset.n_drugs()
        )));
    }
    let train: Vec<usize> = (0..dataset.n_drugs()).filter(|&i| i != k).collect();
    Ok((dataset.select_drugs(&train), dataset.select_drugs(&[k])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let schema =
            PredictorSchema::new(vec![Predictor::continuous("a"), Predictor::binary("b")]).unwrap();
        let drugs = vec![
            Drug {
                id: "d1".into(),
                label: RiskCategory::Low,
            },
            Drug {
                id: "d2".into(),
                label: RiskCategory::High,
            },
            Drug {
                id: "d3".into(),
                label: RiskCategory::Intermediate,
            },
        ];
        let obs = vec![
            Observation {
                drug: 0,
                values: vec![Some(1.0), Some(0.0)],
            },
            Observation {
                drug: 1,
                values: vec![Some(2.0), None],
            },
            Observation {
                drug: 0,
                values: vec![None, Some(1.0)],
            },
            Observation {
                drug: 2,
                values: vec![Some(3.0), Some(1.0)],
            },
        ];
        Dataset::new(schema, drugs, obs).unwrap()
    }

    #[test]
    fn risk_order_and_rank() {
        assert!(RiskCategory::Low < RiskCategory::Intermediate);
        assert!(RiskCategory::Intermediate < RiskCategory::High);
        let ranks: Vec<u8> = RiskCategory::ALL.iter().map(|r| r.rank()).collect();
        assert_eq!(ranks, vec![1, 2, 3]);
        assert_eq!("HIGH".parse::<RiskCategory>().unwrap(), RiskCategory::High);
        assert!("medium".parse::<RiskCategory>().is_err());
    }

    #[test]
    fn schema_rejects_duplicates_and_empty() {
        assert!(PredictorSchema::new(vec![]).is_err());
        assert!(
            PredictorSchema::new(vec![Predictor::continuous("a"), Predictor::continuous("a")])
                .is_err()
        );
        assert!(PredictorSchema::new(vec![Predictor::continuous("")]).is_err());
    }

    #[test]
    fn dataset_validates_binary_cells() {
        let schema = PredictorSchema::new(vec![Predictor::binary("b")]).unwrap();
        let drugs = vec![Drug {
            id: "d".into(),
            label: RiskCategory::Low,
        }];
        let obs = vec![Observation {
            drug: 0,
            values: vec![Some(0.5)],
        }];
        assert!(Dataset::new(schema, drugs, obs).is_err());
    }

    #[test]
    fn drug_without_rows_is_rejected() {
        let schema = PredictorSchema::new(vec![Predictor::continuous("a")]).unwrap();
        let drugs = vec![
            Drug {
                id: "d".into(),
                label: RiskCategory::Low,
            },
            Drug {
                id: "e".into(),
                label: RiskCategory::Low,
            },
        ];
        let obs = vec![Observation {
            drug: 0,
            values: vec![Some(0.5)],
        }];
        assert!(Dataset::new(schema, drugs, obs).is_err());
    }

    #[test]
    fn lodo_split_partitions_drugs() {
        let ds = tiny();
        let mut seen = Vec::new();
        for k in 0..ds.n_drugs() {
            let (train, test) = split_lodo(&ds, k).unwrap();
            assert_eq!(test.n_drugs(), 1);
            assert_eq!(train.n_drugs(), ds.n_drugs() - 1);
            assert_eq!(
                train.n_observations() + test.n_observations(),
                ds.n_observations()
            );
            assert!(train.drug_index(&test.drugs()[0].id).is_none());
            seen.push(test.drugs()[0].id.clone());
        }
        let ids: Vec<String> = ds.drugs().iter().map(|d| d.id.clone()).collect();
        assert_eq!(seen, ids);
        assert!(split_lodo(&ds, 3).is_err());
    }

    #[test]
    fn single_drug_split_has_empty_train() {
        let ds = tiny().select_drugs(&[1]);
        let (train, test) = split_lodo(&ds, 0).unwrap();
        assert!(train.is_empty());
        assert_eq!(train.n_observations(), 0);
        assert_eq!(test.n_observations(), 1);
    }

    #[test]
    fn counts_and_missing() {
        let ds = tiny();
        assert_eq!(ds.drug_counts(), vec![2, 1, 1]);
        assert_eq!(ds.drug_rows(0), vec![0, 2]);
        assert_eq!(ds.missing_count(), 2);
        assert!(ds.complete_rows().is_err());
        assert_eq!(ds.category_counts(), [1, 1, 1]);
    }
}
