//! Random forest binary classifier. Each tree is grown on its own bootstrap
//! resample with leaf size 1 and `floor(sqrt(P))` candidate predictors per
//! split; the probability of the positive class is the fraction of trees
//! whose leaf votes positive.

use rand::Rng;
use rayon::prelude::*;

use crate::cart::{grow_tree, DecisionTree, TreeMode, TreeParams};
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_TREES: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    feature_subset_size: usize,
    n_features: usize,
    seed: u64,
}

/// `floor(sqrt(P))`, at least 1.
pub fn feature_subset_size(p: usize) -> usize {
    p.isqrt().max(1)
}

pub fn fit_forest(
    rows: &[Vec<f64>],
    labels: &[bool],
    n_trees: usize,
    seed: u64,
) -> Result<RandomForest> {
    if rows.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if rows.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    if n_trees == 0 {
        return Err(Error::InvalidArgument(
            "forest needs at least one tree".into(),
        ));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass("random forest".into()));
    }
    let n = rows.len();
    let p = rows[0].len();
    let params = TreeParams {
        mode: TreeMode::Classify,
        leaf_size: 1,
        feature_subset_size: feature_subset_size(p),
    };
    let trees = (0..n_trees)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(seed, &[b as u64]);
            let (sample_rows, targets): (Vec<Vec<f64>>, Vec<f64>) = (0..n)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    (rows[i].clone(), f64::from(u8::from(labels[i])))
                })
                .unzip();
            grow_tree(&sample_rows, &targets, params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RandomForest {
        trees,
        feature_subset_size: params.feature_subset_size,
        n_features: p,
        seed,
    })
}

impl RandomForest {
    /// Build from pre-grown trees (mainly for tests and tooling).
    pub fn from_trees(trees: Vec<DecisionTree>, seed: u64) -> Result<Self> {
        let first = trees
            .first()
            .ok_or_else(|| Error::InvalidArgument("forest needs at least one tree".into()))?;
        let n_features = first.n_features();
        if trees
            .iter()
            .any(|t| t.n_features() != n_features || t.mode() != TreeMode::Classify)
        {
            return Err(Error::InvalidArgument(
                "trees disagree on shape or mode".into(),
            ));
        }
        Ok(Self {
            feature_subset_size: feature_subset_size(n_features),
            n_features,
            seed,
            trees,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_subset_size(&self) -> usize {
        self.feature_subset_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn positive_votes(&self, x: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.vote(x)).count()
    }

    /// Vote fraction in `[0, 1]`, a multiple of `1 / B`.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.positive_votes(x) as f64 / self.trees.len() as f64
    }

    /// Majority vote; an exact 50/50 split goes to the positive class.
    pub fn predict(&self, x: &[f64]) -> bool {
        self.predict_proba(x) >= 0.5
    }
}
