//! Three-category accuracy, the two ordinal AUROCs and the concordance index.
//!
//! AUROC uses midranks (Mann-Whitney U), so tied scores count one half.
//! The concordance index scores each unit by its expected rank
//! `1 pL + 2 pM + 3 pH`; pairs with different true categories are comparable,
//! a pair is concordant when the riskier unit has the strictly higher score
//! and tied scores count one half.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::RiskCategory;
use crate::error::{Error, Result};
use crate::ordinal::RiskProbabilities;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitPrediction {
    pub id: String,
    pub truth: RiskCategory,
    pub probabilities: RiskProbabilities,
    pub predicted: RiskCategory,
}

impl UnitPrediction {
    pub fn is_correct(&self) -> bool {
        self.truth == self.predicted
    }
}

/// Predictions for a set of units (observations or drugs) with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    units: Vec<UnitPrediction>,
}

impl PredictionSet {
    pub fn new(units: Vec<UnitPrediction>) -> Result<Self> {
        let mut seen = HashSet::new();
        for u in &units {
            if !seen.insert(u.id.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate unit id `{}`",
                    u.id
                )));
            }
        }
        Ok(Self { units })
    }

    pub fn units(&self) -> &[UnitPrediction] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cut {
    /// High vs Intermediate-or-Low, scored by `pH`.
    #[serde(rename = "h_vs_ml")]
    HighVsRest,
    /// High-or-Intermediate vs Low, scored by `1 - pL`.
    #[serde(rename = "hm_vs_l")]
    RestVsLow,
}

pub fn binarize(preds: &PredictionSet, cut: Cut) -> (Vec<f64>, Vec<bool>) {
    preds
        .units
        .iter()
        .map(|u| match cut {
            Cut::HighVsRest => (u.probabilities.high, u.truth == RiskCategory::High),
            Cut::RestVsLow => (u.probabilities.mid_or_high(), u.truth != RiskCategory::Low),
        })
        .unzip()
}

pub fn accuracy3(preds: &PredictionSet) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::InvalidArgument(
            "accuracy of an empty prediction set".into(),
        ));
    }
    let correct = preds.units.iter().filter(|u| u.is_correct()).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Area under the ROC curve via the rank-sum statistic.
pub fn auroc(scores: &[f64], positives: &[bool]) -> Result<f64> {
    if scores.len() != positives.len() {
        return Err(Error::InvalidArgument(
            "scores and labels differ in length".into(),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("AUROC score".into()));
    }
    let n_pos = positives.iter().filter(|&&p| p).count();
    let n_neg = positives.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("AUROC".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the positive rank sum, kept integral
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j share the midrank (i + 1 + j) / 2
        let twice_mid = (i + 1 + j) as u128;
        let pos_in_group = order[i..j].iter().filter(|&&k| positives[k]).count() as u128;
        twice_rank_sum += twice_mid * pos_in_group;
        i = j;
    }
    let n_pos = n_pos as u128;
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg as u128) as f64)
}

/// Concordance of `scores` with ordinal `ranks` over all pairs of differing rank.
pub fn concordance_from_scores(scores: &[f64], ranks: &[u8]) -> Result<f64> {
    if scores.len() != ranks.len() {
        return Err(Error::InvalidArgument(
            "scores and ranks differ in length".into(),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("concordance score".into()));
    }
    let mut groups: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for (&s, &r) in scores.iter().zip(ranks) {
        groups.entry(r).or_default().push(s);
    }
    for g in groups.values_mut() {
        g.sort_by(f64::total_cmp);
    }
    let groups: Vec<&Vec<f64>> = groups.values().collect();
    let (mut twice_good, mut comparable) = (0u128, 0u128);
    for (a, lower) in groups.iter().enumerate() {
        for higher in &groups[a + 1..] {
            comparable += (lower.len() * higher.len()) as u128;
            for &s in higher.iter() {
                let below = lower.partition_point(|&v| v < s);
                let not_above = lower.partition_point(|&v| v <= s);
                twice_good += (2 * below + (not_above - below)) as u128;
            }
        }
    }
    if comparable == 0 {
        return Err(Error::InvalidArgument(
            "no comparable pairs for concordance".into(),
        ));
    }
    Ok(twice_good as f64 / (2 * comparable) as f64)
}

pub fn concordance_index(preds: &PredictionSet) -> Result<f64> {
    let scores: Vec<f64> = preds
        .units
        .iter()
        .map(|u| u.probabilities.expected_rank())
        .collect();
    let ranks: Vec<u8> = preds.units.iter().map(|u| u.truth.rank()).collect();
    concordance_from_scores(&scores, &ranks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    AurocHVsMl,
    AurocHmVsL,
    Concordance,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Accuracy,
        Metric::AurocHVsMl,
        Metric::AurocHmVsL,
        Metric::Concordance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::AurocHVsMl => "auroc_h_vs_ml",
            Metric::AurocHmVsL => "auroc_hm_vs_l",
            Metric::Concordance => "concordance",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The four measurements on one prediction set. `None` marks a measurement
/// that is undefined for the set (e.g. an AUROC with one class present).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: Option<f64>,
    pub auroc_h_vs_ml: Option<f64>,
    pub auroc_hm_vs_l: Option<f64>,
    pub concordance: Option<f64>,
}

impl MetricSet {
    pub fn compute(preds: &PredictionSet) -> Self {
        let cut = |c| {
            let (s, p) = binarize(preds, c);
            auroc(&s, &p).ok()
        };
        Self {
            accuracy: accuracy3(preds).ok(),
            auroc_h_vs_ml: cut(Cut::HighVsRest),
            auroc_hm_vs_l: cut(Cut::RestVsLow),
            concordance: concordance_index(preds).ok(),
        }
    }

    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Accuracy => self.accuracy,
            Metric::AurocHVsMl => self.auroc_h_vs_ml,
            Metric::AurocHmVsL => self.auroc_hm_vs_l,
            Metric::Concordance => self.concordance,
        }
    }
}
