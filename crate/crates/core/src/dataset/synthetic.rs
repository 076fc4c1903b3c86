//! Planted-signal generator standing in for real assay tables.
//!
//! Each drug draws a latent score inside its category band
//! (Low around -2, Intermediate around 0, High around +2, each band one unit
//! wide), plus a per-drug random effect per predictor with sd `noise_sd / 2`.
//! Every observation adds independent Gaussian noise with sd `noise_sd`.
//!
//! Columns:
//!
//! | index | name       | linear mode            | nonlinear mode                   |
//! |-------|------------|------------------------|----------------------------------|
//! | 0     | `signal_a` | `g` (dominant)         | `s * r`, random sign `s`, `r~U[1,2]` |
//! | 1     | `signal_b` | `0.5 g + 1`            | `s * g`                          |
//! | 2     | `signal_c` | `-0.25 g`              | `g^2`                            |
//! | 3     | `flag`     | `1{g + e > 0}` binary  | `1{s * r + e > 0}` binary        |
//! | 4     | `noise`    | `N(0, 1)`, independent of everything | same               |
//!
//! In nonlinear mode every column is either symmetric in the category or a
//! sign-by-latent product, so no affine function of the predictors separates
//! the categories while axis-aligned trees can.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, Drug, Observation, Predictor, PredictorSchema, RiskCategory};
use crate::error::{Error, Result};
use crate::rng;

pub const NOISE_COLUMN: usize = 4;
pub const DOMINANT_COLUMN: usize = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Drugs per risk category.
    pub per_category: usize,
    pub obs_per_drug: usize,
    pub noise_sd: f64,
    pub nonlinear: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            per_category: 6,
            obs_per_drug: 8,
            noise_sd: 0.5,
            nonlinear: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// Column with no relation to the label.
    pub noise_column: usize,
    /// Column carrying the strongest signal in linear mode.
    pub dominant_column: usize,
}

fn band_center(c: RiskCategory) -> f64 {
    match c {
        RiskCategory::Low => -2.0,
        RiskCategory::Intermediate => 0.0,
        RiskCategory::High => 2.0,
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Synthetic> {
    if cfg.per_category == 0 || cfg.obs_per_drug == 0 {
        return Err(Error::InvalidArgument(
            "synthetic counts must be at least 1".into(),
        ));
    }
    if !(cfg.noise_sd >= 0.0 && cfg.noise_sd.is_finite()) {
        return Err(Error::InvalidArgument(
            "noise_sd must be a non-negative number".into(),
        ));
    }
    let schema = PredictorSchema::new(vec![
        Predictor::continuous("signal_a"),
        Predictor::continuous("signal_b"),
        Predictor::continuous("signal_c"),
        Predictor::binary("flag"),
        Predictor::continuous("noise"),
    ])?;
    let mut rng = rng::stream(cfg.seed, &[0x5EED]);
    let sd = cfg.noise_sd;
    let drug_sd = 0.5 * sd;
    let mut drugs = Vec::new();
    let mut observations = Vec::new();
    for category in RiskCategory::ALL {
        for i in 0..cfg.per_category {
            let k = drugs.len();
            drugs.push(Drug {
                id: format!("{}_{:02}", category.token(), i + 1),
                label: category,
            });
            let g = band_center(category) + rng.random_range(-0.5..0.5);
            let effect: [f64; 4] = std::array::from_fn(|_| drug_sd * normal(&mut rng));
            for _ in 0..cfg.obs_per_drug {
                let e: [f64; 4] = std::array::from_fn(|_| sd * normal(&mut rng));
                let pure_noise = normal(&mut rng);
                let values = if cfg.nonlinear {
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    let r = rng.random_range(1.0..2.0);
                    let gb = g + effect[1];
                    let gc = g + effect[2];
                    [
                        sign * r + effect[0] + e[0],
                        sign * gb + e[1],
                        gc * gc + e[2],
                        f64::from(u8::from(sign * r + effect[3] + e[3] > 0.0)),
                        pure_noise,
                    ]
                } else {
                    [
                        g + effect[0] + e[0],
                        0.5 * g + 1.0 + effect[1] + e[1],
                        -0.25 * g + effect[2] + e[2],
                        f64::from(u8::from(g + effect[3] + e[3] > 0.0)),
                        pure_noise,
                    ]
                };
                observations.push(Observation {
                    drug: k,
                    values: values.map(Some).to_vec(),
                });
            }
        }
    }
    Ok(Synthetic {
        dataset: Dataset::new(schema, drugs, observations)?,
        noise_column: NOISE_COLUMN,
        dominant_column: DOMINANT_COLUMN,
    })
}
