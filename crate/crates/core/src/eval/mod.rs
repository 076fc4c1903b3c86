//! Experiment drivers: leave-one-drug-out cross-validation, stratified
//! bootstrap, outlier and sensitivity analysis, control analysis and
//! permutation predictor importance.
//!
//! Every driver is a pure function of its inputs and seed. Folds, replicates
//! and permutation cells run in parallel on the ambient rayon pool, each with
//! a random stream derived from the master seed and its own index.

mod bootstrap;
mod control;
mod importance;
mod lodo;
mod outliers;

pub use bootstrap::{
    percentile, replicate_dataset, stratified_bootstrap, stratified_resample, BootstrapReport,
    MetricSummary, ReplicateReport, SummaryRow,
};
pub use control::{control_analysis, ControlArm, ControlFold, ControlReport};
pub use importance::{
    baseline_from_bootstrap, permutation_importance, ImportanceReport, PredictorImportance,
    DEFAULT_REPETITIONS,
};
pub use lodo::{
    lodo_cv, observation_kfold_cv, run_fold, DrugOutcome, DrugResult, EvalOptions,
    EvaluationReport, ImputationMode, Level,
};
pub use outliers::{detect_outliers, sensitivity, DrugRate, OutlierDrug, SensitivityArm};

pub(crate) mod stream {
    //! Fixed sub-stream tags so that different uses of one seed never collide.
    pub const FOLD: u64 = 1;
    pub const IMPUTE: u64 = 2;
    pub const MODEL: u64 = 3;
    pub const RESAMPLE: u64 = 4;
    pub const REPLICATE: u64 = 5;
    pub const PERMUTE: u64 = 6;
    pub const GLOBAL_IMPUTE: u64 = 7;
    pub const KFOLD: u64 = 8;
}
