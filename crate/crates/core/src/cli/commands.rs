//! One function per subcommand.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::output::{cell, read_json, write_csv, write_json, write_text};
use super::svg;
use crate::dataset::{
    generate_synthetic, infer_schema, load_csv, write_csv as write_dataset, Dataset, RiskCategory,
    SyntheticConfig,
};
use crate::error::{Error, Result};
use crate::eval::{
    control_analysis, detect_outliers, lodo_cv, permutation_importance, sensitivity as rerun,
    stratified_bootstrap, BootstrapReport, DrugRate, EvalOptions, EvaluationReport, Level,
    MetricSummary, OutlierDrug,
};
use crate::impute::fit_imputer;
use crate::learner::{BinaryLearner, LearnerRegistry, LearnerSettings};
use crate::metrics::Metric;
use crate::rng::derive_seed;

pub const BOOTSTRAP_FILE: &str = "bootstrap.json";
pub const OUTLIERS_FILE: &str = "outliers.json";

/// Seed tag for imputing the whole table before permutation importance.
const IMPORTANCE_IMPUTE: u64 = 11;
const IMPUTE_COMMAND: u64 = 12;

pub fn load_input(cfg: &RunConfig) -> Result<Dataset> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("no input file given (`input`)".into()))?;
    let bytes = std::fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let schema = infer_schema(&bytes)?;
    if let Some(width) = cfg.schema.width() {
        if schema.len() != width {
            return Err(Error::Schema(format!(
                "schema {:?} expects {width} predictors, input has {}",
                cfg.schema,
                schema.len()
            )));
        }
    }
    load_csv(&bytes[..], &schema)
}

fn settings(cfg: &RunConfig) -> LearnerSettings {
    LearnerSettings {
        trees: cfg.trees,
        ..Default::default()
    }
}

pub fn learners(cfg: &RunConfig) -> Result<Vec<Arc<dyn BinaryLearner>>> {
    let registry = LearnerRegistry::builtin();
    cfg.learners
        .iter()
        .map(|n| registry.create(n, &settings(cfg)))
        .collect()
}

fn options(cfg: &RunConfig) -> EvalOptions {
    EvalOptions {
        imputation: cfg.imputation,
        imputer_bags: cfg.imputer_bags,
    }
}

fn report_rows(r: &EvaluationReport) -> Vec<(String, Level, Metric, Option<f64>)> {
    Level::ALL
        .into_iter()
        .flat_map(|l| Metric::ALL.into_iter().map(move |m| (l, m)))
        .map(|(l, m)| (r.learner.clone(), l, m, r.level(l).get(m)))
        .collect()
}

#[derive(Serialize)]
struct ValidateBody<'a> {
    models: &'a [EvaluationReport],
}

pub fn validate(cfg: &RunConfig) -> Result<()> {
    let ds = load_input(cfg)?;
    let reports = learners(cfg)?
        .iter()
        .map(|l| lodo_cv(&ds, l.as_ref(), &options(cfg), cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    write_json(
        &cfg.out.join("point_estimates.json"),
        "validate",
        cfg,
        &ValidateBody { models: &reports },
    )?;
    let mut rows = Vec::new();
    for r in &reports {
        for (model, level, metric, value) in report_rows(r) {
            rows.push(vec![
                model,
                level.name().into(),
                metric.name().into(),
                cell(value),
                r.clamp_count.to_string(),
            ]);
        }
    }
    write_csv(
        &cfg.out.join("point_estimates.csv"),
        &["model", "level", "metric", "value", "clamp_count"],
        &rows,
    )
}

/// Persisted bootstrap summary for one learner, read back by later commands.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapEntry {
    pub learner: String,
    pub requested: usize,
    pub failed_count: usize,
    pub failed: Vec<usize>,
    pub summaries: Vec<crate::eval::SummaryRow>,
    pub correct_rates: Vec<DrugRate>,
}

impl BootstrapEntry {
    fn from_report(r: &BootstrapReport) -> Self {
        Self {
            learner: r.learner.clone(),
            requested: r.requested,
            failed_count: r.failed.len(),
            failed: r.failed.clone(),
            summaries: r.summaries.clone(),
            correct_rates: r.correct_rates.clone(),
        }
    }

    pub fn summary(&self, level: Level, metric: Metric) -> Option<MetricSummary> {
        self.summaries
            .iter()
            .find(|s| s.level == level && s.metric == metric)
            .and_then(|s| s.summary)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BootstrapFile {
    pub schema_version: u32,
    pub replicates: usize,
    pub models: Vec<BootstrapEntry>,
}

#[derive(Serialize)]
struct BootstrapBody<'a> {
    replicates: usize,
    models: &'a [BootstrapEntry],
}

fn read_bootstrap(cfg: &RunConfig) -> Result<BootstrapFile> {
    let path = cfg.out.join(BOOTSTRAP_FILE);
    read_json(&path).map_err(|e| {
        Error::InvalidArgument(format!(
            "cannot read {} ({e}); run `ordrisk bootstrap` with the same --out first",
            path.display()
        ))
    })
}

fn category_heading(c: RiskCategory) -> String {
    format!("{} risk", c.token())
}

pub fn bootstrap(cfg: &RunConfig) -> Result<()> {
    let ds = load_input(cfg)?;
    let reports = learners(cfg)?
        .iter()
        .map(|l| stratified_bootstrap(&ds, l.as_ref(), &options(cfg), cfg.replicates, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<BootstrapEntry> = reports.iter().map(BootstrapEntry::from_report).collect();
    for e in &entries {
        if e.failed_count > 0 {
            eprintln!(
                "{}: {} of {} replicates failed (single-class fold) and were excluded",
                e.learner, e.failed_count, e.requested
            );
        }
    }
    write_json(
        &cfg.out.join(BOOTSTRAP_FILE),
        "bootstrap",
        cfg,
        &BootstrapBody {
            replicates: cfg.replicates,
            models: &entries,
        },
    )?;

    let mut summary = Vec::new();
    let mut replicates = Vec::new();
    let mut rates = Vec::new();
    for r in &reports {
        for level in Level::ALL {
            for metric in Metric::ALL {
                let s = r.summary(level, metric);
                summary.push(vec![
                    r.learner.clone(),
                    level.name().into(),
                    metric.name().into(),
                    cell(s.map(|s| s.mean)),
                    cell(s.map(|s| s.ci_low)),
                    cell(s.map(|s| s.ci_high)),
                    s.map_or(0, |s| s.n).to_string(),
                ]);
                for rep in &r.replicates {
                    replicates.push(vec![
                        r.learner.clone(),
                        rep.replicate.to_string(),
                        level.name().into(),
                        metric.name().into(),
                        cell(rep.report.level(level).get(metric)),
                    ]);
                }
                let plot = svg::histogram(
                    &format!("{} {} {}", r.learner, level.name(), metric.name()),
                    &r.values(level, metric),
                );
                write_text(
                    &cfg.out.join("plots").join(format!(
                        "dist_{}_{}_{}.svg",
                        r.learner,
                        level.name(),
                        metric.name()
                    )),
                    &plot,
                )?;
            }
        }
        for d in &r.correct_rates {
            rates.push(vec![
                d.drug.clone(),
                d.truth.token().into(),
                r.learner.clone(),
                d.rate.to_string(),
            ]);
        }
    }
    write_csv(
        &cfg.out.join("bootstrap_summary.csv"),
        &["model", "level", "metric", "mean", "ci_low", "ci_high", "n"],
        &summary,
    )?;
    write_csv(
        &cfg.out.join("bootstrap_replicates.csv"),
        &["model", "replicate", "level", "metric", "value"],
        &replicates,
    )?;
    write_csv(
        &cfg.out.join("correct_rates.csv"),
        &["drug", "truth", "model", "rate"],
        &rates,
    )?;

    let series: Vec<String> = reports.iter().map(|r| r.learner.clone()).collect();
    let groups: Vec<svg::DotGroup> = RiskCategory::ALL
        .into_iter()
        .map(|c| {
            let members = ds
                .drugs()
                .iter()
                .enumerate()
                .filter(|(_, d)| d.label == c)
                .map(|(k, d)| {
                    (
                        d.id.clone(),
                        reports.iter().map(|r| r.correct_rates[k].rate).collect(),
                    )
                })
                .collect();
            (category_heading(c), members)
        })
        .collect();
    write_text(
        &cfg.out.join("plots").join("correct_rates.svg"),
        &svg::dot_plot("Per-drug correct rate", &series, &groups),
    )
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OutliersFile {
    pub threshold: f64,
    pub models: Vec<String>,
    pub outliers: Vec<OutlierDrug>,
}

pub fn outliers(cfg: &RunConfig) -> Result<()> {
    let boot = read_bootstrap(cfg)?;
    let [a, b] = boot.models.as_slice() else {
        return Err(Error::InvalidArgument(format!(
            "outlier detection needs a bootstrap run of exactly two learners, found {}",
            boot.models.len()
        )));
    };
    let flagged = detect_outliers(&a.correct_rates, &b.correct_rates, cfg.threshold)?;
    let body = OutliersFile {
        threshold: cfg.threshold,
        models: vec![a.learner.clone(), b.learner.clone()],
        outliers: flagged,
    };
    write_json(&cfg.out.join(OUTLIERS_FILE), "outliers", cfg, &body)?;
    let rows: Vec<Vec<String>> = body
        .outliers
        .iter()
        .map(|o| {
            vec![
                o.drug.clone(),
                o.average.to_string(),
                o.truth.token().into(),
                o.rate_a.to_string(),
                o.rate_b.to_string(),
            ]
        })
        .collect();
    let rate_a = format!("rate_{}", a.learner);
    let rate_b = format!("rate_{}", b.learner);
    write_csv(
        &cfg.out.join("outliers.csv"),
        &["drug", "average_rate", "truth", &rate_a, &rate_b],
        &rows,
    )
}

#[derive(Serialize)]
struct SensitivityBody<'a> {
    removed: &'a [String],
    drugs_before: usize,
    drugs_after: usize,
    models: &'a [crate::eval::SensitivityArm],
}

pub fn sensitivity(cfg: &RunConfig) -> Result<()> {
    let path = cfg.out.join(OUTLIERS_FILE);
    let file: OutliersFile = read_json(&path).map_err(|e| {
        Error::InvalidArgument(format!(
            "cannot read {} ({e}); run `ordrisk outliers` with the same --out first",
            path.display()
        ))
    })?;
    if file.outliers.is_empty() {
        eprintln!("no outlier drugs flagged; nothing to rerun");
        return Ok(());
    }
    let removed: Vec<String> = file.outliers.iter().map(|o| o.drug.clone()).collect();
    let ds = load_input(cfg)?;
    let ls = learners(cfg)?;
    let refs: Vec<&dyn BinaryLearner> = ls.iter().map(|l| l.as_ref()).collect();
    let arms = rerun(&ds, &removed, &refs, &options(cfg), cfg.seed)?;
    let drugs_after = arms.first().map_or(0, |a| a.after.folds);
    write_json(
        &cfg.out.join("sensitivity.json"),
        "sensitivity",
        cfg,
        &SensitivityBody {
            removed: &removed,
            drugs_before: ds.n_drugs(),
            drugs_after,
            models: &arms,
        },
    )?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let (mut before, mut after) = (Vec::new(), Vec::new());
    for arm in &arms {
        for level in Level::ALL {
            for metric in Metric::ALL {
                let (b, a) = (
                    arm.before.level(level).get(metric),
                    arm.after.level(level).get(metric),
                );
                rows.push(vec![
                    arm.learner.clone(),
                    level.name().into(),
                    metric.name().into(),
                    cell(b),
                    cell(a),
                ]);
                labels.push(format!(
                    "{} {} {}",
                    arm.learner,
                    level.name(),
                    metric.name()
                ));
                before.push(b);
                after.push(a);
            }
        }
    }
    write_csv(
        &cfg.out.join("sensitivity.csv"),
        &["model", "level", "metric", "before", "after"],
        &rows,
    )?;
    write_text(
        &cfg.out.join("plots").join("sensitivity.svg"),
        &svg::grouped_bars(
            "Before and after outlier removal",
            &labels,
            &[("before".into(), before), ("after".into(), after)],
        ),
    )
}

#[derive(Serialize)]
struct ControlBody<'a> {
    control: &'a str,
    models: &'a [crate::eval::ControlReport],
}

pub fn control(cfg: &RunConfig) -> Result<()> {
    let control = cfg
        .control
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("no control drug given (`control`)".into()))?;
    let ds = load_input(cfg)?;
    if ds.drug_index(control).is_none() {
        return Err(Error::UnknownDrug(control.to_string()));
    }
    let reports = learners(cfg)?
        .iter()
        .map(|l| control_analysis(&ds, control, l.as_ref(), &options(cfg), cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    write_json(
        &cfg.out.join("control.json"),
        "control",
        cfg,
        &ControlBody {
            control,
            models: &reports,
        },
    )?;
    let mut rows = Vec::new();
    for r in &reports {
        for level in Level::ALL {
            for metric in Metric::ALL {
                let pick = |arm: &crate::eval::ControlArm| match level {
                    Level::Observations => arm.observations.get(metric),
                    Level::Drugs => arm.drugs.get(metric),
                };
                rows.push(vec![
                    r.learner.clone(),
                    level.name().into(),
                    metric.name().into(),
                    cell(pick(&r.without_control)),
                    r.with_control
                        .as_ref()
                        .map_or_else(|| "undefined".into(), |a| cell(pick(a))),
                    r.control_correct_rate.to_string(),
                ]);
            }
        }
    }
    write_csv(
        &cfg.out.join("control.csv"),
        &[
            "model",
            "level",
            "metric",
            "without_control",
            "with_control",
            "control_correct_rate",
        ],
        &rows,
    )
}

pub fn importance(cfg: &RunConfig) -> Result<()> {
    let boot = read_bootstrap(cfg)?;
    let entry = boot
        .models
        .iter()
        .find(|m| m.learner == cfg.importance_learner)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{} has no `{}` run; bootstrap that learner first",
                BOOTSTRAP_FILE, cfg.importance_learner
            ))
        })?;
    let baseline = entry
        .summary(Level::Observations, Metric::Accuracy)
        .map(|s| s.ci_high)
        .ok_or_else(|| {
            Error::InvalidArgument("bootstrap run has no observation accuracy".into())
        })?;
    let mut ds = load_input(cfg)?;
    if ds.has_missing() {
        ds = fit_imputer(
            &ds,
            cfg.imputer_bags,
            derive_seed(cfg.seed, &[IMPORTANCE_IMPUTE]),
        )?
        .impute(&ds)?;
    }
    let learner = LearnerRegistry::builtin().create(&cfg.importance_learner, &settings(cfg))?;
    let report =
        permutation_importance(&ds, learner.as_ref(), baseline, cfg.repetitions, cfg.seed)?;
    if !report.normalized {
        eprintln!("no predictor has positive importance; nimp is undefined");
    }
    write_json(&cfg.out.join("importance.json"), "importance", cfg, &report)?;
    let sorted = report.sorted();
    let rows: Vec<Vec<String>> = sorted
        .iter()
        .map(|p| vec![p.predictor.clone(), p.imp.to_string(), cell(p.nimp)])
        .collect();
    write_csv(
        &cfg.out.join("importance.csv"),
        &["predictor", "imp", "nimp"],
        &rows,
    )?;
    let bars: Vec<(String, f64)> = sorted
        .iter()
        .map(|p| (p.predictor.clone(), p.nimp.unwrap_or(p.imp)))
        .collect();
    let title = if report.normalized {
        "Normalized permutation importance"
    } else {
        "Permutation importance (unnormalized)"
    };
    write_text(
        &cfg.out.join("plots").join("importance.svg"),
        &svg::horizontal_bars(title, &bars),
    )
}

fn output_path(cfg: &RunConfig, default: &str) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| cfg.out.join(default))
}

fn write_dataset_file(ds: &Dataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset(ds, &mut buf)?;
    write_text(path, &String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn impute(cfg: &RunConfig) -> Result<()> {
    let ds = load_input(cfg)?;
    let imputer = fit_imputer(
        &ds,
        cfg.imputer_bags,
        derive_seed(cfg.seed, &[IMPUTE_COMMAND]),
    )?;
    write_dataset_file(&imputer.impute(&ds)?, &output_path(cfg, "imputed.csv"))
}

#[derive(Serialize)]
struct SynthSidecar<'a> {
    schema_version: u32,
    generator: &'a SyntheticConfig,
    noise_column: usize,
    noise_predictor: &'a str,
    dominant_column: usize,
    dominant_predictor: &'a str,
    n_drugs: usize,
    n_observations: usize,
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let gen = SyntheticConfig {
        per_category: cfg.per_category,
        obs_per_drug: cfg.obs_per_drug,
        noise_sd: cfg.noise_sd,
        nonlinear: cfg.nonlinear,
        seed: cfg.seed,
    };
    let s = generate_synthetic(&gen)?;
    let path = output_path(cfg, "synthetic.csv");
    write_dataset_file(&s.dataset, &path)?;
    let schema = s.dataset.schema();
    let sidecar = SynthSidecar {
        schema_version: super::output::SCHEMA_VERSION,
        generator: &gen,
        noise_column: s.noise_column,
        noise_predictor: &schema.get(s.noise_column).name,
        dominant_column: s.dominant_column,
        dominant_predictor: &schema.get(s.dominant_column).name,
        n_drugs: s.dataset.n_drugs(),
        n_observations: s.dataset.n_observations(),
    };
    let mut text = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::InvalidArgument(format!("json encoding: {e}")))?;
    text.push('\n');
    write_text(&path.with_extension("json"), &text)
}
