//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use ordrisk::cart::{grow_tree, TreeMode, TreeParams};
use ordrisk::dataset::{Dataset, Predictor, RiskCategory};
use ordrisk::eval::{
    baseline_from_bootstrap, control_analysis, detect_outliers, lodo_cv, observation_kfold_cv,
    permutation_importance, stratified_bootstrap, DrugRate, EvalOptions,
};
use ordrisk::forest::fit_forest;
use ordrisk::learner::{BinaryLearner, ForestLearner, LogisticLearner};
use ordrisk::logistic::{fit_logistic, penalized_log_likelihood, score, LogisticConfig};
use ordrisk::metrics::{auroc, binarize, concordance_index, Cut, PredictionSet, UnitPrediction};
use ordrisk::ordinal::{fit_ordinal, RiskProbabilities};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

fn random_category<R: Rng>(r: &mut R) -> RiskCategory {
    RiskCategory::ALL[r.random_range(0..3)]
}

fn c1_metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    let mut mismatched_definedness = 0;
    for case in 0..1000 {
        let n = r.random_range(1..=12);
        let units: Vec<UnitPrediction> = (0..n)
            .map(|i| {
                // coarse grid so that ties occur
                let a = f64::from(r.random_range(0..6u8));
                let b = f64::from(r.random_range(0..6u8));
                let c = f64::from(r.random_range(0..6u8)) + 1.0;
                let s = a + b + c;
                let p = RiskProbabilities::new(a / s, b / s, c / s);
                UnitPrediction {
                    id: format!("u{case}_{i}"),
                    truth: random_category(&mut r),
                    probabilities: p,
                    predicted: p.argmax(),
                }
            })
            .collect();
        let set = PredictionSet::new(units.clone()).unwrap();
        for cut in [Cut::HighVsRest, Cut::RestVsLow] {
            let (scores, positives) = binarize(&set, cut);
            // independent binarisation for the oracle
            let (os, op): (Vec<f64>, Vec<bool>) = units
                .iter()
                .map(|u| match cut {
                    Cut::HighVsRest => (u.probabilities.high, u.truth == RiskCategory::High),
                    Cut::RestVsLow => (1.0 - u.probabilities.low, u.truth != RiskCategory::Low),
                })
                .unzip();
            assert_eq!(positives, op);
            match (auroc(&scores, &positives).ok(), brute_auroc(&os, &op)) {
                (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                (None, None) => {}
                _ => mismatched_definedness += 1,
            }
        }
        let scores: Vec<f64> = units
            .iter()
            .map(|u| {
                u.probabilities.low
                    + 2.0 * u.probabilities.intermediate
                    + 3.0 * u.probabilities.high
            })
            .collect();
        let ranks: Vec<u8> = units.iter().map(|u| u.truth.rank()).collect();
        match (
            concordance_index(&set).ok(),
            brute_concordance(&scores, &ranks),
        ) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            (None, None) => {}
            _ => mismatched_definedness += 1,
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-12 && mismatched_definedness == 0 && elapsed < Duration::from_secs(10),
        format!("max |diff| {worst:.2e}, definedness mismatches {mismatched_definedness}, {elapsed:.2?}"),
    )
}

fn c2_probability_contract() -> Outcome {
    let learners: [(&dyn BinaryLearner, u64); 2] = [
        (&LogisticLearner::default(), 0),
        (&ForestLearner { n_trees: 50 }, 100),
    ];
    let mut predictions = 0usize;
    let mut bad = 0usize;
    let mut counter_mismatch = 0usize;
    let mut total_clamps = 0u64;
    for (learner, offset) in learners {
        for m in 0..10u64 {
            let ds = synthetic(2.0, m % 2 == 1, offset + m);
            let model = fit_ordinal(&ds, learner, m).unwrap();
            let mut r = rng(offset + m);
            let mut expected = 0u64;
            for _ in 0..500 {
                let x: Vec<f64> = (0..ds.n_predictors())
                    .map(|j| {
                        if j == 3 {
                            f64::from(r.random_range(0..2u8))
                        } else {
                            r.random_range(-4.0..4.0)
                        }
                    })
                    .collect();
                let (pl, ph) = model.binary_probabilities(&x);
                if (1.0 - pl) - ph < 0.0 {
                    expected += 1;
                }
                let p = model.predict_observation(&x).probabilities;
                let sum = p.low + p.intermediate + p.high;
                if p.low < 0.0 || p.intermediate < 0.0 || p.high < 0.0 || (sum - 1.0).abs() > 1e-12
                {
                    bad += 1;
                }
                predictions += 1;
            }
            if model.clamp_count() != expected {
                counter_mismatch += 1;
            }
            total_clamps += expected;
        }
    }
    check(
        bad == 0 && counter_mismatch == 0 && predictions == 10_000,
        format!("{predictions} predictions, {bad} invalid triples, {total_clamps} clamps, {counter_mismatch} counter mismatches"),
    )
}

fn c3_logistic_solver() -> Outcome {
    let start = Instant::now();
    let mut r = rng(3);
    let cfg = LogisticConfig::default();
    let mut worst_coef = 0.0f64;
    let mut worst_grad = 0.0f64;
    let mut oracle_failures = 0;
    let mut made = 0;
    while made < 50 {
        let n = r.random_range(15..=30);
        let p = r.random_range(1..=4);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| r.random_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<bool> = rows
            .iter()
            .map(|x| {
                let eta = 0.6 * x[0] - 0.2;
                r.random_bool(1.0 / (1.0 + (-eta).exp()))
            })
            .collect();
        let pos = labels.iter().filter(|&&y| y).count();
        if pos < 3 || n - pos < 3 {
            continue;
        }
        made += 1;
        let model = fit_logistic(&rows, &labels, &cfg).unwrap();
        match gradient_ascent_logistic(&rows, &labels, cfg.ridge) {
            Some(oracle) => {
                for (a, b) in model.coefficients().iter().zip(&oracle) {
                    worst_coef = worst_coef.max((a - b).abs());
                }
            }
            None => oracle_failures += 1,
        }
        let beta: Vec<f64> = (0..=p).map(|_| r.random_range(-1.5..1.5)).collect();
        let analytic = score(&rows, &labels, &beta, 0.3);
        let numeric = finite_difference(
            |b| penalized_log_likelihood(&rows, &labels, b, 0.3),
            &beta,
            1e-5,
        );
        for (a, b) in analytic.iter().zip(&numeric) {
            worst_grad = worst_grad.max((a - b).abs() / a.abs().max(b.abs()).max(1e-2));
        }
    }
    let elapsed = start.elapsed();
    check(
        worst_coef <= 1e-4 && worst_grad <= 1e-6 && oracle_failures == 0 && elapsed < Duration::from_secs(60),
        format!(
            "max coef diff {worst_coef:.2e}, max score rel diff {worst_grad:.2e}, oracle non-convergence {oracle_failures}, {elapsed:.2?}"
        ),
    )
}

fn c4_trees() -> Outcome {
    let mut r = rng(4);
    let mut mismatches = 0;
    let mut cases = 0;
    for gini in [true, false] {
        for _ in 0..1000 {
            let n = r.random_range(2..=8);
            let p = r.random_range(1..=3);
            let rows: Vec<Vec<i64>> = (0..n)
                .map(|_| (0..p).map(|_| r.random_range(0..5)).collect())
                .collect();
            let targets: Vec<i64> = (0..n)
                .map(|_| {
                    if gini {
                        r.random_range(0..2)
                    } else {
                        r.random_range(0..6)
                    }
                })
                .collect();
            let frows: Vec<Vec<f64>> = rows
                .iter()
                .map(|x| x.iter().map(|&v| v as f64).collect())
                .collect();
            let ft: Vec<f64> = targets.iter().map(|&v| v as f64).collect();
            let params = TreeParams {
                mode: if gini {
                    TreeMode::Classify
                } else {
                    TreeMode::Regress
                },
                leaf_size: 1,
                feature_subset_size: p,
            };
            let tree = grow_tree(&frows, &ft, params, &mut rng(0)).unwrap();
            let got = tree.root_split().map(|s| (s.feature, s.threshold));
            if got != brute_root_split(&rows, &targets, gini) {
                mismatches += 1;
            }
            cases += 1;
        }
    }

    // leaf size 1 with every feature reproduces distinct training rows exactly
    let mut inexact = 0;
    for seed in 0..20 {
        let mut r = rng(400 + seed);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                vec![
                    f64::from(i) + r.random_range(0.0..0.5),
                    r.random_range(-1.0..1.0),
                ]
            })
            .collect();
        for mode in [TreeMode::Classify, TreeMode::Regress] {
            let y: Vec<f64> = (0..40)
                .map(|_| {
                    if mode == TreeMode::Classify {
                        f64::from(r.random_range(0..2u8))
                    } else {
                        r.random_range(-3.0..3.0)
                    }
                })
                .collect();
            let params = TreeParams {
                mode,
                leaf_size: 1,
                feature_subset_size: 2,
            };
            let tree = grow_tree(&rows, &y, params, &mut rng(seed)).unwrap();
            inexact += rows
                .iter()
                .zip(&y)
                .filter(|(x, t)| tree.predict(x) != **t)
                .count();
        }
    }

    let ds = synthetic(1.0, true, 4);
    let rows = ds.complete_rows().unwrap();
    let labels: Vec<bool> = ds
        .observation_labels()
        .iter()
        .map(|&l| l == RiskCategory::High)
        .collect();
    let one = pool(1).install(|| fit_forest(&rows, &labels, 200, 99).unwrap());
    let eight = pool(8).install(|| fit_forest(&rows, &labels, 200, 99).unwrap());
    let identical = one == eight;
    check(
        mismatches == 0 && inexact == 0 && identical,
        format!("root split mismatches {mismatches}/{cases}, inexact training predictions {inexact}, forests identical across 1/8 workers: {identical}"),
    )
}

/// Frozen canary configuration: noise 1.5, generator seed 5, forest with 100 trees.
fn c5_leakage_canary() -> Outcome {
    let ds = synthetic(1.5, false, 5);
    let aug = with_drug_one_hot(&ds);
    let forest = ForestLearner { n_trees: 100 };
    let opts = EvalOptions::default();
    let base = lodo_cv(&ds, &forest, &opts, 5).unwrap();
    let leaky_input = lodo_cv(&aug, &forest, &opts, 5).unwrap();
    let naive = observation_kfold_cv(&aug, &forest, 5, &opts, 5).unwrap();
    let (b, a, k) = (
        base.drugs.accuracy.unwrap(),
        leaky_input.drugs.accuracy.unwrap(),
        naive.drugs.accuracy.unwrap(),
    );
    let (bo, ao, ko) = (
        base.observations.accuracy.unwrap(),
        leaky_input.observations.accuracy.unwrap(),
        naive.observations.accuracy.unwrap(),
    );
    check(
        (a - b).abs() <= 0.05 && k - a >= 0.2 && ko - ao >= 0.2,
        format!(
            "drug accuracy LODO {b:.3} -> {a:.3} with one-hot; naive 5-fold {k:.3} (observations {bo:.3} -> {ao:.3}, naive {ko:.3})"
        ),
    )
}

fn c6_planted_signal() -> Outcome {
    let start = Instant::now();
    let opts = EvalOptions::default();
    let logistic = LogisticLearner::default();
    let forest = ForestLearner { n_trees: 100 };
    let linear = lodo_cv(&synthetic(0.5, false, 0), &logistic, &opts, 0).unwrap();
    let nonlinear = synthetic(0.5, true, 0);
    let nl_logistic = lodo_cv(&nonlinear, &logistic, &opts, 0).unwrap();
    let nl_forest = lodo_cv(&nonlinear, &forest, &opts, 0).unwrap();
    let (a, b, c) = (
        linear.drugs.accuracy.unwrap(),
        nl_logistic.drugs.accuracy.unwrap(),
        nl_forest.drugs.accuracy.unwrap(),
    );
    let elapsed = start.elapsed();
    check(
        a >= 0.9 && c - b >= 0.1 && elapsed < Duration::from_secs(120),
        format!(
            "linear logistic {a:.3}; nonlinear forest {c:.3} vs logistic {b:.3}; {elapsed:.2?}"
        ),
    )
}

fn c7_bootstrap() -> Outcome {
    let ds = synthetic(1.0, false, 7);
    let counts = ds.drug_counts();
    let learner = LogisticLearner::default();
    let opts = EvalOptions::default();
    let one = pool(1).install(|| stratified_bootstrap(&ds, &learner, &opts, 200, 77).unwrap());
    let eight = pool(8).install(|| stratified_bootstrap(&ds, &learner, &opts, 200, 77).unwrap());
    let mut bad_counts = 0;
    for rep in &one.replicates {
        for (k, d) in rep.report.drug_predictions.iter().enumerate() {
            if d.observations != counts[k] {
                bad_counts += 1;
            }
        }
    }
    let rates_ok = one
        .correct_rates
        .iter()
        .all(|r| (0.0..=1.0).contains(&r.rate));
    let identical = one == eight;
    check(
        bad_counts == 0 && rates_ok && identical && one.replicates.len() + one.failed.len() == 200,
        format!(
            "{} replicates ({} failed), count mismatches {bad_counts}, rates in [0,1]: {rates_ok}, 1 vs 8 workers identical: {identical}",
            one.replicates.len(),
            one.failed.len()
        ),
    )
}

fn c8_importance() -> Outcome {
    let ds = synthetic(0.5, false, 0);
    let forest = ForestLearner { n_trees: 100 };
    let boot = stratified_bootstrap(&ds, &forest, &EvalOptions::default(), 20, 8).unwrap();
    let baseline = baseline_from_bootstrap(&boot).unwrap();
    let report = permutation_importance(&ds, &forest, baseline, 100, 8).unwrap();
    let noise = report.get("noise").and_then(|p| p.nimp).unwrap_or(f64::NAN);
    let dominant = report
        .get("signal_a")
        .and_then(|p| p.nimp)
        .unwrap_or(f64::NAN);

    let constant = ds
        .with_extra_columns(
            vec![Predictor::continuous("constant")],
            vec![vec![Some(3.0)]; ds.n_observations()],
        )
        .unwrap();
    let creport = permutation_importance(&constant, &forest, baseline, 10, 8).unwrap();
    let c = creport.get("constant").unwrap();
    let constant_ok = c
        .permuted_accuracies
        .iter()
        .all(|&a| a == creport.unpermuted_accuracy)
        && c.imp == baseline - creport.unpermuted_accuracy;
    check(
        noise <= 0.1 && dominant == 1.0 && constant_ok,
        format!("nimp(noise) {noise:.3}, nimp(signal_a) {dominant:.3}, constant column unchanged: {constant_ok}"),
    )
}

fn rate(drug: &str, truth: RiskCategory, rate: f64) -> DrugRate {
    DrugRate {
        drug: drug.into(),
        truth,
        rate,
    }
}

fn c9_outliers_and_control() -> Outcome {
    use RiskCategory::*;
    let a = [
        rate("bepridil", High, 0.0),
        rate("ranolazine", Low, 0.0),
        rate("split", Intermediate, 0.30),
        rate("edge", Low, 0.25),
        rate("fine", High, 0.9),
    ];
    let b = [
        rate("fine", High, 0.8),
        rate("edge", Low, 0.0),
        rate("split", Intermediate, 0.10),
        rate("ranolazine", Low, 0.0),
        rate("bepridil", High, 0.0),
    ];
    let flagged = detect_outliers(&a, &b, 0.25).unwrap();
    let names: Vec<&str> = flagged.iter().map(|o| o.drug.as_str()).collect();
    let rule_ok = names == ["bepridil", "ranolazine"] && flagged.iter().all(|o| o.average == 0.0);

    let ds: Dataset = synthetic(0.0, false, 9);
    let report = control_analysis(
        &ds,
        "high_01",
        &LogisticLearner::default(),
        &EvalOptions::default(),
        9,
    )
    .unwrap();
    let equal = report.control_correct_rate == 1.0
        && report.with_control.as_ref() == Some(&report.without_control)
        && report.folds.len() == ds.n_drugs() - 1;
    check(
        rule_ok && equal,
        format!(
            "flagged {names:?}; control correct rate {:.3}, with == without: {equal}",
            report.control_correct_rate
        ),
    )
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run_pipeline(out: &Path) -> Result<(), String> {
    let dir = crate_dir();
    for cmd in [
        "validate",
        "bootstrap",
        "outliers",
        "sensitivity",
        "control",
        "importance",
    ] {
        let status = Command::new(env!("CARGO_BIN_EXE_ordrisk"))
            .current_dir(&dir)
            .args([cmd, "--config", "data/pipeline.conf", "--out"])
            .arg(out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("`{cmd}` exited with {status}"));
        }
    }
    for (name, file) in [
        ("linear", "data/synthetic_linear.csv"),
        ("nonlinear", "data/synthetic_nonlinear.csv"),
    ] {
        let status = Command::new(env!("CARGO_BIN_EXE_ordrisk"))
            .current_dir(&dir)
            .args([
                "validate",
                "--config",
                "data/pipeline.conf",
                "--input",
                file,
                "--out",
            ])
            .arg(out.join(name))
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("`validate {file}` exited with {status}"));
        }
    }
    Ok(())
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn c10_end_to_end() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_pipeline(&a)?;
    run_pipeline(&b)?;
    let fa = files_under(&a);
    let fb = files_under(&b);
    let differing: Vec<String> = fa
        .iter()
        .filter(|f| std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok())
        .map(|f| f.display().to_string())
        .collect();
    let elapsed = start.elapsed();
    check(
        fa == fb
            && differing.is_empty()
            && !fa.is_empty()
            && elapsed < Duration::from_secs(15 * 60),
        format!(
            "{} files per run, differing {differing:?}, two runs in {elapsed:.2?}",
            fa.len()
        ),
    )
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("metric oracles", c1_metric_oracles),
        ("probability contract", c2_probability_contract),
        ("logistic solver", c3_logistic_solver),
        ("tree and forest correctness", c4_trees),
        ("no-leakage canary", c5_leakage_canary),
        ("planted-signal recovery", c6_planted_signal),
        ("bootstrap stratification", c7_bootstrap),
        ("permutation importance", c8_importance),
        ("outlier and control logic", c9_outliers_and_control),
        ("end-to-end reproducibility", c10_end_to_end),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {:>2}", i + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|x| id.contains(x.as_str()) || name.contains(x.as_str()))
        {
            continue;
        }
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("{id} PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id} FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
