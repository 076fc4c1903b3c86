//! Brute-force reference implementations shared by the integration tests.
//! None of these call into the library's own metric, tree or solver code.

#![allow(dead_code)]

use ordrisk::dataset::{generate_synthetic, Dataset, Predictor, SyntheticConfig};

/// Mann-Whitney pair counting: P(score_pos > score_neg) + 0.5 P(equal).
pub fn brute_auroc(scores: &[f64], positives: &[bool]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0usize;
    for (i, &pi) in positives.iter().enumerate() {
        for (j, &pj) in positives.iter().enumerate() {
            if pi && !pj {
                pairs += 1;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    (pairs > 0).then(|| wins / pairs as f64)
}

/// Fraction of pairs with different true ranks ordered the same way by score.
pub fn brute_concordance(scores: &[f64], ranks: &[u8]) -> Option<f64> {
    let mut good = 0.0;
    let mut pairs = 0usize;
    for i in 0..scores.len() {
        for j in i + 1..scores.len() {
            if ranks[i] == ranks[j] {
                continue;
            }
            pairs += 1;
            let (hi, lo) = if ranks[i] > ranks[j] { (i, j) } else { (j, i) };
            if scores[hi] > scores[lo] {
                good += 1.0;
            } else if scores[hi] == scores[lo] {
                good += 0.5;
            }
        }
    }
    (pairs > 0).then(|| good / pairs as f64)
}

/// Exact fraction `num / den` with `den > 0`.
#[derive(Clone, Copy, Debug)]
struct Frac {
    num: i128,
    den: i128,
}

impl Frac {
    fn lt(self, o: Frac) -> bool {
        self.num * o.den < o.num * self.den
    }
}

/// Count-weighted Gini `2 k (n - k) / n`, or SSE `(n S2 - S1^2) / n`, of integer targets.
fn exact_loss(targets: &[i64], gini: bool) -> Frac {
    let n = targets.len() as i128;
    if n == 0 {
        return Frac { num: 0, den: 1 };
    }
    if gini {
        let k: i128 = targets.iter().map(|&y| y as i128).sum();
        Frac {
            num: 2 * k * (n - k),
            den: n,
        }
    } else {
        let s1: i128 = targets.iter().map(|&y| y as i128).sum();
        let s2: i128 = targets.iter().map(|&y| (y as i128) * (y as i128)).sum();
        Frac {
            num: n * s2 - s1 * s1,
            den: n,
        }
    }
}

fn add(a: Frac, b: Frac) -> Frac {
    Frac {
        num: a.num * b.den + b.num * a.den,
        den: a.den * b.den,
    }
}

/// Best root split over every feature and every midpoint, using exact
/// rational losses. Ties keep the lower feature, then the lower threshold.
/// `None` when the node is pure or no split strictly lowers the loss.
pub fn brute_root_split(rows: &[Vec<i64>], targets: &[i64], gini: bool) -> Option<(usize, f64)> {
    if targets.iter().all(|&y| y == targets[0]) || rows.len() < 2 {
        return None;
    }
    let parent = exact_loss(targets, gini);
    let mut best: Option<(Frac, usize, f64)> = None;
    for t in 0..rows[0].len() {
        let mut values: Vec<i64> = rows.iter().map(|r| r[t]).collect();
        values.sort_unstable();
        values.dedup();
        for w in values.windows(2) {
            let s = (w[0] as f64 + w[1] as f64) / 2.0;
            let mut l = Vec::new();
            let mut r = Vec::new();
            for (x, &y) in rows.iter().zip(targets) {
                if (x[t] as f64) <= s {
                    l.push(y);
                } else {
                    r.push(y);
                }
            }
            let loss = add(exact_loss(&l, gini), exact_loss(&r, gini));
            if best.as_ref().is_none_or(|(b, _, _)| loss.lt(*b)) {
                best = Some((loss, t, s));
            }
        }
    }
    best.filter(|(l, _, _)| l.lt(parent))
        .map(|(_, t, s)| (t, s))
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Ridge-penalised logistic regression by plain gradient ascent on the
/// standardised design (population sd, constant columns dropped), mapped
/// back to raw coefficients (intercept first). `None` if it fails to reach
/// `max |gradient| < 1e-10` within the iteration budget.
pub fn gradient_ascent_logistic(
    rows: &[Vec<f64>],
    labels: &[bool],
    ridge: f64,
) -> Option<Vec<f64>> {
    let n = rows.len();
    let p = rows[0].len();
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    let mut active = Vec::new();
    for j in 0..p {
        means[j] = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        sds[j] = (rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n as f64).sqrt();
        if sds[j] > 1e-9 {
            active.push(j);
        }
    }
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![1.0];
            v.extend(active.iter().map(|&j| (r[j] - means[j]) / sds[j]));
            v
        })
        .collect();
    let m = active.len() + 1;
    // Lipschitz bound of the gradient
    let lip = 0.25
        * z.iter()
            .map(|x| x.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
        + ridge;
    let step = 1.0 / lip;
    let gradient = |beta: &[f64]| {
        let mut g = vec![0.0; m];
        for (x, &y) in z.iter().zip(labels) {
            let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
            let r = if y { 1.0 } else { 0.0 } - sigmoid(eta);
            for k in 0..m {
                g[k] += r * x[k];
            }
        }
        for k in 1..m {
            g[k] -= ridge * beta[k];
        }
        g
    };
    // Nesterov ascent with gradient-based restart
    let mut beta = vec![0.0; m];
    let mut look = beta.clone();
    let mut t = 1.0f64;
    let mut converged = false;
    for _ in 0..3_000_000 {
        if gradient(&beta).iter().all(|v| v.abs() < 1e-10) {
            converged = true;
            break;
        }
        let g = gradient(&look);
        let next: Vec<f64> = look.iter().zip(&g).map(|(b, d)| b + step * d).collect();
        let progress: f64 = g
            .iter()
            .zip(next.iter().zip(&beta))
            .map(|(d, (a, b))| d * (a - b))
            .sum();
        let t_next = if progress < 0.0 {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
        };
        let momentum = if progress < 0.0 {
            0.0
        } else {
            (t - 1.0) / t_next
        };
        look = next
            .iter()
            .zip(&beta)
            .map(|(a, b)| a + momentum * (a - b))
            .collect();
        beta = next;
        t = t_next;
    }
    if !converged {
        return None;
    }
    let mut raw = vec![0.0; p + 1];
    raw[0] = beta[0];
    for (k, &j) in active.iter().enumerate() {
        raw[j + 1] = beta[k + 1] / sds[j];
        raw[0] -= raw[j + 1] * means[j];
    }
    Some(raw)
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[k] += h;
            down[k] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// Append one binary column per drug marking its own rows.
pub fn with_drug_one_hot(ds: &Dataset) -> Dataset {
    let n = ds.n_drugs();
    let predictors = (0..n)
        .map(|k| Predictor::binary(format!("is_{}", ds.drugs()[k].id)))
        .collect();
    let values = ds
        .observations()
        .iter()
        .map(|o| {
            (0..n)
                .map(|k| Some(if o.drug == k { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    ds.with_extra_columns(predictors, values).unwrap()
}

pub fn synthetic(noise_sd: f64, nonlinear: bool, seed: u64) -> Dataset {
    generate_synthetic(&SyntheticConfig {
        noise_sd,
        nonlinear,
        seed,
        ..Default::default()
    })
    .unwrap()
    .dataset
}
