//! Binary logistic regression by iteratively reweighted least squares.
//!
//! Predictors are standardised internally (training mean 0, sd 1; constant
//! columns are dropped with a zero coefficient) and the fit maximises
//!
//! ```text
//! sum_i [ y_i eta_i - log(1 + exp(eta_i)) ] - ridge/2 * |beta_1..P|^2
//! ```
//!
//! in that standardised parametrisation, intercept unpenalised. Newton steps
//! use step halving. Coefficients are mapped back to the raw scale.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConfig {
    pub ridge: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            ridge: 1e-6,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// Bound on standardised coefficients beyond which a failed fit is reported as separated.
pub const SEPARATION_GUARD: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub iterations: usize,
    /// Max absolute entry of the penalised score at the returned coefficients.
    pub score_norm: f64,
    pub converged: bool,
    pub separation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// Columns with non-zero spread; the others are excluded from the fit.
    pub active: Vec<usize>,
}

impl Standardization {
    fn fit(rows: &[Vec<f64>]) -> Self {
        let n = rows.len() as f64;
        let p = rows[0].len();
        let mut means = vec![0.0; p];
        let mut sds = vec![0.0; p];
        let mut active = Vec::new();
        for j in 0..p {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            means[j] = mean;
            sds[j] = sd;
            if sd > 1e-12 * (1.0 + mean.abs()) {
                active.push(j);
            }
        }
        Self { means, sds, active }
    }

    /// Active standardised columns of `x` (no intercept).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.active
            .iter()
            .map(|&j| (x[j] - self.means[j]) / self.sds[j])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    coefficients: Vec<f64>,
    standardized: Vec<f64>,
    standardization: Standardization,
    convergence: Convergence,
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn linear(beta: &[f64], x: &[f64]) -> f64 {
    beta[0] + beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
}

/// Penalised Bernoulli log-likelihood of `beta` (intercept first) on `design`
/// (rows without the intercept column).
pub fn penalized_log_likelihood(
    design: &[Vec<f64>],
    labels: &[bool],
    beta: &[f64],
    ridge: f64,
) -> f64 {
    let ll: f64 = design
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let eta = linear(beta, x);
            if y {
                eta - log1pexp(eta)
            } else {
                -log1pexp(eta)
            }
        })
        .sum();
    ll - 0.5 * ridge * beta[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Gradient of [`penalized_log_likelihood`]: `X^T (y - p) - ridge * [0, beta_1..P]`.
pub fn score(design: &[Vec<f64>], labels: &[bool], beta: &[f64], ridge: f64) -> Vec<f64> {
    let mut g = vec![0.0; beta.len()];
    for (x, &y) in design.iter().zip(labels) {
        let r = f64::from(u8::from(y)) - sigmoid(linear(beta, x));
        g[0] += r;
        for (gj, xj) in g[1..].iter_mut().zip(x) {
            *gj += r * xj;
        }
    }
    for (gj, bj) in g[1..].iter_mut().zip(&beta[1..]) {
        *gj -= ridge * bj;
    }
    g
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn fit_logistic(
    rows: &[Vec<f64>],
    labels: &[bool],
    cfg: &LogisticConfig,
) -> Result<LogisticModel> {
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
    if !(cfg.ridge >= 0.0 && cfg.ridge.is_finite()) || cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::InvalidArgument(
            "ridge must be >= 0 and tol > 0".into(),
        ));
    }
    let p = rows[0].len();
    if rows
        .iter()
        .any(|r| r.len() != p || r.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::NonFinite(
            "logistic design must be complete and finite".into(),
        ));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass("logistic regression".into()));
    }

    let standardization = Standardization::fit(rows);
    let design: Vec<Vec<f64>> = rows.iter().map(|r| standardization.apply(r)).collect();
    let m = standardization.active.len() + 1;
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();

    let mut beta = vec![0.0; m];
    let mut objective = penalized_log_likelihood(&design, labels, &beta, cfg.ridge);
    let mut convergence = Convergence {
        iterations: 0,
        score_norm: f64::INFINITY,
        converged: false,
        separation: false,
    };

    for iter in 0..cfg.max_iter {
        let g = score(&design, labels, &beta, cfg.ridge);
        convergence.score_norm = max_abs(&g);
        convergence.iterations = iter;

        let mut h = DMatrix::<f64>::zeros(m, m);
        for (x, _) in design.iter().zip(&y) {
            let pr = sigmoid(linear(&beta, x));
            let w = pr * (1.0 - pr);
            for a in 0..m {
                let xa = if a == 0 { 1.0 } else { x[a - 1] };
                for b in a..m {
                    let xb = if b == 0 { 1.0 } else { x[b - 1] };
                    h[(a, b)] += w * xa * xb;
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        for a in 1..m {
            h[(a, a)] += cfg.ridge;
        }
        let gv = DVector::from_column_slice(&g);
        let step = match h.clone().cholesky() {
            Some(ch) => Some(ch.solve(&gv)),
            None => h.lu().solve(&gv),
        };
        let Some(step) = step.filter(|s| s.iter().all(|v| v.is_finite())) else {
            break;
        };
        let step_norm = step.amax();
        let scale = 1.0 + max_abs(&beta);
        // Newton steps stay of constant size on separable data without a ridge,
        // so a small score alone is not taken as convergence
        if convergence.score_norm < cfg.tol && step_norm <= 1e-4 * scale {
            convergence.converged = true;
            break;
        }

        let mut t = 1.0;
        let mut candidate: Vec<f64>;
        let mut cand_obj;
        let mut halvings = 0;
        loop {
            candidate = beta
                .iter()
                .zip(step.iter())
                .map(|(b, s)| b + t * s)
                .collect();
            cand_obj = penalized_log_likelihood(&design, labels, &candidate, cfg.ridge);
            if cand_obj >= objective - 1e-12 * (1.0 + objective.abs()) || halvings >= 40 {
                break;
            }
            t *= 0.5;
            halvings += 1;
        }
        if !cand_obj.is_finite() || candidate.iter().any(|b| !b.is_finite()) {
            break;
        }
        beta = candidate;
        objective = cand_obj;
        convergence.iterations = iter + 1;
        if max_abs(&beta) > 1e6 {
            break;
        }
    }
    if !convergence.converged {
        convergence.score_norm = max_abs(&score(&design, labels, &beta, cfg.ridge));
        convergence.separation = max_abs(&beta[1..]) > SEPARATION_GUARD;
    }

    let mut coefficients = vec![0.0; p + 1];
    coefficients[0] = beta[0];
    for (k, &j) in standardization.active.iter().enumerate() {
        let b = beta[k + 1] / standardization.sds[j];
        coefficients[j + 1] = b;
        coefficients[0] -= b * standardization.means[j];
    }
    Ok(LogisticModel {
        coefficients,
        standardized: beta,
        standardization,
        convergence,
    })
}

impl LogisticModel {
    /// Raw-scale coefficients, intercept first.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Coefficients on the internal standardised design, intercept first.
    pub fn standardized_coefficients(&self) -> &[f64] {
        &self.standardized
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    pub fn convergence(&self) -> &Convergence {
        &self.convergence
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        linear(&self.standardized, &self.standardization.apply(x))
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(x))
    }
}
