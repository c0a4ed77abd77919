//! Naive and one-step estimators, influence-score diagnostics and intervals.
//!
//! Both one-step variants average the per-instance influence scores
//! `psi_i = m_hat(x_i) + phi_i - tau_hat(x_i, z_i1)`, where `tau_hat` is
//! evaluated on the correction triple and `m_hat` is the Monte Carlo mean of
//! `tau_hat` over the remaining `M` triples. Standard errors come from the
//! sample variance of the scores.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::metric::MetricKind;
use crate::nuisance::{cross_fit_tau, external_tau, RegressorKind};
use crate::record::{BenchRecord, SimRecord};
use crate::stream::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    OneStepCrossfit,
    OneStepFixed,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::OneStepCrossfit => "one_step_crossfit",
            Method::OneStepFixed => "one_step_fixed",
        })
    }
}

/// Point estimate with its influence-based uncertainty.
///
/// All values are on the metric's own scale (fractions for accuracy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: Method,
    pub theta_hat: f64,
    /// `theta_hat` clipped to the metric's range; reported alongside the raw value.
    pub theta_hat_clamped: f64,
    pub var_influence: f64,
    pub std_error: f64,
    pub level: f64,
    pub ci: (f64, f64),
    pub n: usize,
    /// Monte Carlo samples per instance (0 for naive).
    pub m: usize,
    /// Cross-fitting folds (0 when no cross-fitting).
    pub k: usize,
}

impl fmt::Display for EstimateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}] n={} m={} k={}", self.method, self.n, self.m, self.k)?;
        writeln!(f, "  theta_hat          {:.4}", self.theta_hat)?;
        writeln!(f, "  theta_hat_clamped  {:.4}", self.theta_hat_clamped)?;
        writeln!(f, "  std_error          {:.4}", self.std_error)?;
        write!(
            f,
            "  ci_{:<2}              [{:.4}, {:.4}]",
            (self.level * 100.0).round(),
            self.ci.0,
            self.ci.1
        )
    }
}

/// Per-instance pieces of the one-step estimate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InfluenceBreakdown {
    pub phi: Vec<f64>,
    pub tau_first: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub psi: Vec<f64>,
    /// External predictions that had to be clamped into `[0, 1]`.
    pub clamped_predictions: usize,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    // shift by the first value so constant input gives exactly zero
    let shift = values[0];
    let centered: Vec<f64> = values.iter().map(|v| v - shift).collect();
    let mu = mean(&centered);
    centered.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1) as f64
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("level must lie in (0, 1), got {level}")))
    }
}

/// Standard-normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Two-sided normal interval `theta ± z * sqrt(var / n)`.
pub fn confidence_interval(theta: f64, var_influence: f64, n: usize, level: f64) -> (f64, f64) {
    if var_influence <= 0.0 || n == 0 {
        return (theta, theta);
    }
    let z = normal_quantile((1.0 + level) / 2.0);
    let half = z * (var_influence / n as f64).sqrt();
    (theta - half, theta + half)
}

fn report(
    method: Method,
    scores: &[f64],
    metric: Option<MetricKind>,
    m: usize,
    k: usize,
    level: f64,
) -> EstimateReport {
    let n = scores.len();
    let theta_hat = mean(scores);
    let var_influence = sample_variance(scores);
    EstimateReport {
        method,
        theta_hat,
        theta_hat_clamped: metric.map_or(theta_hat, |mk| mk.clamp(theta_hat)),
        var_influence,
        std_error: (var_influence / n as f64).sqrt(),
        level,
        ci: confidence_interval(theta_hat, var_influence, n, level),
        n,
        m,
        k,
    }
}

/// Sample mean of the per-instance metric values.
pub fn naive_estimate(phis: &[f64], level: f64) -> Result<EstimateReport> {
    if phis.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_level(level)?;
    if phis.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("non-finite metric value".into()));
    }
    Ok(report(Method::Naive, phis, None, 0, 0, level))
}

/// Monte Carlo estimate of the integrated regression: the mean of `tau_hat`
/// over the `M` integration triples.
pub fn integrated_regression_mc(tau_values: &[f64]) -> Result<f64> {
    if tau_values.is_empty() {
        return Err(Error::InvalidM);
    }
    Ok(mean(tau_values))
}

/// `m_hat + phi - tau_first`.
pub fn influence_score(m_hat: f64, phi: f64, tau_first: f64) -> f64 {
    phi + (m_hat - tau_first)
}

/// Assembles a one-step estimate from already-evaluated nuisances.
#[allow(clippy::too_many_arguments)]
pub fn one_step_from_nuisances(
    method: Method,
    metric: MetricKind,
    phi: Vec<f64>,
    tau_first: Vec<f64>,
    m_hat: Vec<f64>,
    m: usize,
    k: usize,
    level: f64,
) -> Result<(EstimateReport, InfluenceBreakdown)> {
    let n = phi.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if tau_first.len() != n || m_hat.len() != n {
        return Err(Error::InvalidInput(format!(
            "nuisance lengths differ: phi {n}, tau {}, m {}",
            tau_first.len(),
            m_hat.len()
        )));
    }
    check_level(level)?;
    let psi: Vec<f64> = phi
        .iter()
        .zip(&tau_first)
        .zip(&m_hat)
        .map(|((&p, &t), &mh)| influence_score(mh, p, t))
        .collect();
    if psi.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite influence score".into()));
    }
    let report = report(method, &psi, Some(metric), m, k, level);
    Ok((
        report,
        InfluenceBreakdown {
            phi,
            tau_first,
            m_hat,
            psi,
            clamped_predictions: 0,
        },
    ))
}

/// Cross-fitted one-step estimator with the quadratic OLS outcome regression.
pub fn one_step_crossfit(
    dataset: &[SimRecord],
    metric: MetricKind,
    k: usize,
    level: f64,
    stream: Stream,
) -> Result<(EstimateReport, InfluenceBreakdown)> {
    one_step_crossfit_with(dataset, metric, k, RegressorKind::OlsQuadratic, level, stream)
}

pub fn one_step_crossfit_with(
    dataset: &[SimRecord],
    metric: MetricKind,
    k: usize,
    kind: RegressorKind,
    level: f64,
    stream: Stream,
) -> Result<(EstimateReport, InfluenceBreakdown)> {
    check_level(level)?;
    let fit = cross_fit_tau(dataset, metric, k, kind, stream)?;
    let n = dataset.len();
    let mut phi = Vec::with_capacity(n);
    let mut tau_first = Vec::with_capacity(n);
    let mut m_hat = Vec::with_capacity(n);
    for (i, rec) in dataset.iter().enumerate() {
        let reg = fit.regressor_for(i);
        phi.push(metric.score(rec.y, rec.g)?);
        tau_first.push(reg.predict(rec.x, rec.correction()));
        m_hat.push(reg.integrate(rec.x, rec.mc_samples())?);
    }
    let m = dataset.iter().map(SimRecord::m).min().unwrap_or(0);
    one_step_from_nuisances(Method::OneStepCrossfit, metric, phi, tau_first, m_hat, m, k, level)
}

/// One-step estimator with a fixed external regressor; no cross-fitting.
pub fn one_step_fixed(
    dataset: &[BenchRecord],
    level: f64,
) -> Result<(EstimateReport, InfluenceBreakdown)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut clamped = 0;
    let mut phi = Vec::with_capacity(dataset.len());
    let mut tau_first = Vec::with_capacity(dataset.len());
    let mut m_hat = Vec::with_capacity(dataset.len());
    for rec in dataset {
        rec.validate()?;
        let slots = rec.aux.len();
        let mut integrand = Vec::with_capacity(slots - 1);
        for slot in 2..=slots {
            let t = external_tau(rec, slot)?;
            clamped += usize::from(t.clamped);
            integrand.push(t.value);
        }
        let first = external_tau(rec, 1)?;
        clamped += usize::from(first.clamped);
        phi.push(rec.phi_value());
        tau_first.push(first.value);
        m_hat.push(integrated_regression_mc(&integrand)?);
    }
    let m = dataset[0].m();
    let (report, mut breakdown) = one_step_from_nuisances(
        Method::OneStepFixed,
        MetricKind::Accuracy,
        phi,
        tau_first,
        m_hat,
        m,
        0,
        level,
    )?;
    breakdown.clamped_predictions = clamped;
    Ok((report, breakdown))
}

/// `1 - Var(psi) / Var(phi)` with `N - 1` sample variances.
pub fn empirical_vr(naive_scores: &[f64], influence_scores: &[f64]) -> Result<f64> {
    if naive_scores.is_empty() || influence_scores.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let var_naive = sample_variance(naive_scores);
    if var_naive <= 0.0 {
        return Err(Error::UndefinedVr);
    }
    Ok(1.0 - sample_variance(influence_scores) / var_naive)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orthogonality {
    pub covariance: f64,
    /// Jackknife standard error of `covariance`; NaN below three observations.
    pub standard_error: f64,
}

/// Sample covariance between `m_hat - theta` and `phi - tau_first`.
pub fn orthogonality_stat(
    m_hats: &[f64],
    theta: f64,
    phis: &[f64],
    tau_firsts: &[f64],
) -> Result<Orthogonality> {
    let n = m_hats.len();
    if n < 2 || phis.len() != n || tau_firsts.len() != n {
        return Err(Error::InvalidInput(format!(
            "orthogonality needs equal lengths >= 2, got {n}, {}, {}",
            phis.len(),
            tau_firsts.len()
        )));
    }
    // shift-invariant, so center on the first element for exact zeros on constants
    let a0 = m_hats[0] - theta;
    let b0 = phis[0] - tau_firsts[0];
    let a: Vec<f64> = m_hats.iter().map(|m| (m - theta) - a0).collect();
    let b: Vec<f64> = phis.iter().zip(tau_firsts).map(|(p, t)| (p - t) - b0).collect();

    let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    let sab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let nf = n as f64;
    let cov_from = |sa: f64, sb: f64, sab: f64, n: f64| (sab - sa * sb / n) / (n - 1.0);
    let covariance = cov_from(sa, sb, sab, nf);

    let standard_error = if n < 3 {
        f64::NAN
    } else {
        let loo: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| cov_from(sa - x, sb - y, sab - x * y, nf - 1.0))
            .collect();
        let loo_mean = mean(&loo);
        let ss: f64 = loo.iter().map(|c| (c - loo_mean) * (c - loo_mean)).sum();
        ((nf - 1.0) / nf * ss).sqrt()
    };
    Ok(Orthogonality {
        covariance,
        standard_error,
    })
}

/// Reduction in absolute error against ground truth: `|naive - gt| - |onestep - gt|`.
pub fn improvement_metric(naive_pct: f64, onestep_pct: f64, gt_pct: f64) -> f64 {
    (naive_pct - gt_pct).abs() - (onestep_pct - gt_pct).abs()
}
