//! Repeated-trial ranking experiments and rank-agreement metrics.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::estimate::{mean, naive_estimate, one_step_crossfit};
use crate::metric::MetricKind;
use crate::simulate::{gen_sim_dataset, SimConfig};
use crate::stream::Stream;

/// An ordering of models, stored as one-based model ids from first to last.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &id in &order {
            if id == 0 || id > n || std::mem::replace(&mut seen[id - 1], true) {
                return Err(Error::InvalidInput(format!(
                    "{order:?} is not a permutation of 1..={n}"
                )));
            }
        }
        Ok(Self(order))
    }

    pub fn identity(n: usize) -> Self {
        Self((1..=n).collect())
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Zero-based position of each model id.
    fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (p, &id) in self.0.iter().enumerate() {
            pos[id - 1] = p;
        }
        pos
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", ids.join(","))
    }
}

/// Ascending argsort (lowest loss first); ties go to the lower model index.
pub fn rank_models(estimates: &[f64]) -> Result<Permutation> {
    if estimates.len() < 2 {
        return Err(Error::InvalidInput("ranking needs at least two models".into()));
    }
    if let Some(index) = estimates.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidEstimate {
            index: index + 1,
            value: estimates[index],
        });
    }
    let mut order: Vec<usize> = (0..estimates.len()).collect();
    order.sort_by(|&a, &b| estimates[a].total_cmp(&estimates[b]).then(a.cmp(&b)));
    Ok(Permutation(order.into_iter().map(|i| i + 1).collect()))
}

/// Fraction of `rankings` identical to `truth`.
pub fn exact_match(rankings: &[Permutation], truth: &Permutation) -> Result<f64> {
    if let Some(bad) = rankings.iter().find(|r| r.len() != truth.len()) {
        return Err(Error::InvalidInput(format!(
            "ranking {bad} has length {} but truth has {}",
            bad.len(),
            truth.len()
        )));
    }
    if rankings.is_empty() {
        return Err(Error::InvalidInput("no rankings".into()));
    }
    let hits = rankings.iter().filter(|r| *r == truth).count();
    Ok(hits as f64 / rankings.len() as f64)
}

/// Kendall's tau-a: `(n_c - n_d) / (L (L - 1) / 2)`.
pub fn kendall_tau(pi_hat: &Permutation, pi_star: &Permutation) -> Result<f64> {
    let l = pi_hat.len();
    if l < 2 || pi_star.len() != l {
        return Err(Error::InvalidInput(format!(
            "kendall tau needs two permutations of equal length >= 2, got {} and {}",
            l,
            pi_star.len()
        )));
    }
    let (a, b) = (pi_hat.positions(), pi_star.positions());
    let mut balance: i64 = 0;
    for i in 0..l {
        for j in i + 1..l {
            let agree = (a[i] < a[j]) == (b[i] < b[j]);
            balance += if agree { 1 } else { -1 };
        }
    }
    Ok(balance as f64 / (l * (l - 1) / 2) as f64)
}

/// How the one-step estimate is formed in a ranking trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    Naive,
    /// Cross-fitted regression with Monte Carlo integrated regression.
    OneStep,
    /// Closed-form nuisances: `tau(x, w1)` and `m = sigma_l^2`.
    Oracle,
}

impl RankMethod {
    pub const ALL: [RankMethod; 3] = [RankMethod::Naive, RankMethod::OneStep, RankMethod::Oracle];
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankMethod::Naive => "naive",
            RankMethod::OneStep => "one_step",
            RankMethod::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSummary {
    pub method: RankMethod,
    pub trials: usize,
    pub rankings: Vec<Permutation>,
    pub exact_match: f64,
    pub kendall_mean: f64,
    pub sweep_coordinate: Option<f64>,
}

impl RankingSummary {
    fn from_rankings(
        method: RankMethod,
        rankings: Vec<Permutation>,
        truth: &Permutation,
    ) -> Result<Self> {
        let exact = exact_match(&rankings, truth)?;
        let taus = rankings
            .iter()
            .map(|r| kendall_tau(r, truth))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            method,
            trials: rankings.len(),
            exact_match: exact,
            kendall_mean: mean(&taus),
            rankings,
            sweep_coordinate: None,
        })
    }
}

/// Summaries of every estimator over the same simulated trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingComparison {
    pub naive: RankingSummary,
    pub one_step: RankingSummary,
    pub oracle: RankingSummary,
}

impl RankingComparison {
    pub fn get(&self, method: RankMethod) -> &RankingSummary {
        match method {
            RankMethod::Naive => &self.naive,
            RankMethod::OneStep => &self.one_step,
            RankMethod::Oracle => &self.oracle,
        }
    }

    fn at(mut self, coordinate: f64) -> Self {
        for s in [&mut self.naive, &mut self.one_step, &mut self.oracle] {
            s.sweep_coordinate = Some(coordinate);
        }
        self
    }
}

/// Per-model estimates of one trial, indexed `[method][model]`.
fn trial_estimates(config: &SimConfig, trial: usize) -> Result<[Vec<f64>; 3]> {
    let stream = Stream::trial(config.seed, trial as u64);
    let mut out = [Vec::new(), Vec::new(), Vec::new()];
    for model in 0..config.models() {
        let data = gen_sim_dataset(config, model, stream)?;
        let phis: Vec<f64> = data.iter().map(|r| (r.y - r.g).powi(2)).collect();
        let naive = naive_estimate(&phis, 0.95)?;
        let (one_step, parts) = one_step_crossfit(
            &data,
            MetricKind::SquaredError,
            config.folds,
            0.95,
            stream.child(model as u64),
        )?;
        let params = config.oracle_params(model)?;
        let residuals = data
            .iter()
            .zip(&parts.phi)
            .map(|(r, phi)| Ok(phi - params.tau(r.x, r.correction().w1)?))
            .collect::<Result<Vec<_>>>()?;
        let oracle = params.m() + mean(&residuals);
        out[0].push(naive.theta_hat);
        out[1].push(one_step.theta_hat);
        out[2].push(oracle);
    }
    Ok(out)
}

/// Runs `config.trials` independent trials and ranks the models with every estimator.
///
/// Trials may execute in parallel; results are reduced in trial order.
pub fn run_ranking_experiment(config: &SimConfig, truth: &Permutation) -> Result<RankingComparison> {
    config.validate()?;
    let l = config.models();
    if l < 2 {
        return Err(Error::InvalidConfig("ranking needs at least two models".into()));
    }
    if truth.len() != l {
        return Err(Error::InvalidInput(format!(
            "truth has {} entries for {l} models",
            truth.len()
        )));
    }
    let per_trial = (0..config.trials)
        .into_par_iter()
        .map(|t| trial_estimates(config, t))
        .collect::<Result<Vec<_>>>()?;

    let rankings = |which: usize| {
        per_trial
            .iter()
            .map(|est| rank_models(&est[which]))
            .collect::<Result<Vec<_>>>()
    };
    Ok(RankingComparison {
        naive: RankingSummary::from_rankings(RankMethod::Naive, rankings(0)?, truth)?,
        one_step: RankingSummary::from_rankings(RankMethod::OneStep, rankings(1)?, truth)?,
        oracle: RankingSummary::from_rankings(RankMethod::Oracle, rankings(2)?, truth)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Shift every model's variance by a common base, keeping the gaps.
    BaseSigma,
    SigmaEta,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::BaseSigma => "base_sigma",
            SweepAxis::SigmaEta => "sigma_eta",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base_sigma" => Ok(SweepAxis::BaseSigma),
            "sigma_eta" => Ok(SweepAxis::SigmaEta),
            other => Err(Error::InvalidInput(format!(
                "unknown sweep axis {other:?} (expected base_sigma or sigma_eta)"
            ))),
        }
    }
}

/// `config` with the swept parameter set to `value`.
///
/// For [`SweepAxis::BaseSigma`] the first model gets `value` and the others
/// keep their offsets from the first model.
pub fn config_at(config: &SimConfig, axis: SweepAxis, value: f64) -> SimConfig {
    let mut c = config.clone();
    match axis {
        SweepAxis::BaseSigma => {
            let base = config.sigma_sq_per_model.first().copied().unwrap_or(0.0);
            c.sigma_sq_per_model = config
                .sigma_sq_per_model
                .iter()
                .map(|s| value + (s - base))
                .collect();
        }
        SweepAxis::SigmaEta => c.sigma_eta = value,
    }
    c
}

/// Runs the ranking experiment at every grid point, all else held fixed.
///
/// Grid points reuse the same random streams, so differences between points
/// come from the swept parameter alone.
pub fn sweep(config: &SimConfig, axis: SweepAxis, grid: &[f64]) -> Result<Vec<RankingComparison>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    let truth = Permutation::identity(config.models());
    grid.iter()
        .map(|&value| {
            let c = config_at(config, axis, value);
            if !c.sigma_sq_per_model.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidConfig(
                    "sigma_sq_per_model must be strictly increasing".into(),
                ));
            }
            Ok(run_ranking_experiment(&c, &truth)?.at(value))
        })
        .collect()
}

/// Spearman rank correlation with a one-sided p-value for a decreasing trend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendTest {
    pub rho: f64,
    /// `P(rho_null <= rho)` from the Student-t approximation.
    pub p_decreasing: f64,
}

pub fn spearman_trend(xs: &[f64], ys: &[f64]) -> Result<TrendTest> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return Err(Error::InvalidInput(format!(
            "trend test needs two series of equal length >= 3, got {n} and {}",
            ys.len()
        )));
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let (mx, my) = (mean(&rx), mean(&ry));
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Ok(TrendTest {
            rho: 0.0,
            p_decreasing: 1.0,
        });
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_decreasing = if rho <= -1.0 {
        0.0
    } else if rho >= 1.0 {
        1.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        StudentsT::new(0.0, 1.0, df)
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .cdf(t)
    };
    Ok(TrendTest { rho, p_decreasing })
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}
