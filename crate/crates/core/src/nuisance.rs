//! Outcome-regression nuisance `tau(x, z)`: feature map, least squares,
//! cross-fitting folds, and the fixed external regressor.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::metric::MetricKind;
use crate::record::{AuxTriple, BenchRecord, SimRecord};
use crate::stream::{domain, Stream};

/// Number of regression features produced by [`build_features`].
pub const FEATURES: usize = 4;

/// Diagonal ridge added to the normal equations.
pub const RIDGE_GUARD: f64 = 1e-8;

/// Smallest Cholesky pivot, relative to the largest, accepted as full rank.
const RANK_TOLERANCE: f64 = 1e-15;

/// `[1, (w1 - x)^2, (w2 - x)^2, v]`.
pub fn build_features(x: f64, t: &AuxTriple<f64>) -> [f64; FEATURES] {
    let s1 = t.w1 - x;
    let s2 = t.w2 - x;
    [1.0, s1 * s1, s2 * s2, if t.v { 1.0 } else { 0.0 }]
}

/// Least-squares coefficients with a tiny ridge guard.
pub fn fit_ols<R: AsRef<[f64]>>(rows: &[R], targets: &[f64]) -> Result<Vec<f64>> {
    let n = rows.len();
    if n != targets.len() {
        return Err(Error::InvalidInput(format!(
            "{n} feature rows but {} targets",
            targets.len()
        )));
    }
    let p = rows.first().map_or(0, |r| r.as_ref().len());
    if p == 0 {
        return Err(Error::InvalidInput("design matrix has no columns".into()));
    }
    if n < p {
        return Err(Error::SingularDesign(format!("{n} rows for {p} columns")));
    }

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut moment = DVector::<f64>::zeros(p);
    for (row, &t) in rows.iter().zip(targets) {
        let row = row.as_ref();
        if row.len() != p {
            return Err(Error::InvalidInput(format!(
                "ragged design: expected {p} columns, got {}",
                row.len()
            )));
        }
        if !t.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value in regression data".into()));
        }
        for a in 0..p {
            moment[a] += row[a] * t;
            for b in a..p {
                gram[(a, b)] += row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
        gram[(a, a)] += RIDGE_GUARD;
    }

    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::SingularDesign("normal equations are not positive definite".into()))?;
    let pivots = chol.l_dirty().diagonal();
    let max = pivots.iter().fold(0.0f64, |m, v| m.max(v * v));
    let min = pivots.iter().fold(f64::INFINITY, |m, v| m.min(v * v));
    if min.is_nan() || min <= RANK_TOLERANCE * max {
        return Err(Error::SingularDesign(format!(
            "pivot ratio {:.3e} below tolerance",
            min / max
        )));
    }
    let coef = chol.solve(&moment);
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::SingularDesign("non-finite coefficients".into()));
    }
    Ok(coef.iter().copied().collect())
}

/// Balanced partition of `0..n` into `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    n: usize,
    k: usize,
    /// Zero-based fold id of each instance.
    fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles `0..n` and deals it into `k` folds; the first `n mod k` folds get one extra.
pub fn make_folds(n: usize, k: usize, stream: Stream) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidFolds { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream.rng());

    let (base, extra) = (n / k, n % k);
    let mut fold_of = vec![0; n];
    let mut cursor = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &order[cursor..cursor + size] {
            fold_of[i] = fold;
        }
        cursor += size;
    }
    Ok(FoldAssignment { n, k, fold_of })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegressorKind {
    #[default]
    OlsQuadratic,
    /// `[1, (w1 - x)^2]` only: the feature set of the closed-form oracle.
    OlsSingleSignal,
    Constant,
}

/// A fitted outcome regression.
#[derive(Debug, Clone, PartialEq)]
pub enum Regressor {
    OlsQuadratic { coef: [f64; FEATURES] },
    OlsSingleSignal { coef: [f64; 2] },
    Constant(f64),
}

impl Regressor {
    pub fn fit(kind: RegressorKind, rows: &[[f64; FEATURES]], targets: &[f64]) -> Result<Self> {
        match kind {
            RegressorKind::OlsQuadratic => {
                let coef = fit_ols(rows, targets)?;
                let mut fixed = [0.0; FEATURES];
                fixed.copy_from_slice(&coef);
                Ok(Regressor::OlsQuadratic { coef: fixed })
            }
            RegressorKind::OlsSingleSignal => {
                let reduced: Vec<[f64; 2]> = rows.iter().map(|r| [r[0], r[1]]).collect();
                let coef = fit_ols(&reduced, targets)?;
                Ok(Regressor::OlsSingleSignal {
                    coef: [coef[0], coef[1]],
                })
            }
            RegressorKind::Constant => {
                if targets.is_empty() {
                    return Err(Error::EmptyDataset);
                }
                Ok(Regressor::Constant(
                    targets.iter().sum::<f64>() / targets.len() as f64,
                ))
            }
        }
    }

    pub fn predict(&self, x: f64, t: &AuxTriple<f64>) -> f64 {
        match self {
            Regressor::OlsQuadratic { coef } => {
                let f = build_features(x, t);
                coef.iter().zip(f).map(|(c, v)| c * v).sum()
            }
            Regressor::OlsSingleSignal { coef } => {
                let s1 = t.w1 - x;
                coef[0] + coef[1] * s1 * s1
            }
            Regressor::Constant(c) => *c,
        }
    }

    /// Monte Carlo integral of the regression over `samples`.
    ///
    /// A constant regressor integrates to itself exactly.
    pub fn integrate(&self, x: f64, samples: &[AuxTriple<f64>]) -> Result<f64> {
        match self {
            Regressor::Constant(c) if !samples.is_empty() => Ok(*c),
            _ => {
                let values: Vec<f64> = samples.iter().map(|t| self.predict(x, t)).collect();
                crate::estimate::integrated_regression_mc(&values)
            }
        }
    }
}

/// Out-of-fold regressors for every instance of a dataset.
#[derive(Debug, Clone)]
pub struct CrossFit {
    folds: FoldAssignment,
    regressors: Vec<Regressor>,
    training: Vec<Vec<usize>>,
}

impl CrossFit {
    pub fn folds(&self) -> &FoldAssignment {
        &self.folds
    }

    /// The regressor whose training set excludes instance `i`.
    pub fn regressor_for(&self, i: usize) -> &Regressor {
        &self.regressors[self.folds.fold_of(i)]
    }

    pub fn fold_regressor(&self, fold: usize) -> &Regressor {
        &self.regressors[fold]
    }

    /// Indices used to train the regressor serving instance `i`.
    pub fn training_set(&self, i: usize) -> &[usize] {
        &self.training[self.folds.fold_of(i)]
    }
}

/// Fits one regressor per fold on the correction triple of every out-of-fold instance.
pub fn cross_fit_tau(
    dataset: &[SimRecord],
    metric: MetricKind,
    k: usize,
    kind: RegressorKind,
    stream: Stream,
) -> Result<CrossFit> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let folds = make_folds(dataset.len(), k, stream.child(domain::FOLDS))?;

    let mut rows = Vec::with_capacity(dataset.len());
    let mut phis = Vec::with_capacity(dataset.len());
    for rec in dataset {
        rec.validate()?;
        rows.push(build_features(rec.x, rec.correction()));
        phis.push(metric.score(rec.y, rec.g)?);
    }

    let mut regressors = Vec::with_capacity(k);
    let mut training = Vec::with_capacity(k);
    for fold in 0..k {
        let train = folds.complement(fold);
        let train_rows: Vec<[f64; FEATURES]> = train.iter().map(|&i| rows[i]).collect();
        let train_phis: Vec<f64> = train.iter().map(|&i| phis[i]).collect();
        regressors.push(Regressor::fit(kind, &train_rows, &train_phis)?);
        training.push(train);
    }
    Ok(CrossFit {
        folds,
        regressors,
        training,
    })
}

/// A semantic-regressor prediction after clamping to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalTau {
    pub value: f64,
    pub clamped: bool,
}

/// Prediction for one-based `slot` of a benchmark record.
pub fn external_tau(record: &BenchRecord, slot: usize) -> Result<ExternalTau> {
    let raw = slot
        .checked_sub(1)
        .and_then(|i| record.tau_pred.get(i))
        .copied()
        .ok_or(Error::MissingTau {
            slot,
            available: record.tau_pred.len(),
        })?;
    if !raw.is_finite() {
        return Err(Error::InvalidInput(format!(
            "record {:?}: tau_pred slot {slot} is not finite",
            record.id
        )));
    }
    let value = raw.clamp(0.0, 1.0);
    Ok(ExternalTau {
        value,
        clamped: value != raw,
    })
}
