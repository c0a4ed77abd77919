//! Gaussian data-generating process and its closed-form nuisances.
//!
//! For model `l` each instance draws `x ~ N(0,1)`, sets `g = x` and
//! `y = x + eps` with `eps ~ N(0, sigma_l^2)`. Auxiliary responses are
//! `w_s = x + rho_s * e + eta_s` with `eta_s ~ N(0, sigma_eta^2)`, and the
//! preference flag is `v = 1{|w1 - y'| <= |w2 - y'|}` where `y' = x + e`.
//!
//! The correction triple (index 0) uses the instance's own latent, `e = eps`.
//! The `M` Monte Carlo triples are draws from `P(Z | X)`: each gets a fresh
//! latent `e ~ N(0, sigma_l^2)`, so their average of `tau` integrates over
//! the auxiliary law rather than conditioning on `eps`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{AuxTriple, SimRecord};
use crate::stream::{domain, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Instances per dataset.
    pub n: usize,
    /// Monte Carlo samples per instance.
    pub m: usize,
    /// Output-noise variance of each model, in model order.
    pub sigma_sq_per_model: Vec<f64>,
    pub rho1: f64,
    pub rho2: f64,
    pub sigma_eta: f64,
    pub seed: u64,
    pub trials: usize,
    /// Cross-fitting folds.
    pub folds: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            m: 500,
            sigma_sq_per_model: vec![1.0, 1.05, 1.1],
            rho1: 0.8,
            rho2: 0.6,
            sigma_eta: 0.6,
            seed: 42,
            trials: 100,
            folds: 5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        if self.m < 1 {
            return bad("m must be >= 1".into());
        }
        if self.sigma_sq_per_model.is_empty() {
            return bad("sigma_sq_per_model must not be empty".into());
        }
        if let Some(s) = self
            .sigma_sq_per_model
            .iter()
            .find(|s| !(s.is_finite() && **s > 0.0))
        {
            return bad(format!("every sigma_sq must be finite and > 0, got {s}"));
        }
        if !self.rho1.is_finite() || !self.rho2.is_finite() {
            return bad("rho1 and rho2 must be finite".into());
        }
        if !(self.sigma_eta.is_finite() && self.sigma_eta >= 0.0) {
            return bad(format!("sigma_eta must be >= 0, got {}", self.sigma_eta));
        }
        if self.trials < 1 {
            return bad("trials must be >= 1".into());
        }
        if self.folds < 2 || self.folds > self.n {
            return bad(format!(
                "folds must satisfy 2 <= folds <= n, got {} with n = {}",
                self.folds, self.n
            ));
        }
        Ok(())
    }

    pub fn models(&self) -> usize {
        self.sigma_sq_per_model.len()
    }

    /// Closed-form parameters for `model_index` (the oracle reads `w1` only).
    pub fn oracle_params(&self, model_index: usize) -> Result<OracleParams> {
        let sigma_sq = *self.sigma_sq_per_model.get(model_index).ok_or_else(|| {
            Error::InvalidInput(format!(
                "model index {model_index} out of range for {} models",
                self.models()
            ))
        })?;
        OracleParams::new(sigma_sq, self.rho1, self.sigma_eta)
    }
}

/// Generates the dataset of `model_index` for the trial owning `stream`.
pub fn gen_sim_dataset(
    config: &SimConfig,
    model_index: usize,
    stream: Stream,
) -> Result<Vec<SimRecord>> {
    config.validate()?;
    if model_index >= config.models() {
        return Err(Error::InvalidInput(format!(
            "model index {model_index} out of range for {} models",
            config.models()
        )));
    }
    let sigma = config.sigma_sq_per_model[model_index].sqrt();
    let base = stream.child(domain::DATA).child(model_index as u64);
    let records = (0..config.n)
        .map(|i| gen_instance(config, sigma, base.child(i as u64)))
        .collect();
    Ok(records)
}

fn gen_instance(config: &SimConfig, sigma: f64, stream: Stream) -> SimRecord {
    let mut rng = stream.rng();
    let mut normal = move || -> f64 { rng.sample(StandardNormal) };

    let x = normal();
    let eps = sigma * normal();
    let y = x + eps;
    let mut aux = Vec::with_capacity(config.m + 1);
    for slot in 0..=config.m {
        let latent = if slot == 0 { eps } else { sigma * normal() };
        let w1 = x + config.rho1 * latent + config.sigma_eta * normal();
        let w2 = x + config.rho2 * latent + config.sigma_eta * normal();
        let output = x + latent;
        aux.push(AuxTriple::new(w1, w2, preference_label(w1, w2, output)));
    }
    SimRecord { x, y, g: x, aux }
}

/// `true` iff the first response is at least as close to the output; ties prefer `w1`.
///
/// Distances that differ only by rounding (relative 1e-12) count as ties.
pub fn preference_label(w1: f64, w2: f64, y: f64) -> bool {
    let d1 = (w1 - y).abs();
    let d2 = (w2 - y).abs();
    let scale = w1.abs().max(w2.abs()).max(y.abs()).max(1.0);
    d1 <= d2 + TIE_TOLERANCE * scale
}

const TIE_TOLERANCE: f64 = 1e-12;

/// Parameters of the closed-form nuisances for one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    pub sigma_sq: f64,
    pub rho: f64,
    pub sigma_eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalVariances {
    pub var_naive: f64,
    pub var_onestep: f64,
    /// Variance reduction ratio `1 - var_onestep / var_naive`.
    pub vr: f64,
}

impl OracleParams {
    pub fn new(sigma_sq: f64, rho: f64, sigma_eta: f64) -> Result<Self> {
        if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
            return Err(Error::InvalidInput(format!("sigma_sq must be > 0, got {sigma_sq}")));
        }
        if !(sigma_eta.is_finite() && sigma_eta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "sigma_eta must be >= 0, got {sigma_eta}"
            )));
        }
        if !rho.is_finite() {
            return Err(Error::InvalidInput("rho must be finite".into()));
        }
        Ok(Self {
            sigma_sq,
            rho,
            sigma_eta,
        })
    }

    /// `Var(S)` for the centered signal `S = W - X = rho * eps + eta`.
    fn signal_variance(&self) -> Result<f64> {
        let v = self.rho * self.rho * self.sigma_sq + self.sigma_eta * self.sigma_eta;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::DegenerateSignal)
        }
    }

    /// Regression slope of `eps` on `S`.
    pub fn kappa(&self) -> Result<f64> {
        Ok(self.rho * self.sigma_sq / self.signal_variance()?)
    }

    /// `E[phi | X, Z] = (1 - kappa rho) sigma^2 + kappa^2 (w1 - x)^2`.
    pub fn tau(&self, x: f64, w1: f64) -> Result<f64> {
        let kappa = self.kappa()?;
        let s = w1 - x;
        Ok((1.0 - kappa * self.rho) * self.sigma_sq + kappa * kappa * s * s)
    }

    /// `E[phi | X]`, constant in this design and equal to the target `sigma^2`.
    pub fn m(&self) -> f64 {
        self.sigma_sq
    }

    /// Efficient influence function for the squared-error target.
    pub fn influence(&self, x: f64, y: f64, g: f64, w1: f64) -> Result<f64> {
        let d = y - g;
        Ok(d * d - self.tau(x, w1)?)
    }

    pub fn r_squared(&self) -> Result<f64> {
        Ok(self.rho * self.rho * self.sigma_sq / self.signal_variance()?)
    }

    /// Asymptotic variances of the naive and one-step estimators.
    ///
    /// A zero-variance signal carries no information, so `vr` is 0 there.
    pub fn variances(&self) -> TheoreticalVariances {
        let var_naive = 2.0 * self.sigma_sq * self.sigma_sq;
        let r2 = self.r_squared().unwrap_or(0.0);
        let vr = r2 * r2;
        TheoreticalVariances {
            var_naive,
            var_onestep: var_naive * (1.0 - vr),
            vr,
        }
    }
}
