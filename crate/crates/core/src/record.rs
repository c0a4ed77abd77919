//! Observation records shared by the simulation and benchmark pipelines.
//!
//! Every record carries `M + 1` auxiliary triples. Index 0 (slot 1 in the
//! one-based numbering used by the CLI and file formats) is the correction
//! sample paired with the observed output; the remaining `M` entries are
//! Monte Carlo draws used to integrate the outcome regression.

use crate::error::{Error, Result};

/// Two auxiliary responses and the target model's preference between them.
///
/// `W` is `f64` for simulated data and `String` for benchmark chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxTriple<W> {
    pub w1: W,
    pub w2: W,
    /// `true` when the first response is preferred.
    pub v: bool,
}

impl<W> AuxTriple<W> {
    pub fn new(w1: W, w2: W, v: bool) -> Self {
        Self { w1, w2, v }
    }
}

/// One simulated evaluation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub x: f64,
    pub y: f64,
    pub g: f64,
    pub aux: Vec<AuxTriple<f64>>,
}

impl SimRecord {
    pub fn correction(&self) -> &AuxTriple<f64> {
        &self.aux[0]
    }

    pub fn mc_samples(&self) -> &[AuxTriple<f64>] {
        &self.aux[1..]
    }

    /// Number of Monte Carlo samples `M`.
    pub fn m(&self) -> usize {
        self.aux.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.aux.len() < 2 {
            return Err(Error::Contract(format!(
                "sim record needs at least 2 aux triples, got {}",
                self.aux.len()
            )));
        }
        Ok(())
    }
}

/// One benchmark instance with externally produced outcome-regression predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub ground_truth: String,
    /// Pre-scored correctness of `answer`.
    pub phi: bool,
    pub aux: Vec<AuxTriple<String>>,
    /// Semantic-regressor predictions aligned index-for-index with `aux`.
    pub tau_pred: Vec<f64>,
}

impl BenchRecord {
    pub fn m(&self) -> usize {
        self.aux.len().saturating_sub(1)
    }

    pub fn phi_value(&self) -> f64 {
        if self.phi {
            1.0
        } else {
            0.0
        }
    }

    /// Checks the structural invariants of a benchmark record.
    ///
    /// Out-of-range (but finite) predictions are accepted here; they are
    /// clamped and counted when served by [`crate::nuisance::external_tau`].
    pub fn validate(&self) -> Result<()> {
        if self.aux.len() < 2 {
            return Err(Error::Contract(format!(
                "record {:?}: aux must hold at least 2 triples, got {}",
                self.id,
                self.aux.len()
            )));
        }
        if self.tau_pred.len() != self.aux.len() {
            return Err(Error::Contract(format!(
                "record {:?}: tau_pred has {} entries but aux has {}",
                self.id,
                self.tau_pred.len(),
                self.aux.len()
            )));
        }
        if let Some(pos) = self.tau_pred.iter().position(|t| !t.is_finite()) {
            return Err(Error::Contract(format!(
                "record {:?}: tau_pred[{pos}] is not finite",
                self.id
            )));
        }
        Ok(())
    }
}
