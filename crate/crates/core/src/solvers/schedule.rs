use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::priors::PriorChain;

use super::trace::ConvergenceTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    FromStart,
    /// Enabled once the previous phase has become stationary.
    AfterStationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorPhase {
    pub chain: PriorChain,
    pub activation: Activation,
}

impl PriorPhase {
    pub fn from_start(chain: PriorChain) -> Self {
        Self {
            chain,
            activation: Activation::FromStart,
        }
    }

    pub fn after_stationary(chain: PriorChain) -> Self {
        Self {
            chain,
            activation: Activation::AfterStationary,
        }
    }
}

/// Outer-loop budget, stopping rule and prior phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSchedule {
    pub max_outer_iter: usize,
    /// Relative residual change regarded as stationary.
    pub stop_tol: f64,
    pub stop_window: usize,
    pub prior_phases: Vec<PriorPhase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hio_beta: Option<f64>,
    /// Starting estimate; the zero-phase backprojection when absent.
    #[serde(skip)]
    pub initial: Option<ComplexField>,
}

impl Default for SolveSchedule {
    fn default() -> Self {
        Self {
            max_outer_iter: 200,
            stop_tol: 1e-4,
            stop_window: 5,
            prior_phases: vec![PriorPhase::from_start(PriorChain::empty())],
            hio_beta: None,
            initial: None,
        }
    }
}

impl SolveSchedule {
    pub fn with_phases(prior_phases: Vec<PriorPhase>) -> Self {
        Self {
            prior_phases,
            ..Self::default()
        }
    }

    pub fn max_outer_iter(mut self, n: usize) -> Self {
        self.max_outer_iter = n;
        self
    }

    pub fn stop_rule(mut self, tol: f64, window: usize) -> Self {
        self.stop_tol = tol;
        self.stop_window = window;
        self
    }

    pub fn hio(mut self, beta: f64) -> Self {
        self.hio_beta = Some(beta);
        self
    }

    pub fn initial(mut self, field: ComplexField) -> Self {
        self.initial = Some(field);
        self
    }

    pub fn requires_denoiser(&self) -> bool {
        self.prior_phases.iter().any(|p| p.chain.requires_denoiser())
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iter < 1 {
            return Err(Error::InvalidSchedule("max_outer_iter must be >= 1".into()));
        }
        if !(self.stop_tol.is_finite() && self.stop_tol > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "stop_tol must be > 0, got {}",
                self.stop_tol
            )));
        }
        if self.stop_window < 1 {
            return Err(Error::InvalidSchedule("stop_window must be >= 1".into()));
        }
        if self.prior_phases.is_empty() {
            return Err(Error::InvalidSchedule("at least one prior phase is required".into()));
        }
        for (i, p) in self.prior_phases.iter().enumerate() {
            let expected = if i == 0 {
                Activation::FromStart
            } else {
                Activation::AfterStationary
            };
            if p.activation != expected {
                return Err(Error::InvalidSchedule(format!(
                    "prior phase {i} must be {expected:?}, got {:?}",
                    p.activation
                )));
            }
            p.chain.validate()?;
        }
        if let Some(beta) = self.hio_beta {
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(Error::InvalidSchedule(format!(
                    "hio_beta must lie in (0, 1], got {beta}"
                )));
            }
        }
        Ok(())
    }
}

/// True iff each of the last `window` residuals differs from its
/// predecessor by less than `tol` relative.
pub fn detect_stationary_residuals(residuals: &[f64], tol: f64, window: usize) -> bool {
    if window == 0 || residuals.len() < window + 1 {
        return false;
    }
    residuals[residuals.len() - window - 1..]
        .windows(2)
        .all(|w| {
            let (prev, cur) = (w[0], w[1]);
            let change = (cur - prev).abs();
            if prev == 0.0 {
                change == 0.0
            } else {
                change / prev.abs() < tol
            }
        })
}

pub fn detect_stationary(trace: &ConvergenceTrace, tol: f64, window: usize) -> bool {
    detect_stationary_residuals(&trace.residuals(), tol, window)
}
