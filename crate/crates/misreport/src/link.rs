//! Link functions for the latent-index choice model.
//!
//! The true outcome is generated as `Y* = 1{x'beta >= eps}`, so
//! `Pr(Y* = 1 | x) = F(x'beta)` where `F` is the CDF of the latent error.
//! Every link here is a strictly increasing CDF with limits 0 and 1.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};

/// CDF of the latent error term in the index model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Link {
    /// Standard normal CDF (probit).
    StandardNormal,
    /// Standard logistic CDF (logit).
    Logistic,
    /// Cauchy CDF with the given location and scale.
    Cauchy { location: f64, scale: f64 },
}

impl Link {
    /// Cauchy link with location 0 and scale 1/2, the heavy-tailed error
    /// used by the simulation designs.
    pub fn half_cauchy() -> Self {
        Link::Cauchy {
            location: 0.0,
            scale: 0.5,
        }
    }

    /// Validates the link parameters.
    pub fn validate(&self) -> Result<()> {
        if let Link::Cauchy { location, scale } = self {
            if !location.is_finite() || !scale.is_finite() || *scale <= 0.0 {
                return Err(Error::validation(format!(
                    "cauchy link requires finite location and positive scale, got ({location}, {scale})"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates the CDF at `t`.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Link::StandardNormal => 0.5 * (1.0 + erf(t / std::f64::consts::SQRT_2)),
            Link::Logistic => 1.0 / (1.0 + (-t).exp()),
            Link::Cauchy { location, scale } => {
                0.5 + ((t - location) / scale).atan() / std::f64::consts::PI
            }
        }
    }
}
