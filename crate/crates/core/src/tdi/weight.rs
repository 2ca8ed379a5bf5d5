use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decay family for the forward-fill weight, evaluated at `x = f · r · Δt`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightFamily {
    /// `1 / (1 + x)`
    #[default]
    Reciprocal,
    /// `exp(−x)`
    Exponential,
    /// Fixed weight regardless of the inputs. Ablation only: it does not
    /// decay and so recovers one constituent exactly (1 = forward fill,
    /// 0 = iterative).
    Constant(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    #[serde(default)]
    pub family: WeightFamily,
}

impl WeightConfig {
    pub fn new(family: WeightFamily) -> Self {
        Self { family }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            WeightFamily::Constant(c) if !(0.0..=1.0).contains(&c) => Err(Error::InvalidParameter(
                format!("constant weight must lie in [0, 1], got {c}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Weight given to the forward-filled value.
///
/// `f` is a frequency in 1/hours, `r` the row availability and `dt` the hours
/// since the last observation. `dt = +∞` always yields 0: with no earlier
/// observation there is nothing to carry forward, whatever `f · r` is.
pub fn weight(f: f64, r: f64, dt: f64, cfg: &WeightConfig) -> Result<f64> {
    if !(f >= 0.0 && f.is_finite() && (0.0..=1.0).contains(&r) && dt >= 0.0) {
        return Err(Error::DomainError { f, r, dt });
    }
    Ok(match cfg.family {
        WeightFamily::Constant(c) => c,
        _ if dt.is_infinite() => 0.0,
        WeightFamily::Reciprocal => 1.0 / (1.0 + f * r * dt),
        WeightFamily::Exponential => (-(f * r * dt)).exp(),
    })
}
