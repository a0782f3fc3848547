use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Inertial-parameter schedule `k ↦ β_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentumSchedule {
    Constant {
        beta0: f64,
    },
    /// `β_0 = beta0`, then `β_k = min(beta0, k^−θ)`; summable when `θ > 1`.
    PowerDecay {
        beta0: f64,
        theta: f64,
    },
}

impl MomentumSchedule {
    pub fn constant(beta: f64) -> Self {
        MomentumSchedule::Constant { beta0: beta }
    }

    pub fn power_decay(beta0: f64, theta: f64) -> Self {
        MomentumSchedule::PowerDecay { beta0, theta }
    }

    pub fn beta0(&self) -> f64 {
        match *self {
            MomentumSchedule::Constant { beta0 } | MomentumSchedule::PowerDecay { beta0, .. } => beta0,
        }
    }

    pub fn beta_at(&self, k: usize) -> f64 {
        match *self {
            MomentumSchedule::Constant { beta0 } => beta0,
            MomentumSchedule::PowerDecay { beta0, theta } => {
                if k == 0 {
                    beta0
                } else {
                    beta0.min((k as f64).powf(-theta))
                }
            }
        }
    }

    /// Checks `0 ≤ β_k < upper` for all `k` (and `θ > 1` for power decay).
    pub fn validate(&self, upper: f64) -> Result<()> {
        let beta0 = self.beta0();
        if !(0.0..upper).contains(&beta0) {
            return Err(Error::param(
                "beta",
                format!("β₀ = {beta0} must lie in [0, {upper})"),
            ));
        }
        if let MomentumSchedule::PowerDecay { theta, .. } = *self {
            if !(theta > 1.0 && theta.is_finite()) {
                return Err(Error::param("theta", format!("θ = {theta} must exceed 1")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for MomentumSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MomentumSchedule::Constant { beta0 } => write!(f, "{beta0}"),
            MomentumSchedule::PowerDecay { beta0, theta } => write!(f, "power:{beta0}:{theta}"),
        }
    }
}

/// Parses `0.3` (constant) or `power:<beta0>:<theta>`.
impl FromStr for MomentumSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("power:") {
            let (b, t) = rest
                .split_once(':')
                .ok_or_else(|| Error::param("beta", "expected power:<beta0>:<theta>"))?;
            let beta0 = b
                .parse()
                .map_err(|_| Error::param("beta", format!("bad β₀ `{b}`")))?;
            let theta = t
                .parse()
                .map_err(|_| Error::param("theta", format!("bad θ `{t}`")))?;
            return Ok(MomentumSchedule::power_decay(beta0, theta));
        }
        s.parse()
            .map(MomentumSchedule::constant)
            .map_err(|_| Error::param("beta", format!("bad value `{s}`")))
    }
}
