use core::fmt;

use crate::error::{Error, Result};
use crate::linops::LinearOperator;
use crate::vector::norm;

/// Shape of the dual function, decided by where τ falls relative to
/// `dist(g, range A)` and `||g||`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `dist(g, range A) < τ < ||g||`: D attains its maximum at some λ̄ > 0.
    Interior,
    /// `τ >= ||g||`: D' < 0 everywhere, the maximum sits at λ = 0.
    NoiseDominates,
    /// `τ <= dist(g, range A)`: D' > 0 everywhere, no maximum is attained.
    TooOptimistic,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Interior => "interior",
            Regime::NoiseDominates => "noise_dominates",
            Regime::TooOptimistic => "too_optimistic",
        }
    }

    pub fn parse(s: &str) -> Option<Regime> {
        match s {
            "interior" => Some(Regime::Interior),
            "noise_dominates" => Some(Regime::NoiseDominates),
            "too_optimistic" => Some(Regime::TooOptimistic),
            _ => None,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeDiagnosis {
    pub dist_to_range: f64,
    pub data_norm: f64,
    pub tau: f64,
    pub regime: Regime,
}

impl RegimeDiagnosis {
    /// The violated inequality of `dist(g, range A) < τ < ||g||`, if any.
    pub fn failed_inequality(&self) -> Option<&'static str> {
        match self.regime {
            Regime::Interior => None,
            Regime::NoiseDominates => Some("tau >= ||g||"),
            Regime::TooOptimistic => Some("tau <= dist(g, range A)"),
        }
    }
}

/// Tolerance handed to `distance_to_range` by the diagnosis.
pub const DISTANCE_TOL: f64 = 1e-12;

/// Equalities count as failures: the existence argument needs both
/// inequalities strict.
pub fn diagnose_regime(a: &LinearOperator, g: &[f64], tau: f64) -> Result<RegimeDiagnosis> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!("tau must be positive, got {tau}")));
    }
    let dist_to_range = a.distance_to_range(g, DISTANCE_TOL)?;
    let data_norm = norm(g);
    let regime = if tau >= data_norm {
        Regime::NoiseDominates
    } else if tau <= dist_to_range {
        Regime::TooOptimistic
    } else {
        Regime::Interior
    };
    Ok(RegimeDiagnosis {
        dist_to_range,
        data_norm,
        tau,
        regime,
    })
}
