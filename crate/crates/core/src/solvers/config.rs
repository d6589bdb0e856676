use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    MonolithicBfgs,
    MonolithicNewton,
    Staggered,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [
        Scheme::MonolithicBfgs,
        Scheme::MonolithicNewton,
        Scheme::Staggered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::MonolithicBfgs => "monolithic-bfgs",
            Scheme::MonolithicNewton => "monolithic-newton",
            Scheme::Staggered => "staggered",
        }
    }

    pub fn is_monolithic(self) -> bool {
        !matches!(self, Scheme::Staggered)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme `{s}`")))
    }
}

/// Nonlinear solver settings for one increment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Residual tolerance relative to the time-averaged flux.
    pub residual_tol: f64,
    /// Correction tolerance relative to the largest increment change.
    pub correction_tol: f64,
    /// Residuals below `linear_tol * q` pass without the correction test.
    pub linear_tol: f64,
    pub max_iterations: usize,
    pub line_search: bool,
    /// Quasi-Newton updates before the tangent is reassembled.
    pub bfgs_max_updates: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::MonolithicBfgs,
            residual_tol: 0.005,
            correction_tol: 0.01,
            linear_tol: 1e-8,
            max_iterations: 16,
            line_search: true,
            bfgs_max_updates: 8,
        }
    }
}

impl SolverConfig {
    pub fn for_scheme(scheme: Scheme) -> Self {
        Self {
            scheme,
            line_search: scheme.is_monolithic(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.residual_tol) {
            errors.push(format!(
                "residual_tol must lie in (0, 1), got {}",
                self.residual_tol
            ));
        }
        if !unit(self.correction_tol) {
            errors.push(format!(
                "correction_tol must lie in (0, 1), got {}",
                self.correction_tol
            ));
        }
        if !(self.linear_tol >= 0.0 && self.linear_tol < self.residual_tol) {
            errors.push(format!(
                "linear_tol must lie in [0, residual_tol), got {}",
                self.linear_tol
            ));
        }
        if self.max_iterations == 0 {
            errors.push("max_iterations must be positive".into());
        }
        if self.bfgs_max_updates == 0 {
            errors.push("bfgs_max_updates must be positive".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(errors))
        }
    }
}
