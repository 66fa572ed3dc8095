use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical settings shared by every solver.
///
/// `grad_tol` is relative: a solver stops once its projected-gradient
/// residual is at most `grad_tol * (1 + scale)`, where `scale` is the
/// magnitude of the linear data of the problem (prices or valuation
/// coefficients).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub step_init: f64,
    pub grad_tol: f64,
    pub feas_tol: f64,
    pub denom_tol: f64,
    pub seed: u64,
    /// Iterates of a conjugate solve beyond this norm are treated as divergence.
    pub divergence_cap: f64,
    /// Upper limit on grid points enumerated by the brute-force oracle.
    pub enumeration_cap: u64,
    /// Projected subgradient iterations per restart in the feasibility solver.
    pub subgradient_iters: usize,
    /// Restarts of the feasibility solver.
    pub restarts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            step_init: 1.0,
            grad_tol: 1e-9,
            feas_tol: 1e-6,
            denom_tol: 1e-9,
            seed: 0,
            divergence_cap: 1e12,
            enumeration_cap: 1_000_000_000,
            subgradient_iters: 200,
            restarts: 5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("step_init", self.step_init)?;
        positive("grad_tol", self.grad_tol)?;
        positive("feas_tol", self.feas_tol)?;
        positive("denom_tol", self.denom_tol)?;
        positive("divergence_cap", self.divergence_cap)?;
        if self.max_iters == 0 || self.subgradient_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidConfig(
                "max_iters, subgradient_iters and restarts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
