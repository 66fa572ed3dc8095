use serde::Serialize;

use crate::cost_model::{CostFunction, SurrogateSpec};
use crate::error::{Error, Result};

/// Scale factor and the value of the scaling objective it attains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoChoice {
    pub rho: f64,
    pub objective: f64,
}

/// `(tau - 1) rho^tau / (rho^{tau - 1} - 1)`, the ratio bound of scaling a
/// degree-`tau` monomial by `rho`.
pub fn rho_objective(tau: f64, rho: f64) -> f64 {
    (tau - 1.0) * rho.powf(tau) / (rho.powf(tau - 1.0) - 1.0)
}

/// Minimizer `tau^{1/(tau - 1)}` of [`rho_objective`] over `rho > 1`.
pub fn optimal_rho(tau: f64) -> Result<RhoChoice> {
    if !(tau >= 2.0) || !tau.is_finite() {
        return Err(Error::DegreeTooSmall { degree: tau });
    }
    let rho = tau.powf(1.0 / (tau - 1.0));
    Ok(RhoChoice {
        rho,
        objective: rho_objective(tau, rho),
    })
}

/// `b rho^{b - a} - a (rho^b - 1) / (rho^a - 1)`, nonnegative for
/// `rho > 1`, `0 <= a <= b`; the `a = 0` case uses its limit.
pub fn power_gap_slack(rho: f64, a: f64, b: f64) -> f64 {
    let l = rho.ln();
    let frac = if a == 0.0 {
        (b * l).exp_m1() / l
    } else {
        a * (b * l).exp_m1() / (a * l).exp_m1()
    };
    b * rho.powf(b - a) - frac
}

/// A scaled surrogate chosen from the degree structure of `f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyDesign {
    pub spec: SurrogateSpec,
    pub rho: f64,
    pub tau: f64,
    /// `tau^{-tau / (tau - 1)}`.
    pub bound: f64,
}

/// Scales by the optimal factor for the largest term degree.
pub fn design_poly(f: &CostFunction) -> Result<PolyDesign> {
    let tau = f.max_degree();
    let choice = optimal_rho(tau)?;
    Ok(PolyDesign {
        spec: SurrogateSpec::scaled(f.clone(), choice.rho)?,
        rho: choice.rho,
        tau,
        bound: 1.0 / choice.objective,
    })
}

/// Scales by `lambda^{1/(lambda - 1)}` with `lambda` the smallest term degree.
pub fn design_chan(f: &CostFunction) -> Result<SurrogateSpec> {
    let lambda = f.min_degree();
    let choice = optimal_rho(lambda)?;
    SurrogateSpec::scaled(f.clone(), choice.rho)
}
