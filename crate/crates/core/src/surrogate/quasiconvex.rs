use serde::Serialize;

use super::closed_form::{design_poly, optimal_rho};
use super::ratio::{alpha_ratio, WeightProblem};
use crate::config::SolverConfig;
use crate::cost_model::{CostFunction, SurrogateSpec};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Variant};
use crate::rng::Rng;

/// Result of a feasibility solve at one level `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityOutcome {
    /// Weights with max violation at most `feas_tol`, if found.
    pub weights: Option<Vec<f64>>,
    /// Best weights seen and their violation.
    pub best_weights: Vec<f64>,
    pub best_violation: f64,
    pub evaluations: usize,
    /// Whether infeasibility was certified by a weight-independent bound.
    pub certified: bool,
}

impl FeasibilityOutcome {
    pub fn feasible(&self) -> bool {
        self.weights.is_some()
    }
}

/// Default first weights: the closed-form scaling expressed per component.
fn default_start(f: &CostFunction) -> Vec<f64> {
    let rho = optimal_rho(f.max_degree()).map(|c| c.rho).unwrap_or(2.0);
    f.basis()
        .iter()
        .map(|comp| {
            let deg = comp.iter().map(|&k| f.terms()[k].degree()).fold(0.0, f64::max);
            rho.powf(deg - 1.0).max(1.0)
        })
        .collect()
}

fn minimize_violation(
    problem: &mut WeightProblem<'_>,
    alpha: f64,
    start: Option<&[f64]>,
    cfg: &SolverConfig,
    default: &[f64],
) -> Result<FeasibilityOutcome> {
    let n = problem.num_components();
    if let Some(floor) = problem.violation_floor(alpha) {
        if floor > cfg.feas_tol {
            return Ok(FeasibilityOutcome {
                weights: None,
                best_weights: start.map_or_else(|| default.to_vec(), |s| s.to_vec()),
                best_violation: floor,
                evaluations: 0,
                certified: true,
            });
        }
    }
    let first = start.map_or_else(|| default.to_vec(), |s| s.to_vec());
    let spread: Vec<f64> = first.iter().map(|a| 2.0 * a.max(2.0)).collect();
    let mut rng = Rng::new(cfg.seed);
    let mut best = (first.clone(), f64::INFINITY);
    let mut evaluations = 0;
    let target = -cfg.feas_tol;

    for restart in 0..cfg.restarts {
        let mut a = if restart == 0 {
            first.clone()
        } else {
            (0..n).map(|k| 1.0 + rng.range(0.0, spread[k])).collect()
        };
        for _ in 0..cfg.subgradient_iters {
            let ev = problem.evaluate(&a, alpha)?;
            evaluations += 1;
            if ev.violation < best.1 {
                best = (a.clone(), ev.violation);
            }
            if ev.violation <= cfg.feas_tol {
                return Ok(FeasibilityOutcome {
                    weights: Some(a.clone()),
                    best_weights: a,
                    best_violation: ev.violation,
                    evaluations,
                    certified: false,
                });
            }
            let norm2: f64 = ev.subgradient.iter().map(|s| s * s).sum();
            if !(norm2 > 0.0) || !norm2.is_finite() {
                break;
            }
            // Polyak step toward the level just below zero, projected onto a >= 1.
            let step = (ev.violation - target) / norm2;
            for (ak, sk) in a.iter_mut().zip(&ev.subgradient) {
                *ak = (*ak - step * sk).max(1.0);
            }
        }
    }
    Ok(FeasibilityOutcome {
        weights: None,
        best_weights: best.0,
        best_violation: best.1,
        evaluations,
        certified: false,
    })
}

/// Searches for basis weights `a >= 1` whose surrogate meets ratio level `alpha`
/// on the grid, by projected subgradient descent on the max violation with
/// random restarts.
pub fn solve_feasibility(
    f: &CostFunction,
    alpha: f64,
    variant: Variant,
    grid: &GridSpec,
    cfg: &SolverConfig,
) -> Result<FeasibilityOutcome> {
    cfg.validate()?;
    if !(alpha >= 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must be at least 1, got {alpha}")));
    }
    let mut problem = WeightProblem::new(f, variant, grid, cfg)?;
    minimize_violation(&mut problem, alpha, None, cfg, &default_start(f))
}

/// One bisection step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BisectionStep {
    pub alpha: f64,
    pub feasible: bool,
    pub max_violation: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Outcome of the weight design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub variant: Variant,
    pub design: SurrogateSpec,
    pub weights: Vec<f64>,
    /// Smallest level found feasible.
    pub alpha: f64,
    /// `1 / alpha`.
    pub bound: f64,
    /// The ratio of the returned design re-evaluated on the grid.
    pub achieved_alpha: f64,
    pub alpha_upper: f64,
    pub epsilon: f64,
    pub trace: Vec<BisectionStep>,
    pub grid: GridSpec,
    pub evaluations: usize,
}

impl DesignReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// `4 * alpha` of the closed-form scaled surrogate when finite, else 1000.
pub fn default_alpha_upper(f: &CostFunction, variant: Variant, grid: &GridSpec, cfg: &SolverConfig) -> f64 {
    design_poly(f)
        .ok()
        .and_then(|d| alpha_ratio(f, &d.spec.expand(), variant, grid, cfg).ok())
        .filter(|a| a.is_finite() && *a >= 1.0)
        .map_or(1e3, |a| 4.0 * a)
}

/// Bisection on `alpha` over `[1, alpha_upper]`, each level decided by
/// [`solve_feasibility`]; returns the weights found at the final upper level.
pub fn design_quasiconvex(
    f: &CostFunction,
    variant: Variant,
    grid: &GridSpec,
    epsilon: f64,
    alpha_upper: Option<f64>,
    cfg: &SolverConfig,
) -> Result<DesignReport> {
    cfg.validate()?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let alpha_upper = alpha_upper.unwrap_or_else(|| default_alpha_upper(f, variant, grid, cfg));
    if !(alpha_upper > 1.0) || !alpha_upper.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "alpha_upper must exceed 1, got {alpha_upper}"
        )));
    }
    let mut problem = WeightProblem::new(f, variant, grid, cfg)?;
    let default = default_start(f);

    let top = minimize_violation(&mut problem, alpha_upper, None, cfg, &default)?;
    let mut evaluations = top.evaluations;
    let Some(mut weights) = top.weights else {
        return Err(Error::AlphaUpperInfeasible {
            alpha_upper,
            violation: top.best_violation,
        });
    };
    let (mut lower, mut upper) = (1.0, alpha_upper);
    let mut trace = vec![BisectionStep {
        alpha: alpha_upper,
        feasible: true,
        max_violation: top.best_violation,
        lower,
        upper,
    }];
    while upper - lower > epsilon {
        let mid = 0.5 * (lower + upper);
        let out = minimize_violation(&mut problem, mid, Some(&weights), cfg, &default)?;
        evaluations += out.evaluations;
        let feasible = out.feasible();
        match out.weights {
            Some(w) => {
                upper = mid;
                weights = w;
            }
            None => lower = mid,
        }
        trace.push(BisectionStep {
            alpha: mid,
            feasible,
            max_violation: out.best_violation,
            lower,
            upper,
        });
    }

    let design = SurrogateSpec::weighted(f.clone(), weights.clone())?;
    let achieved_alpha = alpha_ratio(f, &design.expand(), variant, grid, cfg)?;
    Ok(DesignReport {
        variant,
        design,
        weights,
        alpha: upper,
        bound: 1.0 / upper,
        achieved_alpha,
        alpha_upper,
        epsilon,
        trace,
        grid: grid.clone(),
        evaluations,
    })
}
