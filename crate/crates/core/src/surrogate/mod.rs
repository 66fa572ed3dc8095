//! Surrogate designers and competitive-ratio bounds.

mod closed_form;
mod quasiconvex;
mod ratio;

pub use closed_form::{design_chan, design_poly, optimal_rho, power_gap_slack, rho_objective, PolyDesign, RhoChoice};
pub use quasiconvex::{
    default_alpha_upper, design_quasiconvex, solve_feasibility, BisectionStep, DesignReport, FeasibilityOutcome,
};
pub use ratio::{alpha_ratio, alpha_ratio_at, feasibility_violation, RatioPoint};
