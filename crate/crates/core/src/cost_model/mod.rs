//! Cost functions, surrogates, valuations and their conjugates.

mod assumptions;
mod conjugate;
mod cost;
mod surrogate_spec;
mod valuation;

pub use assumptions::{validate_assumptions, ClauseResult, ValidationReport};
pub use conjugate::{conjugate_cost, conjugate_cost_from, Conjugate};
pub use cost::{CostFunction, MonomialTerm};
pub use surrogate_spec::{SurrogateMode, SurrogateSpec};
pub use valuation::Valuation;
