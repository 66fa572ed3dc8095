use serde::{Deserialize, Serialize};

use super::cost::CostFunction;
use crate::error::{Error, Result};
use crate::numeric::pow;

/// How a surrogate modifies its base cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SurrogateMode {
    Identity,
    /// `f_s(u) = f(rho u) / rho`.
    Scaled {
        rho: f64,
    },
    /// `f_s = sum_n a_n g_n`.
    Weighted {
        weights: Vec<f64>,
    },
}

/// A surrogate design bound to the cost function it modifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct SurrogateSpec {
    base: CostFunction,
    mode: SurrogateMode,
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    base: CostFunction,
    #[serde(flatten)]
    mode: SurrogateMode,
}

impl TryFrom<SpecJson> for SurrogateSpec {
    type Error = Error;
    fn try_from(s: SpecJson) -> Result<Self> {
        SurrogateSpec::new(s.base, s.mode)
    }
}

impl From<SurrogateSpec> for SpecJson {
    fn from(s: SurrogateSpec) -> Self {
        SpecJson {
            base: s.base,
            mode: s.mode,
        }
    }
}

impl SurrogateSpec {
    pub fn new(base: CostFunction, mode: SurrogateMode) -> Result<Self> {
        match &mode {
            SurrogateMode::Identity => {}
            SurrogateMode::Scaled { rho } => {
                if !(*rho > 1.0) || !rho.is_finite() {
                    return Err(Error::InvalidSurrogate(format!("rho must exceed 1, got {rho}")));
                }
            }
            SurrogateMode::Weighted { weights } => {
                if weights.len() != base.num_components() {
                    return Err(Error::InvalidSurrogate(format!(
                        "{} weights for {} basis components",
                        weights.len(),
                        base.num_components()
                    )));
                }
                if let Some(a) = weights.iter().find(|a| !(**a >= 1.0) || !a.is_finite()) {
                    return Err(Error::InvalidSurrogate(format!("weights must be at least 1, got {a}")));
                }
            }
        }
        Ok(Self { base, mode })
    }

    pub fn identity(base: CostFunction) -> Self {
        Self {
            base,
            mode: SurrogateMode::Identity,
        }
    }

    pub fn scaled(base: CostFunction, rho: f64) -> Result<Self> {
        Self::new(base, SurrogateMode::Scaled { rho })
    }

    pub fn weighted(base: CostFunction, weights: Vec<f64>) -> Result<Self> {
        Self::new(base, SurrogateMode::Weighted { weights })
    }

    pub fn base(&self) -> &CostFunction {
        &self.base
    }

    pub fn mode(&self) -> &SurrogateMode {
        &self.mode
    }

    /// The explicit cost function `f_s`.
    pub fn expand(&self) -> CostFunction {
        match &self.mode {
            SurrogateMode::Identity => self.base.clone(),
            SurrogateMode::Scaled { rho } => {
                let terms = self.base.terms();
                self.base.rescaled(|k| pow(*rho, terms[k].degree() - 1.0))
            }
            SurrogateMode::Weighted { weights } => {
                let owner = self.base.component_of_terms();
                self.base.rescaled(|k| weights[owner[k]])
            }
        }
    }
}
