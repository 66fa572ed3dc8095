//! Arrival sequences: the adversarial constructions and seeded random instances.

use serde::{Deserialize, Serialize};

use crate::cost_model::{CostFunction, Valuation};
use crate::error::{Error, Result};
use crate::offline::Instance;
use crate::rng::Rng;

/// How to build an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Scalar linear valuations `c_t = 2t`.
    AdversarialScalar {
        #[serde(rename = "T")]
        horizon: usize,
    },
    /// `c_t = grad f(t 1)` for odd `t`, `grad f(2t 1)` for even `t`. Without
    /// an explicit cost the caller's cost function is used.
    AdversarialGradient {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cost: Option<CostFunction>,
        #[serde(rename = "T")]
        horizon: usize,
    },
    /// Linear valuations with coefficients uniform in `range`.
    RandomLinear {
        #[serde(rename = "T")]
        horizon: usize,
        #[serde(rename = "D")]
        dimension: usize,
        range: [f64; 2],
        seed: u64,
    },
}

impl GeneratorSpec {
    /// Builds the instance; `cost` backs an adversarial-gradient spec without
    /// its own cost function.
    pub fn generate(&self, cost: Option<&CostFunction>) -> Result<Instance> {
        match self {
            GeneratorSpec::AdversarialScalar { horizon } => gen_adversarial_scalar(*horizon),
            GeneratorSpec::AdversarialGradient { cost: own, horizon } => {
                let f = own
                    .as_ref()
                    .or(cost)
                    .ok_or_else(|| Error::InvalidInstance("adversarial_gradient needs a cost function".into()))?;
                gen_adversarial_gradient(f, *horizon)
            }
            GeneratorSpec::RandomLinear {
                horizon,
                dimension,
                range,
                seed,
            } => gen_random_linear(*horizon, *dimension, (range[0], range[1]), *seed),
        }
    }
}

fn check_horizon(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidInstance("horizon must be at least 1".into()));
    }
    Ok(())
}

/// `D = 1`, `v_t(x) = 2t x` for `t = 1..=T`; `T` must be even.
pub fn gen_adversarial_scalar(horizon: usize) -> Result<Instance> {
    check_horizon(horizon)?;
    if horizon % 2 != 0 {
        return Err(Error::InvalidInstance(format!("horizon must be even, got {horizon}")));
    }
    let vals = (1..=horizon)
        .map(|t| Valuation::linear(vec![2.0 * t as f64]))
        .collect::<Result<Vec<_>>>()?;
    Instance::new(1, vals)
}

/// Linear valuations following the gradient of `f` along the diagonal.
pub fn gen_adversarial_gradient(f: &CostFunction, horizon: usize) -> Result<Instance> {
    check_horizon(horizon)?;
    let d = f.dimension();
    let vals = (1..=horizon)
        .map(|t| {
            let s = if t % 2 == 1 { t as f64 } else { 2.0 * t as f64 };
            let c = f.gradient(&vec![s; d])?;
            Valuation::linear(c)
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(d, vals)
}

/// Linear valuations with every coefficient drawn uniformly from `[lo, hi]`,
/// in order `t` then `d`, from [`Rng`] seeded with `seed`.
pub fn gen_random_linear(horizon: usize, dimension: usize, range: (f64, f64), seed: u64) -> Result<Instance> {
    check_horizon(horizon)?;
    if dimension == 0 {
        return Err(Error::InvalidInstance("dimension must be at least 1".into()));
    }
    let (lo, hi) = range;
    if !(lo >= 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(Error::InvalidInstance(format!(
            "invalid coefficient range [{lo}, {hi}]"
        )));
    }
    let mut rng = Rng::new(seed);
    let vals = (0..horizon)
        .map(|_| Valuation::linear((0..dimension).map(|_| rng.range(lo, hi)).collect()))
        .collect::<Result<Vec<_>>>()?;
    Instance::new(dimension, vals)
}
