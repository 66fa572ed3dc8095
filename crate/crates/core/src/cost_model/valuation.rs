use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::pow;

/// A customer's concave, nondecreasing valuation on `[0, 1]^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ValuationJson", into = "ValuationJson")]
pub enum Valuation {
    /// `c^T x`.
    Linear { c: Vec<f64> },
    /// `sum_d c_d x_d^p` with `0 < p <= 1`.
    ConcavePower { c: Vec<f64>, p: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ValuationJson {
    Linear { c: Vec<f64> },
    ConcavePower { c: Vec<f64>, p: f64 },
}

impl TryFrom<ValuationJson> for Valuation {
    type Error = Error;
    fn try_from(v: ValuationJson) -> Result<Self> {
        match v {
            ValuationJson::Linear { c } => Valuation::linear(c),
            ValuationJson::ConcavePower { c, p } => Valuation::concave_power(c, p),
        }
    }
}

impl From<Valuation> for ValuationJson {
    fn from(v: Valuation) -> Self {
        match v {
            Valuation::Linear { c } => ValuationJson::Linear { c },
            Valuation::ConcavePower { c, p } => ValuationJson::ConcavePower { c, p },
        }
    }
}

fn check_coefficients(c: &[f64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::InvalidValuation("empty coefficient vector".into()));
    }
    if let Some(x) = c.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidValuation(format!(
            "coefficients must be nonnegative and finite, got {x}"
        )));
    }
    Ok(())
}

fn check_unit_box(x: &[f64]) -> Result<()> {
    for (index, &value) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Domain(format!(
                "allocation component {index} = {value} outside [0, 1]"
            )));
        }
    }
    Ok(())
}

impl Valuation {
    pub fn linear(c: Vec<f64>) -> Result<Self> {
        check_coefficients(&c)?;
        Ok(Valuation::Linear { c })
    }

    pub fn concave_power(c: Vec<f64>, p: f64) -> Result<Self> {
        check_coefficients(&c)?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidValuation(format!("p must lie in (0, 1], got {p}")));
        }
        Ok(Valuation::ConcavePower { c, p })
    }

    pub fn dimension(&self) -> usize {
        self.coefficients().len()
    }

    pub fn coefficients(&self) -> &[f64] {
        match self {
            Valuation::Linear { c } | Valuation::ConcavePower { c, .. } => c,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dimension(), x.len())?;
        check_unit_box(x)
    }

    /// `v(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.value_unchecked(x))
    }

    /// `grad v(x)`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut g = vec![0.0; x.len()];
        self.gradient_into(x, &mut g)?;
        Ok(g)
    }

    /// Gradient at an allocation produced against `price`. A zero coordinate
    /// of a concave power with `p < 1` stands for a stationary point that
    /// underflowed, where the gradient equals the price.
    pub(crate) fn gradient_at_response(&self, x: &[f64], price: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        check_dim(x.len(), price.len())?;
        let mut g = vec![0.0; x.len()];
        match self {
            Valuation::Linear { c } => g.copy_from_slice(c),
            Valuation::ConcavePower { c, p } => {
                for d in 0..x.len() {
                    g[d] = if c[d] == 0.0 {
                        0.0
                    } else if *p == 1.0 {
                        c[d]
                    } else if x[d] == 0.0 {
                        price[d]
                    } else {
                        c[d] * p * pow(x[d], p - 1.0)
                    };
                }
            }
        }
        Ok(g)
    }

    /// `grad v(x)^T x - v(x)`, the concave conjugate evaluated at `grad v(x)`.
    pub fn conjugate_at_gradient(&self, x: &[f64]) -> Result<f64> {
        let g = self.gradient(x)?;
        let dot: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
        Ok(dot - self.value_unchecked(x))
    }

    /// `inf_{u >= 0} z^T u - v(u)` in closed form; `-inf` when unbounded below.
    pub fn concave_conjugate(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.dimension(), z.len())?;
        let mut total = 0.0;
        match self {
            Valuation::Linear { c } => {
                for (zd, cd) in z.iter().zip(c) {
                    if zd < cd {
                        return Ok(f64::NEG_INFINITY);
                    }
                }
            }
            Valuation::ConcavePower { c, p } => {
                for (&zd, &cd) in z.iter().zip(c) {
                    if cd == 0.0 {
                        continue;
                    }
                    if *p == 1.0 {
                        if zd < cd {
                            return Ok(f64::NEG_INFINITY);
                        }
                        continue;
                    }
                    if zd <= 0.0 {
                        return Ok(f64::NEG_INFINITY);
                    }
                    // Minimizer u = (c p / z)^{1/(1-p)}; value -u z (1-p)/p.
                    let u = (cd * p / zd).powf(1.0 / (1.0 - p));
                    total -= u * zd * (1.0 - p) / p;
                }
            }
        }
        Ok(total)
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Valuation::Linear { c } => c.iter().zip(x).map(|(a, b)| a * b).sum(),
            Valuation::ConcavePower { c, p } => c.iter().zip(x).map(|(a, b)| a * pow(*b, *p)).sum(),
        }
    }

    pub(crate) fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            Valuation::Linear { c } => out.copy_from_slice(c),
            Valuation::ConcavePower { c, p } => {
                for d in 0..x.len() {
                    out[d] = if c[d] == 0.0 {
                        0.0
                    } else if *p == 1.0 {
                        c[d]
                    } else if x[d] == 0.0 {
                        return Err(Error::Domain(format!(
                            "valuation gradient is unbounded at x_{} = 0",
                            d + 1
                        )));
                    } else {
                        c[d] * p * pow(x[d], p - 1.0)
                    };
                }
            }
        }
        Ok(())
    }

    /// Diagonal of the Hessian (zero for linear valuations).
    pub(crate) fn hessian_diag_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Valuation::Linear { .. } => out.iter_mut().for_each(|v| *v = 0.0),
            Valuation::ConcavePower { c, p } => {
                for d in 0..x.len() {
                    out[d] = if c[d] == 0.0 || *p == 1.0 {
                        0.0
                    } else {
                        c[d] * p * (p - 1.0) * pow(x[d], p - 2.0)
                    };
                }
            }
        }
    }

    /// `argmax_{0 <= x <= 1} v(x) - price^T x`; ties allocate 1.
    pub fn best_response(&self, price: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension(), price.len())?;
        let resp = match self {
            Valuation::Linear { c } => c
                .iter()
                .zip(price)
                .map(|(c, l)| if c >= l { 1.0 } else { 0.0 })
                .collect(),
            Valuation::ConcavePower { c, p } => c
                .iter()
                .zip(price)
                .map(|(&c, &l)| {
                    if *p == 1.0 {
                        if c >= l {
                            1.0
                        } else {
                            0.0
                        }
                    } else if c == 0.0 {
                        if l <= 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else if l <= 0.0 {
                        1.0
                    } else {
                        // Stationarity c p x^{p-1} = l, clipped to the box.
                        (c * p / l).powf(1.0 / (1.0 - p)).min(1.0)
                    }
                })
                .collect(),
        };
        Ok(resp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_examples() {
        let v = Valuation::linear(vec![2.0, 6.0]).unwrap();
        assert_eq!(v.value(&[1.0, 0.0]).unwrap(), 2.0);
        assert_eq!(v.gradient(&[1.0, 0.0]).unwrap(), vec![2.0, 6.0]);
        let t = 3.0;
        assert_eq!(Valuation::linear(vec![2.0 * t]).unwrap().value(&[0.5]).unwrap(), 3.0);
    }

    #[test]
    fn concave_power_examples() {
        let v = Valuation::concave_power(vec![1.0], 0.5).unwrap();
        assert_eq!(v.value(&[0.25]).unwrap(), 0.5);
        assert_eq!(v.gradient(&[0.25]).unwrap(), vec![1.0]);
        assert_eq!(v.conjugate_at_gradient(&[0.25]).unwrap(), -0.25);
        assert!(matches!(v.gradient(&[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn conjugate_at_gradient_linear_is_zero() {
        assert_eq!(
            Valuation::linear(vec![5.0, 1.0])
                .unwrap()
                .conjugate_at_gradient(&[1.0, 1.0])
                .unwrap(),
            0.0
        );
        assert_eq!(
            Valuation::linear(vec![0.0])
                .unwrap()
                .conjugate_at_gradient(&[0.7])
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn closed_form_conjugate_agrees_with_gradient_point() {
        let v = Valuation::concave_power(vec![1.0, 3.0], 0.5).unwrap();
        let x = [0.25, 0.6];
        let z = v.gradient(&x).unwrap();
        let a = v.concave_conjugate(&z).unwrap();
        let b = v.conjugate_at_gradient(&x).unwrap();
        assert!((a - b).abs() < 1e-12);
        // Numeric infimum over a fine grid on [0, 4].
        let mut best = f64::INFINITY;
        for k in 0..=40_000 {
            let u = k as f64 * 1e-4;
            best = best.min(z[0] * u - u.sqrt());
        }
        let first = {
            let single = Valuation::concave_power(vec![1.0], 0.5).unwrap();
            single.concave_conjugate(&[z[0]]).unwrap()
        };
        assert!((best - first).abs() < 1e-6);
    }

    #[test]
    fn linear_conjugate_below_coefficients_is_unbounded() {
        let v = Valuation::linear(vec![2.0]).unwrap();
        assert_eq!(v.concave_conjugate(&[1.0]).unwrap(), f64::NEG_INFINITY);
        assert_eq!(v.concave_conjugate(&[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn best_response_ties_allocate() {
        let v = Valuation::linear(vec![4.0, 1.0]).unwrap();
        assert_eq!(v.best_response(&[4.0, 2.0]).unwrap(), vec![1.0, 0.0]);
        let w = Valuation::concave_power(vec![1.0], 0.5).unwrap();
        // x^{-1/2} / 2 = 2 at x = 1/16.
        assert!((w.best_response(&[2.0]).unwrap()[0] - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_box_and_bad_parameters() {
        let v = Valuation::linear(vec![1.0]).unwrap();
        assert!(v.value(&[1.5]).is_err());
        assert!(Valuation::linear(vec![-1.0]).is_err());
        assert!(Valuation::concave_power(vec![1.0], 1.5).is_err());
        assert!(Valuation::concave_power(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn json_forms() {
        let v: Valuation = serde_json::from_str(r#"{"kind":"linear","c":[1,2]}"#).unwrap();
        assert_eq!(v, Valuation::linear(vec![1.0, 2.0]).unwrap());
        let w: Valuation = serde_json::from_str(r#"{"kind":"concave_power","c":[1],"p":0.5}"#).unwrap();
        assert_eq!(
            serde_json::to_string(&w).unwrap(),
            r#"{"kind":"concave_power","c":[1.0],"p":0.5}"#
        );
        assert!(serde_json::from_str::<Valuation>(r#"{"kind":"linear","c":[-1]}"#).is_err());
    }
}
