use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_nonnegative, Error, Result};
use crate::numeric::pow;

/// `coefficient * prod_i u_i^{exponents_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TermJson", into = "TermJson")]
pub struct MonomialTerm {
    coefficient: f64,
    exponents: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    coef: f64,
    exponents: Vec<f64>,
}

impl TryFrom<TermJson> for MonomialTerm {
    type Error = Error;
    fn try_from(t: TermJson) -> Result<Self> {
        MonomialTerm::new(t.coef, t.exponents)
    }
}

impl From<MonomialTerm> for TermJson {
    fn from(t: MonomialTerm) -> Self {
        TermJson {
            coef: t.coefficient,
            exponents: t.exponents,
        }
    }
}

impl MonomialTerm {
    pub fn new(coefficient: f64, exponents: Vec<f64>) -> Result<Self> {
        if !(coefficient > 0.0) || !coefficient.is_finite() {
            return Err(Error::InvalidCost(format!(
                "coefficient must be positive and finite, got {coefficient}"
            )));
        }
        if exponents.is_empty() {
            return Err(Error::InvalidCost("term has no exponents".into()));
        }
        if exponents.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(Error::InvalidCost(format!(
                "exponents must be nonnegative and finite, got {exponents:?}"
            )));
        }
        let t = MonomialTerm { coefficient, exponents };
        if !(t.degree() > 0.0) {
            return Err(Error::InvalidCost("term of degree 0 breaks f(0) = 0".into()));
        }
        Ok(t)
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn degree(&self) -> f64 {
        self.exponents.iter().sum()
    }

    pub(crate) fn with_coefficient(&self, coefficient: f64) -> Self {
        MonomialTerm {
            coefficient,
            exponents: self.exponents.clone(),
        }
    }

    #[inline]
    pub(crate) fn eval(&self, u: &[f64]) -> f64 {
        let mut v = self.coefficient;
        for (x, e) in u.iter().zip(&self.exponents) {
            v *= pow(*x, *e);
        }
        v
    }

    /// Adds `scale * grad` into `out`.
    #[inline]
    pub(crate) fn add_gradient(&self, u: &[f64], scale: f64, out: &mut [f64]) {
        let d = u.len();
        for i in 0..d {
            let ei = self.exponents[i];
            if ei == 0.0 {
                continue;
            }
            let mut v = scale * self.coefficient * ei * pow(u[i], ei - 1.0);
            for (j, (&uj, &ej)) in u.iter().zip(&self.exponents).enumerate() {
                if j != i {
                    v *= pow(uj, ej);
                }
            }
            out[i] += v;
        }
    }

    /// Adds `scale * hessian` (row-major) into `out`.
    pub(crate) fn add_hessian(&self, u: &[f64], scale: f64, out: &mut [f64]) {
        let d = u.len();
        let e = &self.exponents;
        for i in 0..d {
            if e[i] == 0.0 {
                continue;
            }
            for j in i..d {
                if e[j] == 0.0 {
                    continue;
                }
                let mut v = scale * self.coefficient;
                if i == j {
                    if e[i] == 1.0 {
                        continue;
                    }
                    v *= e[i] * (e[i] - 1.0) * pow(u[i], e[i] - 2.0);
                } else {
                    v *= e[i] * e[j] * pow(u[i], e[i] - 1.0) * pow(u[j], e[j] - 1.0);
                }
                for k in 0..d {
                    if k != i && k != j {
                        v *= pow(u[k], e[k]);
                    }
                }
                out[i * d + j] += v;
                if i != j {
                    out[j * d + i] += v;
                }
            }
        }
    }

    /// Whether the gradient is unbounded at `u` (fractional exponent below 1 at 0).
    fn gradient_singular_at(&self, u: &[f64]) -> Option<usize> {
        self.exponents
            .iter()
            .zip(u)
            .position(|(e, x)| *e > 0.0 && *e < 1.0 && *x == 0.0)
    }

    /// Exponent of the term if it only involves coordinate `i`.
    pub(crate) fn pure_power_in(&self, i: usize) -> Option<f64> {
        let ok = self
            .exponents
            .iter()
            .enumerate()
            .all(|(j, e)| if j == i { *e > 0.0 } else { *e == 0.0 });
        ok.then(|| self.exponents[i])
    }
}

/// A sum of positive monomials on the nonnegative orthant, grouped into basis
/// components `g_n` (one component per term unless given).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostJson", into = "CostJson")]
pub struct CostFunction {
    dimension: usize,
    terms: Vec<MonomialTerm>,
    basis: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostJson {
    dimension: usize,
    terms: Vec<MonomialTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    basis: Option<Vec<Vec<usize>>>,
}

impl TryFrom<CostJson> for CostFunction {
    type Error = Error;
    fn try_from(c: CostJson) -> Result<Self> {
        CostFunction::new(c.dimension, c.terms, c.basis)
    }
}

impl From<CostFunction> for CostJson {
    fn from(c: CostFunction) -> Self {
        CostJson {
            dimension: c.dimension,
            terms: c.terms,
            basis: Some(c.basis),
        }
    }
}

impl CostFunction {
    pub fn new(dimension: usize, terms: Vec<MonomialTerm>, basis: Option<Vec<Vec<usize>>>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidCost("dimension must be positive".into()));
        }
        if terms.is_empty() {
            return Err(Error::InvalidCost("at least one term is required".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if t.exponents.len() != dimension {
                return Err(Error::InvalidCost(format!(
                    "term {k} has {} exponents, expected {dimension}",
                    t.exponents.len()
                )));
            }
        }
        let basis = basis.unwrap_or_else(|| (0..terms.len()).map(|k| vec![k]).collect());
        let mut seen = vec![false; terms.len()];
        for comp in &basis {
            if comp.is_empty() {
                return Err(Error::InvalidCost("empty basis component".into()));
            }
            for &k in comp {
                if k >= terms.len() || seen[k] {
                    return Err(Error::InvalidCost(format!(
                        "basis must partition the term indices; bad index {k}"
                    )));
                }
                seen[k] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidCost("basis leaves some terms uncovered".into()));
        }
        Ok(Self {
            dimension,
            terms,
            basis,
        })
    }

    /// Parses the JSON document form.
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cost functions always serialize")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn terms(&self) -> &[MonomialTerm] {
        &self.terms
    }

    pub fn basis(&self) -> &[Vec<usize>] {
        &self.basis
    }

    pub fn num_components(&self) -> usize {
        self.basis.len()
    }

    pub fn max_degree(&self) -> f64 {
        self.terms.iter().map(|t| t.degree()).fold(f64::MIN, f64::max)
    }

    pub fn min_degree(&self) -> f64 {
        self.terms.iter().map(|t| t.degree()).fold(f64::MAX, f64::min)
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        check_dim(self.dimension, u.len())?;
        check_nonnegative(u)
    }

    fn check_gradient_domain(&self, u: &[f64]) -> Result<()> {
        for (k, t) in self.terms.iter().enumerate() {
            if let Some(i) = t.gradient_singular_at(u) {
                return Err(Error::Domain(format!(
                    "gradient of term {k} is unbounded at u_{} = 0",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// `f(u)`.
    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        Ok(self.eval_unchecked(u))
    }

    /// `grad f(u)`.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u)?;
        self.check_gradient_domain(u)?;
        let mut g = vec![0.0; self.dimension];
        self.gradient_into(u, &mut g);
        Ok(g)
    }

    /// Row-major Hessian; entries may be infinite at the boundary for
    /// exponents in (1, 2).
    pub fn hessian(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u)?;
        self.check_gradient_domain(u)?;
        let mut h = vec![0.0; self.dimension * self.dimension];
        self.hessian_into(u, &mut h);
        Ok(h)
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, u: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(u)).sum()
    }

    #[inline]
    pub(crate) fn gradient_into(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.terms {
            t.add_gradient(u, 1.0, out);
        }
    }

    pub(crate) fn hessian_into(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.terms {
            t.add_hessian(u, 1.0, out);
        }
    }

    /// `g_n(u)`.
    pub fn component_eval(&self, n: usize, u: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        Ok(self.basis[n].iter().map(|&k| self.terms[k].eval(u)).sum())
    }

    /// `grad g_n(u)`.
    pub fn component_gradient(&self, n: usize, u: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u)?;
        self.check_gradient_domain(u)?;
        let mut g = vec![0.0; self.dimension];
        for &k in &self.basis[n] {
            self.terms[k].add_gradient(u, 1.0, &mut g);
        }
        Ok(g)
    }

    /// Coefficient of each term multiplied by `factor(term index)`.
    pub(crate) fn rescaled(&self, factor: impl Fn(usize) -> f64) -> CostFunction {
        CostFunction {
            dimension: self.dimension,
            terms: self
                .terms
                .iter()
                .enumerate()
                .map(|(k, t)| t.with_coefficient(t.coefficient * factor(k)))
                .collect(),
            basis: self.basis.clone(),
        }
    }

    /// Index of the basis component containing each term.
    pub(crate) fn component_of_terms(&self) -> Vec<usize> {
        let mut owner = vec![0; self.terms.len()];
        for (n, comp) in self.basis.iter().enumerate() {
            for &k in comp {
                owner[k] = n;
            }
        }
        owner
    }
}

/// Single-term helpers used by tests, examples and the CLI.
impl CostFunction {
    /// `coef * u^p` in one dimension.
    pub fn power(coef: f64, p: f64) -> Result<Self> {
        CostFunction::new(1, vec![MonomialTerm::new(coef, vec![p])?], None)
    }

    /// `u1^4 + (u1 + u2)^2` expanded, with basis `{u1^4, (u1 + u2)^2}`.
    pub fn quartic_plus_square() -> Self {
        let t = |c: f64, e: [f64; 2]| MonomialTerm::new(c, e.to_vec()).expect("valid term");
        CostFunction::new(
            2,
            vec![
                t(1.0, [4.0, 0.0]),
                t(1.0, [2.0, 0.0]),
                t(2.0, [1.0, 1.0]),
                t(1.0, [0.0, 2.0]),
            ],
            Some(vec![vec![0], vec![1, 2, 3]]),
        )
        .expect("valid cost function")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(f: &CostFunction, u: &[f64], h: f64) -> Vec<f64> {
        (0..u.len())
            .map(|i| {
                let mut a = u.to_vec();
                let mut b = u.to_vec();
                a[i] += h;
                b[i] -= h;
                (f.eval(&a).unwrap() - f.eval(&b).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(CostFunction::power(1.0, 2.0).unwrap().eval(&[0.0]).unwrap(), 0.0);
        let f = CostFunction::quartic_plus_square();
        assert_eq!(f.eval(&[1.0, 1.0]).unwrap(), 5.0);
        assert_eq!(CostFunction::power(2.0, 3.0).unwrap().eval(&[1.5]).unwrap(), 6.75);
    }

    #[test]
    fn eval_errors() {
        let f = CostFunction::quartic_plus_square();
        assert_eq!(f.eval(&[1.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 }));
        assert!(matches!(
            f.eval(&[1.0, -0.5]),
            Err(Error::NegativeInput { index: 1, .. })
        ));
    }

    #[test]
    fn zero_to_zero_is_one() {
        // 3 * u1^0 * u2^2 at u = (0, 2) is 12.
        let f = CostFunction::new(2, vec![MonomialTerm::new(3.0, vec![0.0, 2.0]).unwrap()], None).unwrap();
        assert_eq!(f.eval(&[0.0, 2.0]).unwrap(), 12.0);
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(
            CostFunction::power(1.0, 2.0).unwrap().gradient(&[3.0]).unwrap(),
            vec![6.0]
        );
        let f = CostFunction::quartic_plus_square();
        let g = f.gradient(&[1.0, 1.0]).unwrap();
        let fd = fd_gradient(&f, &[1.0, 1.0], 1e-6);
        for i in 0..2 {
            assert!((g[i] - fd[i]).abs() < 1e-5);
        }
        assert_eq!(g, vec![8.0, 4.0]);
    }

    #[test]
    fn gradient_at_origin_is_linear_coefficients() {
        let t = |c: f64, e: [f64; 2]| MonomialTerm::new(c, e.to_vec()).unwrap();
        let f = CostFunction::new(
            2,
            vec![t(3.0, [1.0, 0.0]), t(1.0, [2.0, 1.0]), t(5.0, [0.0, 3.0])],
            None,
        )
        .unwrap();
        assert_eq!(f.gradient(&[0.0, 0.0]).unwrap(), vec![3.0, 0.0]);
    }

    #[test]
    fn fractional_exponent_singularity() {
        let f = CostFunction::power(1.0, 0.5).unwrap();
        assert!(matches!(f.gradient(&[0.0]), Err(Error::Domain(_))));
        assert!((f.gradient(&[4.0]).unwrap()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let f = CostFunction::quartic_plus_square();
        let u = [0.7, 1.3];
        let h = f.hessian(&u).unwrap();
        let eps = 1e-6;
        for j in 0..2 {
            let mut a = u.to_vec();
            let mut b = u.to_vec();
            a[j] += eps;
            b[j] -= eps;
            let ga = f.gradient(&a).unwrap();
            let gb = f.gradient(&b).unwrap();
            for i in 0..2 {
                let fd = (ga[i] - gb[i]) / (2.0 * eps);
                assert!((h[i * 2 + j] - fd).abs() < 1e-5, "{i}{j}");
            }
        }
    }

    #[test]
    fn invalid_constructions() {
        assert!(MonomialTerm::new(0.0, vec![2.0]).is_err());
        assert!(MonomialTerm::new(1.0, vec![-1.0]).is_err());
        assert!(MonomialTerm::new(1.0, vec![0.0, 0.0]).is_err());
        let t = MonomialTerm::new(1.0, vec![2.0]).unwrap();
        assert!(CostFunction::new(2, vec![t.clone()], None).is_err());
        assert!(CostFunction::new(1, vec![t.clone(), t.clone()], Some(vec![vec![0]])).is_err());
        assert!(CostFunction::new(1, vec![t.clone()], Some(vec![vec![0, 0]])).is_err());
        assert!(CostFunction::new(1, vec![], None).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = CostFunction::quartic_plus_square();
        let back = CostFunction::from_json(&f.to_json()).unwrap();
        assert_eq!(f, back);
        let g = CostFunction::from_json(r#"{"dimension":1,"terms":[{"coef":1,"exponents":[2]}]}"#).unwrap();
        assert_eq!(g.basis(), &[vec![0]]);
        assert!(CostFunction::from_json(r#"{"dimension":1,"terms":[{"coef":-1,"exponents":[2]}]}"#).is_err());
    }

    #[test]
    fn components() {
        let f = CostFunction::quartic_plus_square();
        assert_eq!(f.num_components(), 2);
        assert_eq!(f.component_eval(0, &[2.0, 1.0]).unwrap(), 16.0);
        assert_eq!(f.component_eval(1, &[2.0, 1.0]).unwrap(), 9.0);
        assert_eq!(f.component_gradient(1, &[2.0, 1.0]).unwrap(), vec![6.0, 6.0]);
        assert_eq!(f.max_degree(), 4.0);
        assert_eq!(f.min_degree(), 2.0);
    }
}
