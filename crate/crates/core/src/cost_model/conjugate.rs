use super::cost::CostFunction;
use crate::config::SolverConfig;
use crate::error::{check_dim, check_nonnegative, Error, Result};
use crate::numeric::{maximize_box, BoxOptions, Objective};

/// `f*(lambda)` together with a maximizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Conjugate {
    pub value: f64,
    pub maximizer: Vec<f64>,
    pub iterations: usize,
}

struct ConjugateObjective<'a> {
    f: &'a CostFunction,
    lambda: &'a [f64],
}

impl Objective for ConjugateObjective<'_> {
    fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        let lin: f64 = self.lambda.iter().zip(u).map(|(a, b)| a * b).sum();
        Ok(lin - self.f.eval_unchecked(u))
    }

    fn gradient(&self, u: &[f64], g: &mut [f64]) -> Result<()> {
        self.f.gradient_into(u, g);
        for (gi, li) in g.iter_mut().zip(self.lambda) {
            *gi = li - *gi;
        }
        if g.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("cost gradient undefined".into()));
        }
        Ok(())
    }

    fn hessian(&self, u: &[f64], h: &mut [f64]) -> Result<bool> {
        self.f.hessian_into(u, h);
        h.iter_mut().for_each(|v| *v = -*v);
        Ok(true)
    }
}

/// Growth of `f` along the axis `e_i`: `(max pure exponent, linear coefficient)`.
fn axis_growth(f: &CostFunction, i: usize) -> (Option<f64>, f64) {
    let mut max_p: Option<f64> = None;
    let mut linear = 0.0;
    for t in f.terms() {
        if let Some(p) = t.pure_power_in(i) {
            max_p = Some(max_p.map_or(p, |m: f64| m.max(p)));
            if p == 1.0 {
                linear += t.coefficient();
            }
        }
    }
    (max_p, linear)
}

/// Rejects prices for which the supremum is certainly infinite.
fn coercivity_check(f: &CostFunction, lambda: &[f64]) -> Result<()> {
    for (i, &l) in lambda.iter().enumerate() {
        if l <= 0.0 {
            continue;
        }
        let infinite = match axis_growth(f, i) {
            (None, _) => true,
            (Some(p), _) if p < 1.0 => true,
            (Some(1.0), c1) => l > c1,
            _ => false,
        };
        if infinite {
            return Err(Error::ConjugateInfinite {
                lambda: lambda.to_vec(),
            });
        }
    }
    Ok(())
}

/// Per-coordinate root of the steepest pure-power term's stationarity condition.
fn dominant_start(f: &CostFunction, lambda: &[f64]) -> Vec<f64> {
    (0..lambda.len())
        .map(|i| {
            let mut best: Option<f64> = None;
            for t in f.terms() {
                if let Some(p) = t.pure_power_in(i) {
                    if p > 1.0 && lambda[i] > 0.0 {
                        let u = (lambda[i] / (t.coefficient() * p)).powf(1.0 / (p - 1.0));
                        best = Some(best.map_or(u, |b: f64| b.min(u)));
                    }
                }
            }
            best.unwrap_or(if lambda[i] > 0.0 { 1.0 } else { 0.0 })
        })
        .collect()
}

fn validate(f: &CostFunction, lambda: &[f64]) -> Result<()> {
    check_dim(f.dimension(), lambda.len())?;
    check_nonnegative(lambda)?;
    coercivity_check(f, lambda)
}

fn solve_from(f: &CostFunction, lambda: &[f64], start: &[f64], cfg: &SolverConfig) -> Result<Conjugate> {
    let scale = lambda.iter().fold(0.0f64, |m, v| m.max(*v));
    let opts = BoxOptions {
        tol: cfg.grad_tol * (1.0 + scale),
        max_iters: cfg.max_iters,
        step_init: cfg.step_init,
        divergence_cap: Some(cfg.divergence_cap),
    };
    let d = lambda.len();
    let obj = ConjugateObjective { f, lambda };
    let sol = maximize_box(&obj, &vec![0.0; d], &vec![f64::INFINITY; d], start, opts).map_err(|e| match e {
        Error::ConjugateInfinite { .. } => Error::ConjugateInfinite {
            lambda: lambda.to_vec(),
        },
        other => other,
    })?;
    if !sol.converged {
        return Err(Error::NonConvergence {
            iterations: sol.iterations,
            residual: sol.residual,
        });
    }
    Ok(Conjugate {
        value: sol.value,
        maximizer: sol.x,
        iterations: sol.iterations,
    })
}

/// `f*(lambda) = sup_{u >= 0} lambda^T u - f(u)`.
///
/// Starts from `u = 1` and from the dominant-term stationary point and keeps
/// the better result.
pub fn conjugate_cost(f: &CostFunction, lambda: &[f64], cfg: &SolverConfig) -> Result<Conjugate> {
    validate(f, lambda)?;
    let d = lambda.len();
    if lambda.iter().all(|l| *l == 0.0) {
        return Ok(Conjugate {
            value: 0.0,
            maximizer: vec![0.0; d],
            iterations: 0,
        });
    }
    let starts = [vec![1.0; d], dominant_start(f, lambda)];
    let mut best: Option<Conjugate> = None;
    let mut last_err = None;
    for s in &starts {
        match solve_from(f, lambda, s, cfg) {
            Ok(c) => {
                if best.as_ref().map_or(true, |b| c.value > b.value) {
                    best = Some(c);
                }
            }
            Err(e @ Error::ConjugateInfinite { .. }) => return Err(e),
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("at least one start ran"))
}

/// Single-start variant used in grid sweeps; falls back to [`conjugate_cost`]
/// when the warm start fails to converge.
pub fn conjugate_cost_from(f: &CostFunction, lambda: &[f64], start: &[f64], cfg: &SolverConfig) -> Result<Conjugate> {
    validate(f, lambda)?;
    check_dim(f.dimension(), start.len())?;
    if lambda.iter().all(|l| *l == 0.0) {
        return Ok(Conjugate {
            value: 0.0,
            maximizer: vec![0.0; lambda.len()],
            iterations: 0,
        });
    }
    match solve_from(f, lambda, start, cfg) {
        Ok(c) => Ok(c),
        Err(e @ Error::ConjugateInfinite { .. }) => Err(e),
        Err(_) => conjugate_cost(f, lambda, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_model::MonomialTerm;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn quadratic() {
        let f = CostFunction::power(1.0, 2.0).unwrap();
        let c = conjugate_cost(&f, &[4.0], &cfg()).unwrap();
        assert!((c.value - 4.0).abs() < 1e-12);
        assert!((c.maximizer[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn quartic() {
        let f = CostFunction::power(1.0, 4.0).unwrap();
        let c = conjugate_cost(&f, &[4.0], &cfg()).unwrap();
        assert!((c.value - 3.0).abs() < 1e-12);
        assert!((c.maximizer[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_dimensional_gradient_point() {
        let f = CostFunction::quartic_plus_square();
        let c = conjugate_cost(&f, &[8.0, 4.0], &cfg()).unwrap();
        assert!((c.value - 7.0).abs() < 1e-10);
        assert!((c.maximizer[0] - 1.0).abs() < 1e-8);
        assert!((c.maximizer[1] - 1.0).abs() < 1e-8);
        // Brute force over [0, 3]^2 with step 0.01.
        let mut best = f64::NEG_INFINITY;
        for i in 0..=300 {
            for j in 0..=300 {
                let u = [i as f64 * 0.01, j as f64 * 0.01];
                best = best.max(8.0 * u[0] + 4.0 * u[1] - f.eval(&u).unwrap());
            }
        }
        assert!((best - c.value).abs() < 1e-3);
        assert!(best <= c.value + 1e-12);
    }

    #[test]
    fn active_bound() {
        // u1^2 + u1 u2 + u2^2 at lambda = (1, 0): maximizer (0.5, 0), value 0.25.
        let t = |c: f64, e: [f64; 2]| MonomialTerm::new(c, e.to_vec()).unwrap();
        let f = CostFunction::new(
            2,
            vec![t(1.0, [2.0, 0.0]), t(1.0, [1.0, 1.0]), t(1.0, [0.0, 2.0])],
            None,
        )
        .unwrap();
        let c = conjugate_cost(&f, &[1.0, 0.0], &cfg()).unwrap();
        assert!((c.value - 0.25).abs() < 1e-12);
        assert_eq!(c.maximizer[1], 0.0);
    }

    #[test]
    fn zero_price() {
        let f = CostFunction::quartic_plus_square();
        let c = conjugate_cost(&f, &[0.0, 0.0], &cfg()).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn linear_growth_is_infinite() {
        let f = CostFunction::power(1.0, 1.0).unwrap();
        assert!(matches!(
            conjugate_cost(&f, &[2.0], &cfg()),
            Err(Error::ConjugateInfinite { .. })
        ));
        // Bounded when the price does not exceed the slope.
        assert_eq!(conjugate_cost(&f, &[0.5], &cfg()).unwrap().value, 0.0);
        let g = CostFunction::new(2, vec![MonomialTerm::new(1.0, vec![2.0, 2.0]).unwrap()], None).unwrap();
        assert!(matches!(
            conjugate_cost(&g, &[1.0, 0.0], &cfg()),
            Err(Error::ConjugateInfinite { .. })
        ));
    }

    #[test]
    fn fractional_exponents() {
        // u^1.5: f*(l) = (4/27) l^3.
        let f = CostFunction::power(1.0, 1.5).unwrap();
        let c = conjugate_cost(&f, &[3.0], &cfg()).unwrap();
        assert!((c.value - 4.0).abs() < 1e-10);
    }

    #[test]
    fn warm_start_matches_cold() {
        let f = CostFunction::quartic_plus_square();
        let lam = [37.0, 12.5];
        let a = conjugate_cost(&f, &lam, &cfg()).unwrap();
        let b = conjugate_cost_from(&f, &lam, &[5.0, 0.0], &cfg()).unwrap();
        assert!((a.value - b.value).abs() < 1e-9 * a.value.abs().max(1.0));
    }
}
