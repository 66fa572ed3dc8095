use rayon::prelude::*;

use crate::config::SolverConfig;
use crate::cost_model::{conjugate_cost, conjugate_cost_from, CostFunction};
use crate::error::{check_dim, Error, Result};
use crate::grid::{GridSpec, Variant};

/// Largest ratio on the grid and where it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioPoint {
    pub alpha: f64,
    pub at: Vec<f64>,
}

/// Point at which the numerator's price is taken.
fn price_point(variant: Variant, u: &[f64]) -> Vec<f64> {
    match variant {
        Variant::Seq1 => u.iter().map(|x| x + 1.0).collect(),
        Variant::Sim | Variant::Seq0 => u.to_vec(),
    }
}

/// `None` for a skipped 0/0 point, `+inf` for a positive numerator over a
/// vanishing or negative denominator.
fn classify(num: f64, den: f64, tol: f64) -> Option<f64> {
    if den < tol {
        if den.abs() < tol && num < tol {
            None
        } else if num >= tol {
            Some(f64::INFINITY)
        } else {
            Some(num / den)
        }
    } else {
        Some(num / den)
    }
}

fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Grid supremum of the variant's ratio:
/// SIM `f*(grad f_s(u)) / (f_s(u) - f(u))`,
/// SEQ0 the same numerator over `f_s(u) - f(u) - 1^T(grad f_s(u) - grad f_s(0))`,
/// SEQ1 `f*(grad f_s(u + 1)) / (f_s(u) - f(u))`.
pub fn alpha_ratio_at(
    f: &CostFunction,
    fs: &CostFunction,
    variant: Variant,
    grid: &GridSpec,
    cfg: &SolverConfig,
) -> Result<RatioPoint> {
    let d = f.dimension();
    check_dim(d, fs.dimension())?;
    check_dim(d, grid.dimension())?;
    let points = grid.points();
    let grad0 = fs.gradient(&vec![0.0; d]).ok();
    let best = points
        .par_iter()
        .enumerate()
        .map(|(i, u)| -> Result<(f64, usize)> {
            let lam = fs.gradient(&price_point(variant, u))?;
            let num = conjugate_cost(f, &lam, cfg)?.value;
            let mut den = fs.eval_unchecked(u) - f.eval_unchecked(u);
            if variant == Variant::Seq0 {
                let g0 = grad0
                    .as_ref()
                    .ok_or_else(|| Error::Domain("surrogate gradient undefined at 0".into()))?;
                let gu = fs.gradient(u)?;
                den -= gu.iter().zip(g0).map(|(a, b)| a - b).sum::<f64>();
            }
            Ok(match classify(num, den, cfg.denom_tol) {
                Some(r) => (r, i),
                None => (f64::NEG_INFINITY, usize::MAX),
            })
        })
        .try_reduce(|| (f64::NEG_INFINITY, usize::MAX), |a, b| Ok(better(a, b)))?;
    if best.1 == usize::MAX {
        return Err(Error::InvalidConfig("every grid point is a 0/0 point".into()));
    }
    Ok(RatioPoint {
        alpha: best.0,
        at: points[best.1].clone(),
    })
}

/// [`alpha_ratio_at`] without the location.
pub fn alpha_ratio(
    f: &CostFunction,
    fs: &CostFunction,
    variant: Variant,
    grid: &GridSpec,
    cfg: &SolverConfig,
) -> Result<f64> {
    Ok(alpha_ratio_at(f, fs, variant, grid, cfg)?.alpha)
}

/// Per-point data of the weight-design problem; the ratio's numerator and
/// denominator are affine in the weights before the conjugate is applied.
struct PointData {
    u: Vec<f64>,
    /// `grad g_n` at the price point, one row per component.
    grads: Vec<Vec<f64>>,
    /// Denominator is `den_const + sum_n a_n den_coef[n]`.
    den_coef: Vec<f64>,
    den_const: f64,
}

/// Evaluation of the max violation at one weight vector.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    pub violation: f64,
    pub worst: usize,
    pub subgradient: Vec<f64>,
}

/// The weight-design problem on a fixed grid.
pub(crate) struct WeightProblem<'a> {
    f: &'a CostFunction,
    cfg: &'a SolverConfig,
    points: Vec<PointData>,
    /// Conjugate maximizers from the previous evaluation, per point.
    warm: Vec<Vec<f64>>,
    /// `num(1) - den(1) alpha` lower-bounds the violation at points whose
    /// denominator cannot grow with the weights.
    rigid: Vec<(f64, f64)>,
}

impl<'a> WeightProblem<'a> {
    pub fn new(f: &'a CostFunction, variant: Variant, grid: &GridSpec, cfg: &'a SolverConfig) -> Result<Self> {
        let d = f.dimension();
        check_dim(d, grid.dimension())?;
        let n = f.num_components();
        let zero = vec![0.0; d];
        let grad0: Vec<Vec<f64>> = (0..n).map(|k| f.component_gradient(k, &zero)).collect::<Result<_>>()?;
        let points: Vec<PointData> = grid
            .points()
            .into_iter()
            .map(|u| -> Result<PointData> {
                let p = price_point(variant, &u);
                let grads: Vec<Vec<f64>> = (0..n).map(|k| f.component_gradient(k, &p)).collect::<Result<_>>()?;
                let mut den_coef: Vec<f64> = (0..n).map(|k| f.component_eval(k, &u)).collect::<Result<_>>()?;
                if variant == Variant::Seq0 {
                    for (k, c) in den_coef.iter_mut().enumerate() {
                        let gu = f.component_gradient(k, &u)?;
                        *c -= gu.iter().zip(&grad0[k]).map(|(a, b)| a - b).sum::<f64>();
                    }
                }
                Ok(PointData {
                    den_const: -f.eval_unchecked(&u),
                    u,
                    grads,
                    den_coef,
                })
            })
            .collect::<Result<_>>()?;
        let warm = points.iter().map(|p| price_point(variant, &p.u)).collect();

        // Points where every denominator coefficient is nonpositive.
        let ones = vec![1.0; n];
        let rigid = points
            .par_iter()
            .filter(|p| p.den_coef.iter().all(|c| *c <= 0.0))
            .map(|p| -> Result<(f64, f64)> {
                let lam = Self::price(p, &ones, d);
                let num = conjugate_cost(f, &lam, cfg)?.value;
                Ok((num, p.den_const + p.den_coef.iter().sum::<f64>()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            f,
            cfg,
            points,
            warm,
            rigid,
        })
    }

    pub fn num_components(&self) -> usize {
        self.f.num_components()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i].u
    }

    fn price(p: &PointData, a: &[f64], d: usize) -> Vec<f64> {
        let mut lam = vec![0.0; d];
        for (ak, g) in a.iter().zip(&p.grads) {
            for (l, gi) in lam.iter_mut().zip(g) {
                *l += ak * gi;
            }
        }
        lam
    }

    /// A violation that no weight vector can get below, if one is known.
    pub fn violation_floor(&self, alpha: f64) -> Option<f64> {
        self.rigid
            .iter()
            .map(|(num, den)| num - alpha * den)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    }

    /// Max over the grid of `num(u; a) - alpha den(u; a)` and a subgradient in `a`.
    pub fn evaluate(&mut self, a: &[f64], alpha: f64) -> Result<Evaluation> {
        let d = self.f.dimension();
        let f = self.f;
        let cfg = self.cfg;
        let best = self
            .points
            .par_iter()
            .zip(self.warm.par_iter_mut())
            .enumerate()
            .map(|(i, (p, warm))| -> Result<(f64, usize)> {
                let lam = Self::price(p, a, d);
                let c = conjugate_cost_from(f, &lam, warm, cfg)?;
                *warm = c.maximizer;
                let den = p.den_const + p.den_coef.iter().zip(a).map(|(c, a)| c * a).sum::<f64>();
                Ok((c.value - alpha * den, i))
            })
            .try_reduce(|| (f64::NEG_INFINITY, usize::MAX), |x, y| Ok(better(x, y)))?;
        let (violation, worst) = best;
        let p = &self.points[worst];
        let ustar = &self.warm[worst];
        let subgradient = p
            .grads
            .iter()
            .zip(&p.den_coef)
            .map(|(g, c)| g.iter().zip(ustar).map(|(a, b)| a * b).sum::<f64>() - alpha * c)
            .collect();
        Ok(Evaluation {
            violation,
            worst,
            subgradient,
        })
    }
}

/// Max violation of `f*(grad f_s(u)) <= alpha * den(u)` over the grid for
/// `f_s = sum_n a_n g_n`, with the worst grid point.
pub fn feasibility_violation(
    f: &CostFunction,
    weights: &[f64],
    alpha: f64,
    variant: Variant,
    grid: &GridSpec,
    cfg: &SolverConfig,
) -> Result<(f64, Vec<f64>)> {
    check_weights(f, weights)?;
    if !(alpha >= 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must be at least 1, got {alpha}")));
    }
    let mut problem = WeightProblem::new(f, variant, grid, cfg)?;
    let ev = problem.evaluate(weights, alpha)?;
    Ok((ev.violation, problem.point(ev.worst).to_vec()))
}

pub(crate) fn check_weights(f: &CostFunction, weights: &[f64]) -> Result<()> {
    check_dim(f.num_components(), weights.len())?;
    if let Some(a) = weights.iter().find(|a| !(**a >= 1.0) || !a.is_finite()) {
        return Err(Error::InvalidSurrogate(format!("weights must be at least 1, got {a}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_model::SurrogateSpec;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn sq() -> CostFunction {
        CostFunction::power(1.0, 2.0).unwrap()
    }

    #[test]
    fn sim_doubled_square_is_four() {
        let fs = CostFunction::power(2.0, 2.0).unwrap();
        let g = GridSpec::new(vec![10.0], 0.1).unwrap();
        let a = alpha_ratio(&sq(), &fs, Variant::Sim, &g, &cfg()).unwrap();
        assert!((a - 4.0).abs() < 1e-9);
    }

    #[test]
    fn identity_is_infinite() {
        let g = GridSpec::new(vec![3.0], 0.5).unwrap();
        assert_eq!(
            alpha_ratio(&sq(), &sq(), Variant::Sim, &g, &cfg()).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn seq1_origin_is_infinite() {
        let fs = CostFunction::power(2.0, 2.0).unwrap();
        let g = GridSpec::for_variant(Variant::Seq1, 5, 1, 0.5).unwrap();
        assert_eq!(
            alpha_ratio(&sq(), &fs, Variant::Seq1, &g, &cfg()).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn seq0_negative_denominator() {
        // f_s - f - (f_s' - f_s'(0)) = u^2 - 4u < 0 on (0, 4).
        let fs = CostFunction::power(2.0, 2.0).unwrap();
        let g = GridSpec::new(vec![3.0], 0.5).unwrap();
        assert_eq!(
            alpha_ratio(&sq(), &fs, Variant::Seq0, &g, &cfg()).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn violation_examples() {
        let g = GridSpec::new(vec![10.0], 0.1).unwrap();
        let (v, _) = feasibility_violation(&sq(), &[2.0], 4.0, Variant::Sim, &g, &cfg()).unwrap();
        assert!(v <= 1e-9);
        let (v, at) = feasibility_violation(&sq(), &[2.0], 3.9, Variant::Sim, &g, &cfg()).unwrap();
        assert!(v > 0.0);
        assert!((v - 0.1 * 100.0).abs() < 1e-6);
        assert_eq!(at, vec![10.0]);
        let (v, _) = feasibility_violation(&sq(), &[1.0], 50.0, Variant::Sim, &g, &cfg()).unwrap();
        assert!(v > 0.0);
    }

    #[test]
    fn poly_design_on_two_dimensional_cost() {
        let f = CostFunction::quartic_plus_square();
        let fs = SurrogateSpec::scaled(f.clone(), 4f64.powf(1.0 / 3.0)).unwrap().expand();
        let g = GridSpec::for_variant(Variant::Sim, 10, 2, 0.1).unwrap();
        let a = alpha_ratio(&f, &fs, Variant::Sim, &g, &cfg()).unwrap();
        assert!((a - 4f64.powf(4.0 / 3.0)).abs() < 0.01, "{a}");
    }

    #[test]
    fn rigid_points_give_a_floor() {
        let f = sq();
        let g = GridSpec::for_variant(Variant::Seq1, 3, 1, 0.5).unwrap();
        let c = cfg();
        let p = WeightProblem::new(&f, Variant::Seq1, &g, &c).unwrap();
        // The origin: numerator f*(2) = 1 over a zero denominator.
        assert!(p.violation_floor(100.0).unwrap() >= 1.0 - 1e-12);
        let g = GridSpec::for_variant(Variant::Sim, 3, 1, 0.5).unwrap();
        let p = WeightProblem::new(&f, Variant::Sim, &g, &c).unwrap();
        assert!(p.violation_floor(100.0).unwrap() <= 0.0);
    }
}
