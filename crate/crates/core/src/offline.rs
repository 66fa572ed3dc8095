//! The offline optimum, a grid oracle for it, and the dual objective.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::cost_model::{conjugate_cost, CostFunction, Valuation};
use crate::error::{check_dim, check_nonnegative, Error, Result};
use crate::io::{csv_bytes, fmt_f64, write_atomic};
use crate::numeric::{maximize_box, BoxOptions, Objective};

/// A horizon of customers over `D` resources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceJson", into = "InstanceJson")]
pub struct Instance {
    dimension: usize,
    valuations: Vec<Valuation>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    #[serde(rename = "D")]
    d: usize,
    #[serde(rename = "T")]
    t: usize,
    valuations: Vec<Valuation>,
}

impl TryFrom<InstanceJson> for Instance {
    type Error = Error;
    fn try_from(j: InstanceJson) -> Result<Self> {
        if j.valuations.len() != j.t {
            return Err(Error::InvalidInstance(format!(
                "T = {} but {} valuations given",
                j.t,
                j.valuations.len()
            )));
        }
        Instance::new(j.d, j.valuations)
    }
}

impl From<Instance> for InstanceJson {
    fn from(i: Instance) -> Self {
        InstanceJson {
            d: i.dimension,
            t: i.valuations.len(),
            valuations: i.valuations,
        }
    }
}

impl Instance {
    pub fn new(dimension: usize, valuations: Vec<Valuation>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        if valuations.is_empty() {
            return Err(Error::InvalidInstance("horizon must be positive".into()));
        }
        if let Some((t, v)) = valuations.iter().enumerate().find(|(_, v)| v.dimension() != dimension) {
            return Err(Error::InvalidInstance(format!(
                "valuation {} has dimension {}, expected {dimension}",
                t + 1,
                v.dimension()
            )));
        }
        Ok(Self { dimension, valuations })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances always serialize")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn horizon(&self) -> usize {
        self.valuations.len()
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    fn check_cost(&self, f: &CostFunction) -> Result<()> {
        check_dim(self.dimension, f.dimension())
    }

    /// `sum_t v_t(x_t) - f(sum_t x_t)`.
    pub fn objective(&self, f: &CostFunction, allocations: &[Vec<f64>]) -> Result<f64> {
        self.check_cost(f)?;
        if allocations.len() != self.horizon() {
            return Err(Error::DimensionMismatch {
                expected: self.horizon(),
                got: allocations.len(),
            });
        }
        let mut s = vec![0.0; self.dimension];
        let mut value = 0.0;
        for (v, x) in self.valuations.iter().zip(allocations) {
            value += v.value(x)?;
            for (si, xi) in s.iter_mut().zip(x) {
                *si += xi;
            }
        }
        Ok(value - f.eval(&s)?)
    }
}

/// Allocations and objective of the offline problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OfflineSolution {
    pub allocations: Vec<Vec<f64>>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

impl OfflineSolution {
    /// CSV with columns `t, x_1..x_D`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let d = self.allocations.first().map_or(0, |x| x.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("x_{i}")));
        let rows: Vec<Vec<String>> = self
            .allocations
            .iter()
            .enumerate()
            .map(|(t, x)| {
                let mut r = vec![(t + 1).to_string()];
                r.extend(x.iter().map(|v| fmt_f64(*v)));
                r
            })
            .collect();
        csv_bytes(&header, &rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv()?)
    }
}

struct OfflineObjective<'a> {
    inst: &'a Instance,
    f: &'a CostFunction,
}

impl OfflineObjective<'_> {
    fn totals(&self, x: &[f64]) -> Vec<f64> {
        let d = self.inst.dimension;
        let mut s = vec![0.0; d];
        for chunk in x.chunks(d) {
            for (si, xi) in s.iter_mut().zip(chunk) {
                *si += xi;
            }
        }
        s
    }
}

impl Objective for OfflineObjective<'_> {
    fn dim(&self) -> usize {
        self.inst.horizon() * self.inst.dimension
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let d = self.inst.dimension;
        let v: f64 = self
            .inst
            .valuations
            .iter()
            .zip(x.chunks(d))
            .map(|(v, xt)| v.value_unchecked(xt))
            .sum();
        Ok(v - self.f.eval_unchecked(&self.totals(x)))
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()> {
        let d = self.inst.dimension;
        let s = self.totals(x);
        let mut gf = vec![0.0; d];
        self.f.gradient_into(&s, &mut gf);
        for ((v, xt), gt) in self.inst.valuations.iter().zip(x.chunks(d)).zip(g.chunks_mut(d)) {
            v.gradient_into(xt, gt)?;
            for (gi, fi) in gt.iter_mut().zip(&gf) {
                *gi -= fi;
            }
        }
        Ok(())
    }
}

fn coefficient_scale(inst: &Instance) -> f64 {
    inst.valuations
        .iter()
        .flat_map(|v| v.coefficients().iter().copied())
        .fold(0.0, f64::max)
}

/// Maximizes `sum_t v_t(x_t) - f(sum_t x_t)` over `[0, 1]^{T x D}` by
/// spectral projected gradient ascent with backtracking.
pub fn solve_offline(inst: &Instance, f: &CostFunction, cfg: &SolverConfig) -> Result<OfflineSolution> {
    inst.check_cost(f)?;
    let n = inst.horizon() * inst.dimension;
    let concave = inst
        .valuations
        .iter()
        .any(|v| matches!(v, Valuation::ConcavePower { p, .. } if *p < 1.0));
    let x0 = vec![if concave { 0.5 } else { 0.0 }; n];
    let opts = BoxOptions {
        tol: cfg.grad_tol * (1.0 + coefficient_scale(inst)),
        max_iters: cfg.max_iters,
        step_init: cfg.step_init,
        divergence_cap: None,
    };
    let obj = OfflineObjective { inst, f };
    let mut sol = maximize_box(&obj, &vec![0.0; n], &vec![1.0; n], &x0, opts)?;
    if sol.value < 0.0 {
        // The zero allocation is always feasible.
        sol.x.iter_mut().for_each(|v| *v = 0.0);
        sol.value = 0.0;
    }
    Ok(OfflineSolution {
        allocations: sol.x.chunks(inst.dimension).map(|c| c.to_vec()).collect(),
        objective: sol.value,
        iterations: sol.iterations,
        converged: sol.converged,
        residual: sol.residual,
    })
}

/// Exact maximum over the grid `{0, step, ..., 1}^{T x D}`.
///
/// The maximum is computed by dynamic programming over the partial sums,
/// which visits the same candidate set as full enumeration.
pub fn brute_force_offline(
    inst: &Instance,
    f: &CostFunction,
    grid_step: f64,
    cfg: &SolverConfig,
) -> Result<(f64, Vec<Vec<f64>>)> {
    inst.check_cost(f)?;
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "grid step must lie in (0, 1], got {grid_step}"
        )));
    }
    let levels = (1.0 / grid_step).round();
    if (levels * grid_step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("grid step {grid_step} must divide 1")));
    }
    let n = levels as usize;
    let (t_max, d) = (inst.horizon(), inst.dimension);
    let count = ((n + 1) as f64).powi((t_max * d) as i32);
    if count > cfg.enumeration_cap as f64 {
        return Err(Error::EnumerationCap {
            count,
            cap: cfg.enumeration_cap,
        });
    }

    let choices: Vec<Vec<usize>> = lattice_points(&vec![n; d]);
    let values: Vec<Vec<f64>> = inst
        .valuations
        .iter()
        .map(|v| {
            choices
                .iter()
                .map(|c| {
                    let x: Vec<f64> = c.iter().map(|k| *k as f64 / levels).collect();
                    v.value_unchecked(&x)
                })
                .collect()
        })
        .collect();

    // best[t] is indexed by the partial-sum multi-index in [0, t n]^D.
    let mut best: Vec<Vec<f64>> = vec![vec![0.0]];
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        let prev_side = (t - 1) * n + 1;
        let side = t * n + 1;
        let states = side.pow(d as u32);
        let mut cur = vec![f64::NEG_INFINITY; states];
        let mut arg = vec![0usize; states];
        let prev = &best[t - 1];
        for (pi, pv) in prev.iter().enumerate() {
            let ps = unflatten(pi, prev_side, d);
            for (ci, c) in choices.iter().enumerate() {
                let si = flatten(ps.iter().zip(c).map(|(a, b)| a + b), side);
                let val = pv + values[t - 1][ci];
                if val > cur[si] {
                    cur[si] = val;
                    arg[si] = ci;
                }
            }
        }
        best.push(cur);
        back.push(arg);
    }

    let side = t_max * n + 1;
    let mut top = f64::NEG_INFINITY;
    let mut top_state = 0;
    for (si, v) in best[t_max].iter().enumerate() {
        let s: Vec<f64> = unflatten(si, side, d).iter().map(|k| *k as f64 / levels).collect();
        let total = v - f.eval_unchecked(&s);
        if total > top {
            top = total;
            top_state = si;
        }
    }

    let mut allocs = vec![vec![0.0; d]; t_max];
    let mut state = unflatten(top_state, side, d);
    for t in (1..=t_max).rev() {
        let ci = back[t - 1][flatten(state.iter().copied(), t * n + 1)];
        allocs[t - 1] = choices[ci].iter().map(|k| *k as f64 / levels).collect();
        for (s, c) in state.iter_mut().zip(&choices[ci]) {
            *s -= c;
        }
    }
    Ok((top, allocs))
}

fn lattice_points(limits: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &l in limits {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=l).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

fn flatten(idx: impl Iterator<Item = usize>, side: usize) -> usize {
    idx.fold(0, |acc, k| acc * side + k)
}

fn unflatten(mut i: usize, side: usize, d: usize) -> Vec<usize> {
    let mut v = vec![0; d];
    for k in (0..d).rev() {
        v[k] = i % side;
        i /= side;
    }
    v
}

/// `sum_t sum_d max(z_td - lambda_d, 0) - sum_t v_t*(z_t) + f*(lambda)`.
///
/// Concave conjugates use the closed forms of the valuation families, which
/// agree with `conjugate_at_gradient` at gradient points; the result is
/// `+inf` when some `v_t*` is unbounded below.
pub fn dual_objective(
    inst: &Instance,
    f: &CostFunction,
    lambda: &[f64],
    zs: &[Vec<f64>],
    cfg: &SolverConfig,
) -> Result<f64> {
    inst.check_cost(f)?;
    check_dim(inst.dimension, lambda.len())?;
    check_nonnegative(lambda)?;
    check_dim(inst.horizon(), zs.len())?;
    let mut total = 0.0;
    for (v, z) in inst.valuations.iter().zip(zs) {
        check_dim(inst.dimension, z.len())?;
        check_nonnegative(z)?;
        total += z.iter().zip(lambda).map(|(a, b)| (a - b).max(0.0)).sum::<f64>();
        total -= v.concave_conjugate(z)?;
    }
    Ok(total + conjugate_cost(f, lambda, cfg)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(cs: &[f64]) -> Instance {
        Instance::new(1, cs.iter().map(|c| Valuation::linear(vec![*c]).unwrap()).collect()).unwrap()
    }

    fn square() -> CostFunction {
        CostFunction::power(1.0, 2.0).unwrap()
    }

    #[test]
    fn scalar_adversarial_t4() {
        let sol = solve_offline(&linear(&[2.0, 4.0, 6.0, 8.0]), &square(), &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.objective - 10.0).abs() < 1e-8);
        let want = [0.0, 0.0, 1.0, 1.0];
        for (x, w) in sol.allocations.iter().zip(want) {
            assert!((x[0] - w).abs() < 1e-6);
        }
    }

    #[test]
    fn two_customers() {
        let sol = solve_offline(&linear(&[1.0, 3.0]), &square(), &SolverConfig::default()).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-9);
        assert!(sol.allocations[0][0].abs() < 1e-7);
        assert!((sol.allocations[1][0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn zero_valuations() {
        let sol = solve_offline(&linear(&[0.0, 0.0, 0.0]), &square(), &SolverConfig::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.allocations.iter().all(|x| x[0] == 0.0));
    }

    #[test]
    fn brute_force_examples() {
        let cfg = SolverConfig::default();
        let (v, x) = brute_force_offline(&linear(&[1.0, 3.0]), &square(), 0.5, &cfg).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(x, vec![vec![0.0], vec![1.0]]);
        let (v, _) = brute_force_offline(&linear(&[2.0, 4.0, 6.0, 8.0]), &square(), 1.0, &cfg).unwrap();
        assert_eq!(v, 10.0);
        // u^2 + u has gradient 1 at the origin; valuations below it are unprofitable.
        let f = CostFunction::new(
            1,
            vec![
                crate::cost_model::MonomialTerm::new(1.0, vec![2.0]).unwrap(),
                crate::cost_model::MonomialTerm::new(1.0, vec![1.0]).unwrap(),
            ],
            None,
        )
        .unwrap();
        let (v, x) = brute_force_offline(&linear(&[0.5, 1.0]), &f, 1.0, &cfg).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(x, vec![vec![0.0], vec![0.0]]);
    }

    #[test]
    fn brute_force_matches_naive_enumeration() {
        let inst = Instance::new(
            2,
            vec![
                Valuation::linear(vec![3.0, 1.0]).unwrap(),
                Valuation::concave_power(vec![2.0, 5.0], 0.5).unwrap(),
            ],
        )
        .unwrap();
        let f = CostFunction::quartic_plus_square();
        let (dp, alloc) = brute_force_offline(&inst, &f, 0.25, &SolverConfig::default()).unwrap();
        let vals: Vec<f64> = (0..=4).map(|k| k as f64 * 0.25).collect();
        let mut best = f64::NEG_INFINITY;
        for a in &vals {
            for b in &vals {
                for c in &vals {
                    for d in &vals {
                        let x = vec![vec![*a, *b], vec![*c, *d]];
                        best = best.max(inst.objective(&f, &x).unwrap());
                    }
                }
            }
        }
        assert!((dp - best).abs() < 1e-12);
        assert!((inst.objective(&f, &alloc).unwrap() - dp).abs() < 1e-12);
    }

    #[test]
    fn brute_force_cap() {
        let cfg = SolverConfig {
            enumeration_cap: 100,
            ..Default::default()
        };
        assert!(matches!(
            brute_force_offline(&linear(&[1.0, 2.0, 3.0]), &square(), 0.1, &cfg),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn dual_examples() {
        let cfg = SolverConfig::default();
        let d = dual_objective(&linear(&[2.0]), &square(), &[2.0], &[vec![2.0]], &cfg).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let d0 = dual_objective(&linear(&[2.0, 3.0]), &square(), &[0.0], &[vec![0.0], vec![0.0]], &cfg).unwrap();
        // z below the linear coefficients makes -v* infinite, so the bound is vacuous.
        assert_eq!(d0, f64::INFINITY);
        let z = dual_objective(&linear(&[0.0, 0.0]), &square(), &[0.0], &[vec![0.0], vec![0.0]], &cfg).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn weak_duality_on_gradient_points() {
        let inst = linear(&[1.0, 5.0, 2.5]);
        let f = square();
        let cfg = SolverConfig::default();
        let p = solve_offline(&inst, &f, &cfg).unwrap().objective;
        for lam in [0.0, 0.5, 2.0, 4.0, 7.0] {
            let zs: Vec<Vec<f64>> = inst.valuations().iter().map(|v| v.coefficients().to_vec()).collect();
            assert!(dual_objective(&inst, &f, &[lam], &zs, &cfg).unwrap() >= p - 1e-9);
        }
    }

    #[test]
    fn instance_json() {
        let inst =
            Instance::from_json(r#"{"D":1,"T":2,"valuations":[{"kind":"linear","c":[1]},{"kind":"linear","c":[3]}]}"#)
                .unwrap();
        assert_eq!(inst, linear(&[1.0, 3.0]));
        assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
        assert!(Instance::from_json(r#"{"D":1,"T":3,"valuations":[{"kind":"linear","c":[1]}]}"#).is_err());
        assert!(Instance::from_json(r#"{"D":2,"T":1,"valuations":[{"kind":"linear","c":[1]}]}"#).is_err());
    }

    #[test]
    fn csv_export() {
        let sol = OfflineSolution {
            allocations: vec![vec![0.0, 1.0], vec![0.5, 0.25]],
            objective: 1.0,
            iterations: 0,
            converged: true,
            residual: 0.0,
        };
        let text = String::from_utf8(sol.to_csv().unwrap()).unwrap();
        assert_eq!(text, "t,x_1,x_2\n1,0,1\n2,0.5,0.25\n");
    }
}
