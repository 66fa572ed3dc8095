//! Simultaneous-update and posted-price (sequential-update) engines.

use std::path::Path;

use serde::Serialize;

use crate::config::SolverConfig;
use crate::cost_model::{conjugate_cost, CostFunction, Valuation};
use crate::error::{check_dim, check_nonnegative, Result};
use crate::grid::Variant;
use crate::io::{csv_bytes, fmt_f64, write_atomic};
use crate::numeric::{maximize_box, BoxOptions, Objective};
use crate::offline::Instance;

/// Which engine produced a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EngineKind {
    Simultaneous,
    Sequential { offset: Vec<f64> },
}

impl EngineKind {
    /// The analyzed variant, or `None` for an unanalyzed offset.
    pub fn variant(&self) -> Option<Variant> {
        match self {
            EngineKind::Simultaneous => Some(Variant::Sim),
            EngineKind::Sequential { offset } => {
                if offset.iter().all(|o| *o == 0.0) {
                    Some(Variant::Seq0)
                } else if offset.iter().all(|o| *o == 1.0) {
                    Some(Variant::Seq1)
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub allocation: Vec<f64>,
    pub price: Vec<f64>,
    pub valuation_gradient: Vec<f64>,
    pub cumulative_allocation: Vec<f64>,
    pub cumulative_value: f64,
    pub cumulative_objective: f64,
    pub converged: bool,
}

/// Trace of one online run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub engine: EngineKind,
    pub steps: Vec<StepRecord>,
    /// `sum_t v_t(x_t) - f(sum_t x_t)` against the true cost.
    pub objective: f64,
    /// Set when the offset is neither 0 nor 1 in every coordinate.
    pub unanalyzed_offset: bool,
}

impl RunRecord {
    pub fn allocations(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.allocation.clone()).collect()
    }

    pub fn prices(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.price.clone()).collect()
    }

    /// `sum_t x_t`.
    pub fn total_allocation(&self) -> Vec<f64> {
        self.steps
            .last()
            .map(|s| s.cumulative_allocation.clone())
            .unwrap_or_default()
    }

    /// `sum_t v_t(x_t)`.
    pub fn total_value(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative_value)
    }

    pub fn all_converged(&self) -> bool {
        self.steps.iter().all(|s| s.converged)
    }

    /// CSV with columns `t, x_1..x_D, lambda_1..lambda_D, cumulative_objective`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let d = self.steps.first().map_or(0, |s| s.allocation.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("x_{i}")));
        header.extend((1..=d).map(|i| format!("lambda_{i}")));
        header.push("cumulative_objective".into());
        let rows: Vec<Vec<String>> = self
            .steps
            .iter()
            .map(|s| {
                let mut r = vec![s.t.to_string()];
                r.extend(s.allocation.iter().map(|v| fmt_f64(*v)));
                r.extend(s.price.iter().map(|v| fmt_f64(*v)));
                r.push(fmt_f64(s.cumulative_objective));
                r
            })
            .collect();
        csv_bytes(&header, &rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv()?)
    }
}

/// Result of one marginal problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalStep {
    pub allocation: Vec<f64>,
    pub converged: bool,
}

struct MarginalObjective<'a> {
    v: &'a Valuation,
    fs: &'a CostFunction,
    s: &'a [f64],
    fs_at_s: f64,
}

impl MarginalObjective<'_> {
    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        self.s.iter().zip(x).map(|(a, b)| a + b).collect()
    }
}

impl Objective for MarginalObjective<'_> {
    fn dim(&self) -> usize {
        self.s.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.v.value_unchecked(x) - self.fs.eval_unchecked(&self.shifted(x)) + self.fs_at_s)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()> {
        self.v.gradient_into(x, g)?;
        let mut gf = vec![0.0; x.len()];
        self.fs.gradient_into(&self.shifted(x), &mut gf);
        for (gi, fi) in g.iter_mut().zip(&gf) {
            *gi -= fi;
        }
        Ok(())
    }

    fn hessian(&self, x: &[f64], h: &mut [f64]) -> Result<bool> {
        let d = x.len();
        self.fs.hessian_into(&self.shifted(x), h);
        h.iter_mut().for_each(|v| *v = -*v);
        let mut diag = vec![0.0; d];
        self.v.hessian_diag_into(x, &mut diag);
        for i in 0..d {
            h[i * d + i] += diag[i];
        }
        Ok(true)
    }
}

/// Maximizes `v(x) - f_s(S + x) + f_s(S)` over `[0, 1]^D`.
pub fn step_marginal(v: &Valuation, fs: &CostFunction, s: &[f64], cfg: &SolverConfig) -> Result<MarginalStep> {
    let d = fs.dimension();
    check_dim(d, s.len())?;
    check_dim(d, v.dimension())?;
    check_nonnegative(s)?;
    let obj = MarginalObjective {
        v,
        fs,
        s,
        fs_at_s: fs.eval_unchecked(s),
    };
    let interior = matches!(v, Valuation::ConcavePower { p, .. } if *p < 1.0);
    let x0 = vec![if interior { 0.5 } else { 0.0 }; d];
    let scale = v.coefficients().iter().fold(0.0f64, |m, c| m.max(*c));
    let opts = BoxOptions {
        tol: cfg.grad_tol * (1.0 + scale),
        max_iters: cfg.max_iters,
        step_init: cfg.step_init,
        divergence_cap: None,
    };
    let sol = maximize_box(&obj, &vec![0.0; d], &vec![1.0; d], &x0, opts)?;
    if sol.value < 0.0 {
        // Allocating nothing is always available.
        return Ok(MarginalStep {
            allocation: vec![0.0; d],
            converged: sol.converged,
        });
    }
    Ok(MarginalStep {
        allocation: sol.x,
        converged: sol.converged,
    })
}

fn check_engine_inputs(inst: &Instance, fs: &CostFunction, f: &CostFunction) -> Result<()> {
    check_dim(inst.dimension(), fs.dimension())?;
    check_dim(inst.dimension(), f.dimension())
}

struct Tracker<'a> {
    f: &'a CostFunction,
    s: Vec<f64>,
    value: f64,
    steps: Vec<StepRecord>,
}

impl<'a> Tracker<'a> {
    fn new(f: &'a CostFunction, d: usize) -> Self {
        Self {
            f,
            s: vec![0.0; d],
            value: 0.0,
            steps: Vec::new(),
        }
    }

    fn push(&mut self, v: &Valuation, x: Vec<f64>, price: Vec<f64>, converged: bool) -> Result<()> {
        let t = self.steps.len() + 1;
        for (si, xi) in self.s.iter_mut().zip(&x) {
            *si += xi;
        }
        self.value += v.value(&x).map_err(|e| e.at_step(t))?;
        let z = v.gradient_at_response(&x, &price).map_err(|e| e.at_step(t))?;
        let cumulative_objective = self.value - self.f.eval_unchecked(&self.s);
        self.steps.push(StepRecord {
            t,
            allocation: x,
            price,
            valuation_gradient: z,
            cumulative_allocation: self.s.clone(),
            cumulative_value: self.value,
            cumulative_objective,
            converged,
        });
        Ok(())
    }

    fn finish(self, engine: EngineKind, unanalyzed_offset: bool) -> RunRecord {
        let objective = self.steps.last().map_or(0.0, |s| s.cumulative_objective);
        RunRecord {
            engine,
            steps: self.steps,
            objective,
            unanalyzed_offset,
        }
    }
}

/// Simultaneous update: each arrival solves the marginal problem under `f_s`;
/// the recorded price is `grad f_s(S_t)`.
pub fn run_simultaneous(inst: &Instance, fs: &CostFunction, f: &CostFunction, cfg: &SolverConfig) -> Result<RunRecord> {
    check_engine_inputs(inst, fs, f)?;
    let mut tr = Tracker::new(f, inst.dimension());
    for (i, v) in inst.valuations().iter().enumerate() {
        let step = step_marginal(v, fs, &tr.s, cfg).map_err(|e| e.at_step(i + 1))?;
        let after: Vec<f64> = tr.s.iter().zip(&step.allocation).map(|(a, b)| a + b).collect();
        let price = fs.gradient(&after).map_err(|e| e.at_step(i + 1))?;
        tr.push(v, step.allocation, price, step.converged)?;
    }
    Ok(tr.finish(EngineKind::Simultaneous, false))
}

/// `grad f_s(S + offset)`; never depends on the arriving customer.
pub fn posted_price(fs: &CostFunction, s: &[f64], offset: &[f64]) -> Result<Vec<f64>> {
    check_dim(fs.dimension(), s.len())?;
    check_dim(fs.dimension(), offset.len())?;
    check_nonnegative(s)?;
    check_nonnegative(offset)?;
    let at: Vec<f64> = s.iter().zip(offset).map(|(a, b)| a + b).collect();
    fs.gradient(&at)
}

/// Posted pricing: publish `grad f_s(S_{t-1} + offset)`, then the customer
/// takes its best response; ties allocate.
pub fn run_sequential(
    inst: &Instance,
    fs: &CostFunction,
    f: &CostFunction,
    offset: &[f64],
    _cfg: &SolverConfig,
) -> Result<RunRecord> {
    check_engine_inputs(inst, fs, f)?;
    check_dim(inst.dimension(), offset.len())?;
    check_nonnegative(offset)?;
    let engine = EngineKind::Sequential {
        offset: offset.to_vec(),
    };
    let unanalyzed = engine.variant().is_none();
    let mut tr = Tracker::new(f, inst.dimension());
    for (i, v) in inst.valuations().iter().enumerate() {
        let price = posted_price(fs, &tr.s, offset).map_err(|e| e.at_step(i + 1))?;
        let x = v.best_response(&price).map_err(|e| e.at_step(i + 1))?;
        tr.push(v, x, price, true)?;
    }
    Ok(tr.finish(engine, unanalyzed))
}

/// `sum_t sum_d max(z_td - lambda_td, 0) - sum_t v_t*(z_t) + f*(lambda_T)`
/// along a completed run.
pub fn compute_ds(record: &RunRecord, inst: &Instance, f: &CostFunction, cfg: &SolverConfig) -> Result<f64> {
    check_dim(inst.horizon(), record.steps.len())?;
    let mut total = 0.0;
    for (s, v) in record.steps.iter().zip(inst.valuations()) {
        total += s
            .valuation_gradient
            .iter()
            .zip(&s.price)
            .map(|(z, l)| (z - l).max(0.0))
            .sum::<f64>();
        total -= v.concave_conjugate(&s.valuation_gradient)?;
    }
    let last = &record.steps.last().expect("nonempty horizon").price;
    Ok(total + conjugate_cost(f, last, cfg)?.value)
}
