//! Experiment runner: design a surrogate per strategy, run the online engine,
//! compare against the offline optimum and export plot-ready CSVs.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::cost_model::{validate_assumptions, CostFunction, SurrogateSpec, ValidationReport};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Variant};
use crate::instances::GeneratorSpec;
use crate::io::{csv_bytes, fmt_f64, write_atomic};
use crate::offline::{solve_offline, Instance};
use crate::online::{run_sequential, run_simultaneous};
use crate::surrogate::{alpha_ratio, design_chan, design_poly, design_quasiconvex, DesignReport};

/// Slack allowed when comparing the empirical ratio with the bound.
pub const PASS_TOL: f64 = 1e-6;

/// Below this the offline optimum counts as zero and the ratio as 1.
const ZERO_OPTIMUM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostSource {
    File { file: PathBuf },
    Inline(CostFunction),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    Generator(GeneratorSpec),
    File(PathBuf),
    Inline(Instance),
}

fn default_grid_step() -> f64 {
    0.1
}

fn default_epsilon() -> f64 {
    0.005
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    Identity,
    Poly,
    Chan,
    Quasiconvex {
        #[serde(default = "default_grid_step")]
        grid_step: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default)]
        alpha_upper: Option<f64>,
    },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Identity => "identity",
            Strategy::Poly => "poly",
            Strategy::Chan => "chan",
            Strategy::Quasiconvex { .. } => "quasiconvex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EngineSpec {
    Simultaneous,
    Sequential { offset: u8 },
}

impl EngineSpec {
    pub fn variant(self) -> Result<Variant> {
        match self {
            EngineSpec::Simultaneous => Ok(Variant::Sim),
            EngineSpec::Sequential { offset: 0 } => Ok(Variant::Seq0),
            EngineSpec::Sequential { offset: 1 } => Ok(Variant::Seq1),
            EngineSpec::Sequential { offset } => {
                Err(Error::InvalidConfig(format!("offset must be 0 or 1, got {offset}")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cost: CostSource,
    pub strategies: Vec<Strategy>,
    pub engine: EngineSpec,
    pub instance: InstanceSource,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Grid step used to evaluate the bound of non-quasiconvex strategies.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Directory that relative file paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Reads a config; relative paths inside it resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("at least one strategy is required".into()));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].iter().any(|o| o.name() == s.name()) {
                return Err(Error::InvalidConfig(format!("strategy {} listed twice", s.name())));
            }
            if let Strategy::Quasiconvex { grid_step, epsilon, .. } = s {
                if !(*grid_step > 0.0) || !(*epsilon > 0.0) {
                    return Err(Error::InvalidConfig(
                        "quasiconvex grid_step and epsilon must be positive".into(),
                    ));
                }
            }
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid_step must be positive, got {}",
                self.grid_step
            )));
        }
        self.engine.variant()?;
        self.solver.validate()
    }

    pub fn load_cost(&self) -> Result<CostFunction> {
        match &self.cost {
            CostSource::Inline(f) => Ok(f.clone()),
            CostSource::File { file } => CostFunction::from_json(&std::fs::read_to_string(self.resolve(file))?),
        }
    }

    pub fn load_instance(&self, f: &CostFunction) -> Result<Instance> {
        match &self.instance {
            InstanceSource::Generator(g) => g.generate(Some(f)),
            InstanceSource::File(p) => Instance::from_json(&std::fs::read_to_string(self.resolve(p))?),
            InstanceSource::Inline(i) => Ok(i.clone()),
        }
    }
}

/// Outcome of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyResult {
    pub strategy: String,
    pub surrogate: Option<SurrogateSpec>,
    pub ps: Option<f64>,
    pub pstar: Option<f64>,
    pub ratio: Option<f64>,
    pub alpha: Option<f64>,
    pub bound: Option<f64>,
    pub pass: bool,
    /// Cumulative true objective after each arrival.
    pub curve: Vec<f64>,
    pub assumptions: Option<ValidationReport>,
    pub design: Option<DesignReport>,
    pub error: Option<String>,
}

impl StrategyResult {
    fn failed(name: &str, e: Error) -> Self {
        StrategyResult {
            strategy: name.to_string(),
            surrogate: None,
            ps: None,
            pstar: None,
            ratio: None,
            alpha: None,
            bound: None,
            pass: false,
            curve: Vec::new(),
            assumptions: None,
            design: None,
            error: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub variant: Variant,
    pub horizon: usize,
    pub dimension: usize,
    pub pstar: Option<f64>,
    pub strategies: Vec<StrategyResult>,
}

impl ExperimentReport {
    pub fn all_passed(&self) -> bool {
        self.strategies.iter().all(|s| s.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn get(&self, strategy: &str) -> Option<&StrategyResult> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }
}

/// `P^s / P*`, taken as 1 when the optimum is zero.
pub fn empirical_ratio(ps: f64, pstar: f64) -> f64 {
    if pstar.abs() < ZERO_OPTIMUM {
        1.0
    } else {
        ps / pstar
    }
}

/// `1 / alpha`, with an unbounded ratio giving 0.
pub fn bound_of(alpha: f64) -> f64 {
    if alpha.is_finite() {
        1.0 / alpha
    } else {
        0.0
    }
}

struct Ctx<'a> {
    f: &'a CostFunction,
    inst: &'a Instance,
    variant: Variant,
    engine: EngineSpec,
    grid: &'a GridSpec,
    cfg: &'a SolverConfig,
    pstar: f64,
}

fn run_strategy(ctx: &Ctx<'_>, strategy: &Strategy) -> Result<StrategyResult> {
    let (t, d) = (ctx.inst.horizon(), ctx.inst.dimension());
    let mut design = None;
    let spec = match strategy {
        Strategy::Identity => SurrogateSpec::identity(ctx.f.clone()),
        Strategy::Poly => design_poly(ctx.f)?.spec,
        Strategy::Chan => design_chan(ctx.f)?,
        Strategy::Quasiconvex {
            grid_step,
            epsilon,
            alpha_upper,
        } => {
            let grid = GridSpec::for_variant(ctx.variant, t, d, *grid_step)?;
            let r = design_quasiconvex(ctx.f, ctx.variant, &grid, *epsilon, *alpha_upper, ctx.cfg)?;
            let s = r.design.clone();
            design = Some(r);
            s
        }
    };
    let fs = spec.expand();
    let assumptions = validate_assumptions(ctx.f, &spec, t, ctx.variant, ctx.grid, ctx.cfg);
    let alpha = match &design {
        Some(r) => r.alpha,
        None => alpha_ratio(ctx.f, &fs, ctx.variant, ctx.grid, ctx.cfg)?,
    };
    let record = match ctx.engine {
        EngineSpec::Simultaneous => run_simultaneous(ctx.inst, &fs, ctx.f, ctx.cfg)?,
        EngineSpec::Sequential { offset } => {
            run_sequential(ctx.inst, &fs, ctx.f, &vec![f64::from(offset); d], ctx.cfg)?
        }
    };
    let ps = record.objective;
    let ratio = empirical_ratio(ps, ctx.pstar);
    let bound = bound_of(alpha);
    Ok(StrategyResult {
        strategy: strategy.name().to_string(),
        surrogate: Some(spec),
        ps: Some(ps),
        pstar: Some(ctx.pstar),
        ratio: Some(ratio),
        alpha: Some(alpha),
        bound: Some(bound),
        pass: ratio >= bound - PASS_TOL,
        curve: record.steps.iter().map(|s| s.cumulative_objective).collect(),
        assumptions: Some(assumptions),
        design,
        error: None,
    })
}

/// Runs every strategy, in parallel, keeping the declared order. A failing
/// strategy is reported with `pass = false` and its error message.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let f = cfg.load_cost()?;
    let inst = cfg.load_instance(&f)?;
    if inst.dimension() != f.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.dimension(),
            got: inst.dimension(),
        });
    }
    let variant = cfg.engine.variant()?;
    let grid = GridSpec::for_variant(variant, inst.horizon(), inst.dimension(), cfg.grid_step)?;
    let offline = solve_offline(&inst, &f, &cfg.solver);
    let (horizon, dimension) = (inst.horizon(), inst.dimension());
    let strategies = match offline {
        Ok(sol) => {
            let ctx = Ctx {
                f: &f,
                inst: &inst,
                variant,
                engine: cfg.engine,
                grid: &grid,
                cfg: &cfg.solver,
                pstar: sol.objective,
            };
            cfg.strategies
                .par_iter()
                .map(|s| run_strategy(&ctx, s).unwrap_or_else(|e| StrategyResult::failed(s.name(), e)))
                .collect::<Vec<_>>()
        }
        Err(e) => cfg
            .strategies
            .iter()
            .map(|s| StrategyResult::failed(s.name(), Error::Domain(format!("offline optimum failed: {e}"))))
            .collect(),
    };
    Ok(ExperimentReport {
        variant,
        horizon,
        dimension,
        pstar: strategies.iter().find_map(|s| s.pstar),
        strategies,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Curve rows `t, strategy, cumulative_objective`.
pub fn curves_csv(report: &ExperimentReport) -> Result<Vec<u8>> {
    let header: Vec<String> = ["t", "strategy", "cumulative_objective"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for s in &report.strategies {
        for (i, v) in s.curve.iter().enumerate() {
            rows.push(vec![(i + 1).to_string(), s.strategy.clone(), fmt_f64(*v)]);
        }
    }
    csv_bytes(&header, &rows)
}

/// Summary rows `strategy, Ps, Pstar, ratio, bound, pass`.
pub fn summary_csv(report: &ExperimentReport) -> Result<Vec<u8>> {
    let header: Vec<String> = ["strategy", "Ps", "Pstar", "ratio", "bound", "pass"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = report
        .strategies
        .iter()
        .map(|s| {
            vec![
                s.strategy.clone(),
                opt(s.ps),
                opt(s.pstar),
                opt(s.ratio),
                opt(s.bound),
                s.pass.to_string(),
            ]
        })
        .collect();
    csv_bytes(&header, &rows)
}

/// Writes `curves.csv` and `summary.csv` into `dir`, each atomically.
pub fn emit_csv(report: &ExperimentReport, dir: &Path) -> Result<()> {
    let curves = curves_csv(report)?;
    let summary = summary_csv(report)?;
    write_atomic(&dir.join("curves.csv"), &curves)?;
    write_atomic(&dir.join("summary.csv"), &summary)
}
