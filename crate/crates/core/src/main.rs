use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use procura::cost_model::{CostFunction, SurrogateSpec};
use procura::harness::{bound_of, emit_csv, run_experiment, ExperimentConfig, InstanceSource};
use procura::instances::{gen_adversarial_gradient, gen_adversarial_scalar, gen_random_linear, GeneratorSpec};
use procura::io::write_atomic;
use procura::offline::{solve_offline, Instance};
use procura::online::{run_sequential, run_simultaneous};
use procura::surrogate::{alpha_ratio, design_chan, design_poly, design_quasiconvex};
use procura::{Error, GridSpec, Result, SolverConfig, Variant};

#[derive(Parser)]
#[command(
    name = "procura",
    version,
    about = "Online allocation with increasing procurement costs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a surrogate cost and report its ratio bound.
    Design(DesignArgs),
    /// Run an online engine on an instance.
    Run(RunArgs),
    /// Solve the offline problem.
    Offline(OfflineArgs),
    /// Run an experiment config and export CSVs.
    Experiment(ExperimentArgs),
    /// Generate an instance.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct Common {
    /// Solver config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn solver(&self) -> Result<SolverConfig> {
        let mut cfg: SolverConfig = match &self.config {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
            None => SolverConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => write_atomic(p, text.as_bytes()),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Identity,
    Poly,
    Chan,
    Quasiconvex,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    common: Common,
    /// Cost function JSON.
    #[arg(long)]
    cost: PathBuf,
    #[arg(long, value_enum, default_value = "quasiconvex")]
    method: Method,
    #[arg(long, default_value = "sim")]
    variant: Variant,
    #[arg(long, default_value_t = 10)]
    horizon: usize,
    #[arg(long, default_value_t = 0.1)]
    grid_step: f64,
    #[arg(long, default_value_t = 0.005)]
    epsilon: f64,
    #[arg(long)]
    alpha_upper: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    cost: PathBuf,
    #[arg(long)]
    instance: PathBuf,
    /// Surrogate spec JSON; overrides --method.
    #[arg(long)]
    surrogate: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "poly")]
    method: Method,
    #[arg(long, default_value = "sim")]
    variant: Variant,
    /// Posted-price offset; selects the sequential engine.
    #[arg(long)]
    offset: Option<f64>,
}

#[derive(Args)]
struct OfflineArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    cost: PathBuf,
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the solver seed and any random generator seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Scalar,
    Gradient,
    Random,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long)]
    horizon: usize,
    /// Cost function JSON, for `gradient`.
    #[arg(long)]
    cost: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    dimension: usize,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_cost(p: &Path) -> Result<CostFunction> {
    CostFunction::from_json(&std::fs::read_to_string(p)?)
}

fn read_instance(p: &Path) -> Result<Instance> {
    Instance::from_json(&std::fs::read_to_string(p)?)
}

fn build_surrogate(
    f: &CostFunction,
    method: Method,
    variant: Variant,
    grid: &GridSpec,
    epsilon: f64,
    alpha_upper: Option<f64>,
    cfg: &SolverConfig,
) -> Result<(SurrogateSpec, serde_json::Value)> {
    Ok(match method {
        Method::Identity => (SurrogateSpec::identity(f.clone()), json!(null)),
        Method::Poly => {
            let d = design_poly(f)?;
            let extra = json!({"rho": d.rho, "tau": d.tau, "closed_form_bound": d.bound});
            (d.spec, extra)
        }
        Method::Chan => (design_chan(f)?, json!(null)),
        Method::Quasiconvex => {
            let r = design_quasiconvex(f, variant, grid, epsilon, alpha_upper, cfg)?;
            (r.design.clone(), serde_json::to_value(&r)?)
        }
    })
}

fn design(a: &DesignArgs) -> Result<bool> {
    let cfg = a.common.solver()?;
    let f = read_cost(&a.cost)?;
    let grid = GridSpec::for_variant(a.variant, a.horizon, f.dimension(), a.grid_step)?;
    let (spec, detail) = build_surrogate(&f, a.method, a.variant, &grid, a.epsilon, a.alpha_upper, &cfg)?;
    let alpha = alpha_ratio(&f, &spec.expand(), a.variant, &grid, &cfg)?;
    let out = json!({
        "variant": a.variant,
        "surrogate": spec,
        "alpha": if alpha.is_finite() { json!(alpha) } else { json!(null) },
        "bound": bound_of(alpha),
        "detail": detail,
    });
    a.common.emit(&(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(true)
}

fn run(a: &RunArgs) -> Result<bool> {
    let cfg = a.common.solver()?;
    let f = read_cost(&a.cost)?;
    let inst = read_instance(&a.instance)?;
    let variant = match a.offset {
        Some(0.0) => Variant::Seq0,
        Some(1.0) => Variant::Seq1,
        _ => a.variant,
    };
    let spec = match &a.surrogate {
        Some(p) => serde_json::from_str::<SurrogateSpec>(&std::fs::read_to_string(p)?)?,
        None => {
            let grid = GridSpec::for_variant(variant, inst.horizon(), inst.dimension(), 0.1)?;
            build_surrogate(&f, a.method, variant, &grid, 0.005, None, &cfg)?.0
        }
    };
    let fs = spec.expand();
    let offset = match (a.offset, variant) {
        (Some(o), _) => Some(o),
        (None, Variant::Sim) => None,
        (None, Variant::Seq0) => Some(0.0),
        (None, Variant::Seq1) => Some(1.0),
    };
    let record = match offset {
        None => run_simultaneous(&inst, &fs, &f, &cfg)?,
        Some(o) => run_sequential(&inst, &fs, &f, &vec![o; inst.dimension()], &cfg)?,
    };
    let csv = record.to_csv()?;
    match &a.common.out {
        Some(p) => write_atomic(p, &csv)?,
        None => print!("{}", String::from_utf8_lossy(&csv)),
    }
    eprintln!("objective {}", record.objective);
    Ok(true)
}

fn offline(a: &OfflineArgs) -> Result<bool> {
    let cfg = a.common.solver()?;
    let sol = solve_offline(&read_instance(&a.instance)?, &read_cost(&a.cost)?, &cfg)?;
    let csv = sol.to_csv()?;
    match &a.common.out {
        Some(p) => write_atomic(p, &csv)?,
        None => print!("{}", String::from_utf8_lossy(&csv)),
    }
    eprintln!("objective {}", sol.objective);
    Ok(sol.converged)
}

fn experiment(a: &ExperimentArgs) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_file(&a.config)?;
    if let Some(s) = a.seed {
        cfg.solver.seed = s;
        if let InstanceSource::Generator(GeneratorSpec::RandomLinear { seed, .. }) = &mut cfg.instance {
            *seed = s;
        }
    }
    let report = run_experiment(&cfg)?;
    let dir = a.out.clone().or_else(|| cfg.output_dir.clone());
    if let Some(dir) = dir {
        std::fs::create_dir_all(&dir)?;
        emit_csv(&report, &dir)?;
        write_atomic(&dir.join("report.json"), (report.to_json() + "\n").as_bytes())?;
    }
    for s in &report.strategies {
        match &s.error {
            Some(e) => println!("{}\tFAIL\terror: {e}", s.strategy),
            None => println!(
                "{}\t{}\tratio {} bound {}",
                s.strategy,
                if s.pass { "PASS" } else { "FAIL" },
                s.ratio.unwrap_or(f64::NAN),
                s.bound.unwrap_or(f64::NAN)
            ),
        }
    }
    Ok(report.all_passed())
}

fn generate(a: &GenerateArgs) -> Result<bool> {
    let inst = match a.kind {
        Kind::Scalar => gen_adversarial_scalar(a.horizon)?,
        Kind::Gradient => {
            let p = a
                .cost
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("gradient instances need --cost".into()))?;
            gen_adversarial_gradient(&read_cost(p)?, a.horizon)?
        }
        Kind::Random => gen_random_linear(a.horizon, a.dimension, (a.lo, a.hi), a.seed)?,
    };
    let text = inst.to_json() + "\n";
    match &a.out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Design(a) => design(a),
        Command::Run(a) => run(a),
        Command::Offline(a) => offline(a),
        Command::Experiment(a) => experiment(a),
        Command::Generate(a) => generate(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
