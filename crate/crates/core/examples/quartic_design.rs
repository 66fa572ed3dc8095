use procura::cost_model::CostFunction;
use procura::surrogate::design_quasiconvex;
use procura::{GridSpec, SolverConfig, Variant};

fn main() {
    let f = CostFunction::quartic_plus_square();
    let grid = GridSpec::for_variant(Variant::Sim, 10, 2, 0.1).unwrap();
    let t = std::time::Instant::now();
    let r = design_quasiconvex(&f, Variant::Sim, &grid, 0.005, None, &SolverConfig::default()).unwrap();
    println!(
        "alpha {} bound {} achieved {} weights {:?}",
        r.alpha, r.bound, r.achieved_alpha, r.weights
    );
    println!(
        "steps {} evaluations {} elapsed {:?}",
        r.trace.len(),
        r.evaluations,
        t.elapsed()
    );
}
