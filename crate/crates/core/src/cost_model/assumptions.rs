use serde::Serialize;

use super::cost::CostFunction;
use super::surrogate_spec::SurrogateSpec;
use crate::config::SolverConfig;
use crate::grid::{GridSpec, Variant};
use crate::rng::Rng;

const CONVEXITY_SAMPLES: usize = 400;

/// Outcome of one checked clause.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseResult {
    pub name: String,
    pub passed: bool,
    /// Largest violation seen (0 when none).
    pub worst_violation: f64,
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub variant: Variant,
    pub clauses: Vec<ClauseResult>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn clause(&self, name: &str) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

struct Clause {
    name: String,
    worst: f64,
    witness: Option<Vec<f64>>,
}

impl Clause {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            worst: 0.0,
            witness: None,
        }
    }

    /// Records `violation` (positive means violated beyond `tol`).
    fn record(&mut self, violation: f64, tol: f64, at: &[f64]) {
        let excess = violation - tol;
        if (excess > 0.0 || violation.is_nan()) && !(violation <= self.worst) {
            self.worst = violation;
            self.witness = Some(at.to_vec());
        }
    }

    fn finish(self) -> ClauseResult {
        ClauseResult {
            passed: self.witness.is_none(),
            name: self.name,
            worst_violation: self.worst,
            witness: self.witness,
        }
    }
}

fn tol_for(a: f64, b: f64) -> f64 {
    1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Grid points inside `[0, bound]^D` with their multi-indices.
struct Lattice {
    axes: Vec<Vec<f64>>,
    limits: Vec<usize>,
}

impl Lattice {
    fn new(grid: &GridSpec, bound: f64) -> Self {
        let axes: Vec<Vec<f64>> = (0..grid.dimension())
            .map(|d| grid.axis(d).into_iter().filter(|v| *v <= bound + 1e-12).collect())
            .collect();
        let limits = axes.iter().map(|a| a.len()).collect();
        Self { axes, limits }
    }

    fn for_each(&self, mut visit: impl FnMut(&[usize], &[f64])) {
        let d = self.axes.len();
        if self.limits.contains(&0) {
            return;
        }
        let mut idx = vec![0usize; d];
        let mut pt = vec![0.0; d];
        loop {
            for k in 0..d {
                pt[k] = self.axes[k][idx[k]];
            }
            visit(&idx, &pt);
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.limits[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// Point one step further along coordinate `k`, if on the lattice.
    fn successor(&self, idx: &[usize], pt: &[f64], k: usize) -> Option<Vec<f64>> {
        if idx[k] + 1 >= self.limits[k] {
            return None;
        }
        let mut q = pt.to_vec();
        q[k] = self.axes[k][idx[k] + 1];
        Some(q)
    }

    fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.axes.iter().map(|a| a[rng.below(a.len())]).collect()
    }
}

fn check_function(prefix: &str, h: &CostFunction, lattice: &Lattice, rng: &mut Rng, out: &mut Vec<ClauseResult>) {
    let d = h.dimension();
    let mut zero = Clause::new(format!("{prefix}_zero_at_origin"));
    let origin = vec![0.0; d];
    let v0 = h.eval_unchecked(&origin);
    zero.record(v0.abs(), 1e-12, &origin);
    out.push(zero.finish());

    let mut mono = Clause::new(format!("{prefix}_nondecreasing"));
    let mut gmono = Clause::new(format!("{prefix}_gradient_nondecreasing"));
    let mut ga = vec![0.0; d];
    let mut gb = vec![0.0; d];
    lattice.for_each(|idx, pt| {
        let fa = h.eval_unchecked(pt);
        let grad_ok = h.gradient(pt).is_ok();
        if grad_ok {
            h.gradient_into(pt, &mut ga);
        }
        for k in 0..d {
            if let Some(q) = lattice.successor(idx, pt, k) {
                let fb = h.eval_unchecked(&q);
                mono.record(fa - fb, tol_for(fa, fb), pt);
                if grad_ok {
                    h.gradient_into(&q, &mut gb);
                    for i in 0..d {
                        gmono.record(ga[i] - gb[i], tol_for(ga[i], gb[i]), pt);
                    }
                }
            }
        }
    });
    out.push(mono.finish());
    out.push(gmono.finish());

    let mut convex = Clause::new(format!("{prefix}_convex_sampled"));
    for _ in 0..CONVEXITY_SAMPLES {
        let a = lattice.sample(rng);
        let b = lattice.sample(rng);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let fa = h.eval_unchecked(&a);
        let fb = h.eval_unchecked(&b);
        let fm = h.eval_unchecked(&mid);
        convex.record(fm - 0.5 * (fa + fb), tol_for(fa, fb), &mid);

        // Second difference along a random direction.
        let c = lattice.sample(rng);
        let dir: Vec<f64> = (0..d).map(|_| rng.range(-1.0, 1.0)).collect();
        let step = c
            .iter()
            .zip(&dir)
            .map(|(x, v)| if *v < 0.0 { x / -v } else { f64::INFINITY })
            .fold(1.0f64, f64::min)
            * 0.5;
        if step > 1e-6 {
            let p: Vec<f64> = c.iter().zip(&dir).map(|(x, v)| x + step * v).collect();
            let m: Vec<f64> = c.iter().zip(&dir).map(|(x, v)| (x - step * v).max(0.0)).collect();
            let (fp, fc, fm) = (h.eval_unchecked(&p), h.eval_unchecked(&c), h.eval_unchecked(&m));
            convex.record(2.0 * fc - fp - fm, tol_for(fp, fm), &c);
        }
    }
    out.push(convex.finish());
}

/// Numerically checks the cost and surrogate assumptions for `variant` on `grid`.
pub fn validate_assumptions(
    f: &CostFunction,
    fs: &SurrogateSpec,
    horizon: usize,
    variant: Variant,
    grid: &GridSpec,
    cfg: &SolverConfig,
) -> ValidationReport {
    let mut clauses = Vec::new();
    let mut warnings = Vec::new();
    let d = f.dimension();
    let region = variant.region_upper(horizon);

    let mut cover = Clause::new("grid_coverage");
    let compatible = grid.dimension() == d && fs.base().dimension() == d;
    if !compatible {
        cover.record(f64::INFINITY, 0.0, &[]);
    } else if !grid.covers(&vec![region; d]) {
        cover.record(
            region - grid.upper().iter().cloned().fold(f64::INFINITY, f64::min),
            0.0,
            grid.upper(),
        );
    }
    clauses.push(cover.finish());
    if !compatible {
        return ValidationReport {
            variant,
            clauses,
            warnings,
        };
    }

    let f_s = fs.expand();
    let mut rng = Rng::new(cfg.seed);
    let full = Lattice::new(grid, f64::INFINITY);
    check_function("f", f, &full, &mut rng, &mut clauses);
    check_function("fs", &f_s, &full, &mut rng, &mut clauses);

    let lattice = Lattice::new(grid, region);
    let mut dom = Clause::new("dominance");
    let mut max_gap: f64 = 0.0;
    lattice.for_each(|_, pt| {
        let a = f.eval_unchecked(pt);
        let b = f_s.eval_unchecked(pt);
        max_gap = max_gap.max(b - a);
        dom.record(a - b, tol_for(a, b), pt);
    });
    clauses.push(dom.finish());
    if max_gap <= 1e-12 {
        warnings.push("surrogate coincides with f on the grid; the ratio bound is infinite".into());
    }

    if variant == Variant::Seq1 {
        let mut incr = Clause::new("increasing_difference");
        lattice.for_each(|idx, pt| {
            let ga = f_s.eval_unchecked(pt) - f.eval_unchecked(pt);
            for k in 0..d {
                if let Some(q) = lattice.successor(idx, pt, k) {
                    let gb = f_s.eval_unchecked(&q) - f.eval_unchecked(&q);
                    incr.record(ga - gb, tol_for(f_s.eval_unchecked(&q), 0.0), pt);
                }
            }
        });
        clauses.push(incr.finish());
    }

    ValidationReport {
        variant,
        clauses,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_model::MonomialTerm;

    fn grid(t: usize) -> GridSpec {
        GridSpec::new(vec![t as f64], 0.1).unwrap()
    }

    #[test]
    fn doubled_square_passes() {
        let f = CostFunction::power(1.0, 2.0).unwrap();
        let fs = SurrogateSpec::weighted(f.clone(), vec![2.0]).unwrap();
        let r = validate_assumptions(&f, &fs, 10, Variant::Sim, &grid(10), &SolverConfig::default());
        assert!(r.all_passed(), "{r:?}");
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn identity_warns() {
        let f = CostFunction::power(1.0, 2.0).unwrap();
        let fs = SurrogateSpec::identity(f.clone());
        let r = validate_assumptions(&f, &fs, 10, Variant::Sim, &grid(10), &SolverConfig::default());
        assert!(r.clause("dominance").unwrap().passed);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn seq1_checks_increasing_difference() {
        let f = CostFunction::quartic_plus_square();
        let fs = SurrogateSpec::weighted(f.clone(), vec![3.0, 2.0]).unwrap();
        let g = GridSpec::for_variant(Variant::Seq1, 4, 2, 0.5).unwrap();
        let r = validate_assumptions(&f, &fs, 4, Variant::Seq1, &g, &SolverConfig::default());
        assert!(r.clause("increasing_difference").unwrap().passed);
        assert!(r.all_passed());
    }

    #[test]
    fn nonconvex_cost_is_caught() {
        // u1 * u2 is monotone but not convex.
        let f = CostFunction::new(2, vec![MonomialTerm::new(1.0, vec![1.0, 1.0]).unwrap()], None).unwrap();
        let fs = SurrogateSpec::weighted(f.clone(), vec![2.0]).unwrap();
        let g = GridSpec::new(vec![3.0, 3.0], 0.5).unwrap();
        let r = validate_assumptions(&f, &fs, 3, Variant::Sim, &g, &SolverConfig::default());
        assert!(!r.clause("f_convex_sampled").unwrap().passed);
    }

    #[test]
    fn short_grid_fails_coverage() {
        let f = CostFunction::power(1.0, 2.0).unwrap();
        let fs = SurrogateSpec::weighted(f.clone(), vec![2.0]).unwrap();
        let r = validate_assumptions(&f, &fs, 10, Variant::Sim, &grid(5), &SolverConfig::default());
        assert!(!r.clause("grid_coverage").unwrap().passed);
    }
}
