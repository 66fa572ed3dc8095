use proptest::prelude::*;

use procura::cost_model::{conjugate_cost, CostFunction, MonomialTerm, SurrogateSpec, Valuation};
use procura::instances::{gen_adversarial_scalar, gen_random_linear};
use procura::offline::{dual_objective, solve_offline, Instance};
use procura::online::{posted_price, run_sequential, run_simultaneous};
use procura::surrogate::{alpha_ratio, design_poly, design_quasiconvex, optimal_rho, power_gap_slack, rho_objective};
use procura::{GridSpec, SolverConfig, Variant};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coercive monomial sums in one or two variables.
fn cost_strategy() -> impl Strategy<Value = CostFunction> {
    let pure = (0.3f64..3.0, prop::sample::select(vec![2.0, 2.5, 3.0, 4.0]));
    prop_oneof![
        pure.clone().prop_map(|(c, e)| CostFunction::power(c, e).unwrap()),
        (pure.clone(), pure, prop::option::of((0.1f64..1.0, 1u8..3))).prop_map(|((c1, e1), (c2, e2), cross)| {
            let mut terms = vec![
                MonomialTerm::new(c1, vec![e1, 0.0]).unwrap(),
                MonomialTerm::new(c2, vec![0.0, e2]).unwrap(),
            ];
            if let Some((c, k)) = cross {
                terms.push(MonomialTerm::new(c, vec![f64::from(k), 1.0]).unwrap());
            }
            CostFunction::new(2, terms, None).unwrap()
        }),
    ]
}

fn point(d: usize, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..hi, d)
}

fn valuation(d: usize) -> impl Strategy<Value = Valuation> {
    (prop::collection::vec(0.0f64..10.0, d), prop::option::of(0.3f64..1.0)).prop_map(|(c, p)| match p {
        None => Valuation::linear(c).unwrap(),
        Some(p) => Valuation::concave_power(c, p).unwrap(),
    })
}

fn instance(d: usize, t_max: usize) -> impl Strategy<Value = Instance> {
    prop::collection::vec(valuation(d), 1..=t_max).prop_map(move |v| Instance::new(d, v).unwrap())
}

fn cost_and_points() -> impl Strategy<Value = (CostFunction, Vec<f64>, Vec<f64>)> {
    cost_strategy().prop_flat_map(|f| {
        let d = f.dimension();
        (Just(f), point(d, 3.0), point(d, 10.0))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fenchel_young((f, u, lambda) in cost_and_points()) {
        let fu = f.eval(&u).unwrap();
        let c = conjugate_cost(&f, &lambda, &cfg()).unwrap().value;
        prop_assert!(fu + c >= dot(&lambda, &u) - 1e-8 * (1.0 + fu));
        let g = f.gradient(&u).unwrap();
        let at = conjugate_cost(&f, &g, &cfg()).unwrap().value;
        prop_assert!((fu + at - dot(&g, &u)).abs() <= 1e-5 * (1.0 + dot(&g, &u).abs()));
    }

    #[test]
    fn gradient_matches_central_differences((f, u, _l) in cost_and_points()) {
        let u: Vec<f64> = u.iter().map(|x| x + 0.1).collect();
        let g = f.gradient(&u).unwrap();
        let h = 1e-6;
        for i in 0..u.len() {
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (f.eval(&up).unwrap() - f.eval(&dn).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-4 * (1.0 + g[i].abs()), "{} vs {}", fd, g[i]);
        }
    }

    #[test]
    fn scaled_expansion_is_exact((f, u, _l) in cost_and_points(), rho in 1.01f64..4.0) {
        let fs = SurrogateSpec::scaled(f.clone(), rho).unwrap().expand();
        let ru: Vec<f64> = u.iter().map(|x| rho * x).collect();
        let want = f.eval(&ru).unwrap() / rho;
        prop_assert!((fs.eval(&u).unwrap() - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn gradient_is_monotone((f, u, step) in cost_and_points()) {
        let w: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a + b / 10.0).collect();
        let (gu, gw) = (f.gradient(&u).unwrap(), f.gradient(&w).unwrap());
        for (a, b) in gu.iter().zip(&gw) {
            prop_assert!(*a <= b + cfg().grad_tol);
        }
    }

    #[test]
    fn linear_conjugate_at_gradient_is_zero(c in prop::collection::vec(0.0f64..10.0, 1..4), x in 0.0f64..1.0) {
        let v = Valuation::linear(c.clone()).unwrap();
        prop_assert_eq!(v.conjugate_at_gradient(&vec![x; c.len()]).unwrap(), 0.0);
    }

    #[test]
    fn offline_optimum_is_nonnegative_and_weakly_dual(inst in instance(1, 5), seeds in prop::collection::vec((0.0f64..1.0, 0.0f64..4.0), 5)) {
        let f = CostFunction::power(1.0, 2.0).unwrap();
        let pstar = solve_offline(&inst, &f, &cfg()).unwrap().objective;
        prop_assert!(pstar >= 0.0);
        // Dual points from gradients of the valuations and of f.
        let zs: Vec<Vec<f64>> = inst
            .valuations()
            .iter()
            .zip(&seeds)
            .map(|(v, (x, _))| v.gradient(&[x.max(1e-3)]).unwrap())
            .collect();
        let lambda = f.gradient(&[seeds[0].1]).unwrap();
        let d = dual_objective(&inst, &f, &lambda, &zs, &cfg()).unwrap();
        prop_assert!(d >= pstar - 1e-6 * (1.0 + pstar), "{} < {}", d, pstar);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn online_invariants(inst in instance(2, 6)) {
        let f = CostFunction::quartic_plus_square();
        let fs = design_poly(&f).unwrap().spec.expand();
        let pstar = solve_offline(&inst, &f, &cfg()).unwrap().objective;

        let sim = run_simultaneous(&inst, &fs, &f, &cfg()).unwrap();
        let seq1 = run_sequential(&inst, &fs, &f, &[1.0, 1.0], &cfg()).unwrap();
        for r in [&sim, &seq1] {
            let margin = r.total_value() - fs.eval(&r.total_allocation()).unwrap();
            prop_assert!(margin >= -1e-6, "{}", margin);
            prop_assert!(r.objective <= pstar + 1e-4);
            let prices = r.prices();
            for w in prices.windows(2) {
                for (a, b) in w[0].iter().zip(&w[1]) {
                    prop_assert!(a <= b);
                }
            }
        }
        let grid = GridSpec::for_variant(Variant::Sim, inst.horizon(), 2, 0.25).unwrap();
        let alpha = alpha_ratio(&f, &fs, Variant::Sim, &grid, &cfg()).unwrap();
        prop_assert!(sim.objective >= pstar / alpha - 1e-4);
    }

    #[test]
    fn posted_price_depends_on_state_only(s in point(2, 5.0), offset in prop::sample::select(vec![0.0, 1.0])) {
        let fs = CostFunction::quartic_plus_square();
        let a = posted_price(&fs, &s, &[offset; 2]).unwrap();
        let b = posted_price(&fs, &s, &[offset; 2]).unwrap();
        prop_assert_eq!(&a, &b);
        let shifted: Vec<f64> = s.iter().map(|x| x + offset).collect();
        prop_assert_eq!(a, fs.gradient(&shifted).unwrap());
    }

    #[test]
    fn power_gap_inequality(rho in 1.001f64..10.0, b in 0.0f64..6.0, frac in 0.0f64..=1.0) {
        prop_assert!(power_gap_slack(rho, frac * b, b) >= -1e-9);
    }

    #[test]
    fn optimal_rho_is_minimal(tau in 2.0f64..8.0, rho in 1.0001f64..20.0) {
        let best = optimal_rho(tau).unwrap();
        prop_assert!(best.objective <= rho_objective(tau, rho) * (1.0 + 1e-12));
    }

    #[test]
    fn generated_instances_are_valid(t in 1usize..20, d in 1usize..4, lo in 0.0f64..5.0, w in 0.0f64..5.0, seed: u64) {
        let inst = gen_random_linear(t, d, (lo, lo + w), seed).unwrap();
        prop_assert_eq!(inst.horizon(), t);
        prop_assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
        let half = t.div_ceil(2);
        let sc = gen_adversarial_scalar(2 * half).unwrap();
        let c: Vec<f64> = sc.valuations().iter().map(|v| v.coefficients()[0]).collect();
        prop_assert!(c.windows(2).all(|w| w[0] < w[1]));
    }
}

/// SIM ratio of a weighted surrogate at one point.
fn point_ratio(f: &CostFunction, a: &[f64], u: &[f64]) -> Option<f64> {
    let fs = SurrogateSpec::weighted(f.clone(), a.to_vec()).unwrap().expand();
    let den = fs.eval(u).unwrap() - f.eval(u).unwrap();
    if den < 1e-9 {
        return None;
    }
    Some(conjugate_cost(f, &fs.gradient(u).unwrap(), &cfg()).unwrap().value / den)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ratio_is_quasiconvex_in_weights(
        a1 in prop::collection::vec(1.0f64..6.0, 2),
        a2 in prop::collection::vec(1.0f64..6.0, 2),
        theta in 0.0f64..=1.0,
    ) {
        let f = CostFunction::quartic_plus_square();
        let mid: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| theta * x + (1.0 - theta) * y).collect();
        for i in 0..=3 {
            for j in 0..=3 {
                let u = [i as f64, j as f64];
                if let (Some(r1), Some(r2), Some(rm)) =
                    (point_ratio(&f, &a1, &u), point_ratio(&f, &a2, &u), point_ratio(&f, &mid, &u))
                {
                    prop_assert!(rm <= r1.max(r2) + 1e-6 * (1.0 + r1.max(r2)), "{} > max({}, {}) at {:?}", rm, r1, r2, u);
                }
            }
        }
    }
}

#[test]
fn design_is_consistent_and_dominates_poly_on_monomials() {
    for p in [2.0, 3.0, 4.0] {
        let f = CostFunction::power(1.0, p).unwrap();
        let grid = GridSpec::for_variant(Variant::Sim, 6, 1, 0.1).unwrap();
        let eps = 0.01;
        let r = design_quasiconvex(&f, Variant::Sim, &grid, eps, None, &cfg()).unwrap();
        let again = alpha_ratio(&f, &r.design.expand(), Variant::Sim, &grid, &cfg()).unwrap();
        assert!(again <= r.alpha + cfg().feas_tol, "p = {p}: {again} > {}", r.alpha);
        let poly = design_poly(&f).unwrap();
        assert!(r.bound >= poly.bound - eps, "p = {p}: {} < {}", r.bound, poly.bound);
        for w in r.trace.windows(2) {
            assert!(w[1].upper <= w[0].upper && w[1].lower >= w[0].lower);
        }
        let last = r.trace.last().unwrap();
        assert!(last.upper - last.lower <= eps);
    }
}
