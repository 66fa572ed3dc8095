use procura::harness::{curves_csv, run_experiment, summary_csv, ExperimentConfig, PASS_TOL};

const QUARTIC: &str = r#"{"dimension":2,"terms":[{"coef":1,"exponents":[4,0]},{"coef":1,"exponents":[2,0]},
    {"coef":2,"exponents":[1,1]},{"coef":1,"exponents":[0,2]}],"basis":[[0],[1,2,3]]}"#;

fn gradient_experiment() -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"cost":{QUARTIC},
            "strategies":[{{"kind":"identity"}},{{"kind":"poly"}},{{"kind":"quasiconvex","grid_step":0.5,"epsilon":0.01}},{{"kind":"chan"}}],
            "engine":{{"kind":"simultaneous"}},
            "grid_step":0.5,
            "instance":{{"generator":{{"kind":"adversarial_gradient","T":10}}}}}}"#
    ))
    .unwrap()
}

#[test]
fn gradient_adversary_curves() {
    let r = run_experiment(&gradient_experiment()).unwrap();
    assert_eq!(r.strategies.len(), 4);
    for s in &r.strategies {
        assert!(s.error.is_none(), "{}: {:?}", s.strategy, s.error);
        assert_eq!(s.curve.len(), 10);
        assert!(s.pass);
        assert!(s.ratio.unwrap() >= s.bound.unwrap() - PASS_TOL);
    }
    let last = |name: &str| *r.get(name).unwrap().curve.last().unwrap();
    assert!(last("identity") < last("poly"));
    assert!(last("identity") < last("quasiconvex"));
}

#[test]
fn numbers_are_recoverable_from_csv() {
    let r = run_experiment(&gradient_experiment()).unwrap();
    let summary = String::from_utf8(summary_csv(&r).unwrap()).unwrap();
    let curves = String::from_utf8(curves_csv(&r).unwrap()).unwrap();
    for (line, s) in summary.lines().skip(1).zip(&r.strategies) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], s.strategy);
        let (ps, pstar, ratio, bound): (f64, f64, f64, f64) = (
            f[1].parse().unwrap(),
            f[2].parse().unwrap(),
            f[3].parse().unwrap(),
            f[4].parse().unwrap(),
        );
        assert_eq!(ps, s.ps.unwrap());
        assert_eq!(pstar, s.pstar.unwrap());
        assert_eq!(ratio, ps / pstar);
        assert_eq!(bound, s.bound.unwrap());
        assert_eq!(f[5] == "true", ratio >= bound - PASS_TOL);
        let final_curve: f64 = curves
            .lines()
            .rfind(|l| l.split(',').nth(1) == Some(s.strategy.as_str()))
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(final_curve, ps);
    }
}
