use mislearn_core::learning::{
    monte_carlo_convergence, posterior_exact_density, simulate, ExactPosterior, Learner, LimitingOde, McConfig,
    Prior, SimConfig, SteadyStateKind,
};
use mislearn_core::truncnorm::TruncatedNormal;
use mislearn_core::{build_lq, LqParams, ModelPrimitives, Scenario};
use proptest::prelude::*;

fn unit(delta: f64) -> ModelPrimitives {
    let p = LqParams::from_lambdas(1.0, 1.0, 1.0, 1.0).unwrap();
    build_lq(p, Scenario::new(0.0, 2.0, delta, 0.3, 3.0)).unwrap()
}

#[test]
fn shadowing_after_burn_in() {
    let learner = Learner::from_model(&unit(-0.5)).unwrap();
    let ode = LimitingOde::new(&learner);
    let (n0, steps) = (10_000u64, 1_000u64);
    for seed in 1..=4 {
        let mut cfg = SimConfig::new(n0 + steps, seed);
        cfg.stride = 1;
        let t = simulate(&learner, Prior::Uniform, &cfg).unwrap();
        let path = &t.samples()[n0 as usize - 1..];
        assert_eq!(path[0].n, n0);
        let (mut m, mut xi) = (path[0].m, path[0].xi);
        let mut worst: f64 = 0.0;
        for s in &path[1..] {
            let f = ode.field(m, xi).unwrap();
            let gamma = 1.0 / s.n as f64;
            m += gamma * f[0];
            xi += gamma * f[1];
            worst = worst.max((s.m - m).abs()).max((s.xi - xi).abs());
        }
        assert!(worst < 0.02, "seed {seed}: left the tube by {worst}");
    }
}

#[test]
fn unique_sink_collects_every_run() {
    let learner = Learner::from_model(&unit(-0.5)).unwrap();
    let mut cfg = McConfig::new(64, 20_000, 5);
    cfg.checkpoints = vec![1_000, 10_000];
    let r = monte_carlo_convergence(&learner, &cfg).unwrap();
    assert_eq!(r.steady_states.len(), 1);
    assert_eq!(r.terminal().counts, vec![64]);
    assert_eq!(r.terminal().saddle_hits, 0);
}

/// Both sinks are asserted to attract a positive share of uniform-prior runs.
/// On this instance the corner sink has not been observed in 10⁵ runs, so
/// the assertion is expected to fail; see the README.
#[test]
#[ignore]
fn uniform_prior_reaches_both_sinks() {
    let learner = Learner::from_model(&unit(0.5)).unwrap();
    let r = monte_carlo_convergence(&learner, &McConfig::new(200, 100_000, 6)).unwrap();
    let fin = r.terminal();
    for (s, c) in r.steady_states.iter().zip(&fin.counts) {
        if s.state.kind == SteadyStateKind::Sink {
            assert!(*c > 0, "sink at m̂ = {} never reached: {:?}", s.state.m_hat, fin.counts);
        }
    }
}

#[test]
fn phase_field_flips_across_saddle() {
    let learner = Learner::from_model(&unit(0.5)).unwrap();
    let ode = LimitingOde::new(&learner);
    let ss = ode.steady_states().unwrap();
    let saddle = ss.iter().find(|s| s.kind == SteadyStateKind::Saddle).unwrap();
    let (mr, xr) = ode.default_window().unwrap();
    let field = ode.phase_field(mr, xr, 41, 11).unwrap();
    for p in &field.points {
        if (p.m - saddle.m_hat).abs() > 0.05 && p.m > ss[2].m_hat + 0.05 && p.m < ss[0].m_hat - 0.05 {
            assert_eq!(p.f1 > 0.0, p.m > saddle.m_hat, "{p:?}");
        }
    }
}

#[test]
fn same_seed_same_path() {
    let learner = Learner::from_model(&unit(0.5)).unwrap();
    let cfg = SimConfig::new(3_000, 17);
    let a = simulate(&learner, Prior::Uniform, &cfg).unwrap();
    let b = simulate(&learner, Prior::Uniform, &cfg).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_posterior_is_truncated_normal(
        obs in prop::collection::vec((0.05f64..0.9, -3.0f64..3.0), 1..50),
        point in 0.0f64..1.0,
    ) {
        let model = unit(0.5);
        let learner = Learner::from_model(&model).unwrap();
        let tm = learner.transformed();
        let sup = tm.support();
        let history: Vec<(f64, f64)> = obs
            .iter()
            .map(|&(h, z)| (h, model.mu_star() + tm.g2(h) * 4.0 + z / h.sqrt()))
            .collect();
        let exact = ExactPosterior::new(tm, &history, model.mu_hat()).unwrap();
        let (num, den) = history.iter().fold((0.0, 0.0), |(n, d), &(h, x)| {
            (n + h * tm.g2(h) * (x - model.mu_hat()), d + tm.fisher_information(h))
        });
        let tn = TruncatedNormal::new(num / den, den.sqrt().recip(), sup.lower, sup.upper);
        let x = sup.lower + point * sup.width();
        prop_assert!((exact.density(x) - tn.pdf(x)).abs() < 1e-10);
        prop_assert_eq!(posterior_exact_density(tm, &history, model.mu_hat(), x).unwrap(), exact.density(x));
    }
}
